#include "navkit/mechanization.hpp"

#include "navkit/errors.hpp"

namespace navkit {

Vec3 transport_rate(Frame f, const Env& env) {
  return f == Frame::I ? Vec3::Zero() : earth_rate(f, env.world, 0.0, env.earth);
}

Vec3 proposed_anchor(Frame f, const Vec3& r0, const Env& env) {
  return from_center(f, r0, env.world);
}

Vec3 position(const NavState& s) { return s.r0 + s.x.p; }

Vec3 frame_velocity(const NavState& s, const Env& env) {
  if (s.grouping == Grouping::Traditional) return s.x.v;
  return s.x.v - transport_rate(s.frame, env).cross(s.x.p);
}

Vec3 ground_velocity(const NavState& s, const Env& env) {
  const Vec3 v = frame_velocity(s, env);
  if (s.frame != Frame::I) return v;
  return v - earth_rate(Frame::I, env.world, 0.0, env.earth).cross(position(s));
}

NavState make_state(Frame frame, Grouping grouping, const Mat3& C, const Vec3& v_frame,
                    const Vec3& r, const Vec3& r0, const Env& env) {
  NavState s{frame, Grouping::Traditional, {C, v_frame, r - r0}, r0, Vec3::Zero()};
  return grouping == Grouping::Proposed ? to_proposed(s, env) : s;
}

namespace {

struct Model {
  const Env& env;
  bool proposed;
  Frame frame;
  Vec3 w, r0, r0T;

  Model(const NavState& s, const Env& e)
      : env(e),
        proposed(s.grouping == Grouping::Proposed),
        frame(s.frame),
        w(transport_rate(s.frame, e)),
        r0(s.r0),
        r0T(proposed_anchor(s.frame, s.r0, e)) {}

  // Gravity column of W2: g for the traditional grouping, gamma - (w x)^2 r0 otherwise.
  Vec3 field(const Vec3& p) const {
    const Vec3 R = from_center(frame, r0 + p, env.world);
    const Vec3 c = proposed ? r0T : R;
    return gravitation(R, env.gravity, env.earth) - w.cross(w.cross(c));
  }
  Vec3 accel(const Mat3& C, const Vec3& v, const Vec3& p, const Vec3& f) const {
    return C * f - (proposed ? 1.0 : 2.0) * w.cross(v) + field(p);
  }
  Vec3 pdot(const Vec3& v, const Vec3& p) const {
    return proposed ? Vec3(v - w.cross(p)) : v;
  }
};

}  // namespace

Derivative derivative(const NavState& s, const ImuSample& imu, const Env& env, double) {
  const Model m(s, env);
  WDecomposition W;
  W.W1.block<3, 3>(0, 0) = skew(imu.omega_ib_b);
  W.W1.block<3, 1>(0, 3) = imu.f_ib_b;
  W.W1(3, 4) = 1.0;
  W.W2.block<3, 3>(0, 0) = -skew(m.w);
  W.W2.block<3, 1>(0, 3) = m.field(s.x.p);
  W.W2(3, 4) = -1.0;
  W.has_w34 = !m.proposed && s.frame != Frame::I;
  if (W.has_w34) {
    W.W3.block<3, 3>(0, 0) = -skew(m.w);
    W.W4.diagonal() << 0, 0, 0, 1, -1;
  }
  const Mat5 X = embed5(s.x);
  return {X * W.W1 + W.W2 * X + W.W3 * X * W.W4, W};
}

StateRates component_rates(const NavState& s, const ImuSample& imu, const Env& env) {
  const Model m(s, env);
  const Mat3& C = s.x.R;
  return {C * skew(imu.omega_ib_b) - skew(m.w) * C,
          m.accel(C, s.x.v, s.x.p, imu.f_ib_b), m.pdot(s.x.v, s.x.p)};
}

Increment advance_increment(const NavState& s, const ImuSample& imu, double dt, const Env& env,
                            Integrator integ) {
  const Model m(s, env);
  const Mat3 C0 = s.x.R;
  const Vec3& f = imu.f_ib_b;
  // exp(-w h) C0 exp(omega h) = C0 + B C0 + C0 A + B C0 A
  auto Cat = [&](double h) {
    const Mat3 A = so3_expm1(imu.omega_ib_b * h), BC = so3_expm1(-m.w * h) * C0;
    return Mat3(C0 + (BC + C0 * A + BC * A));
  };
  const Vec3 v = s.x.v, p = s.x.p;
  Increment out;
  out.R = Cat(dt);
  out.R -= 0.5 * out.R * (out.R.transpose() * out.R - Mat3::Identity());
  const Mat3 Cm = Cat(0.5 * dt);
  const Vec3 a1 = m.accel(C0, v, p, f), d1 = m.pdot(v, p);
  const Vec3 v2 = v + 0.5 * dt * a1, p2 = p + 0.5 * dt * d1;
  const Vec3 a2 = m.accel(Cm, v2, p2, f), d2 = m.pdot(v2, p2);
  if (integ == Integrator::Midpoint) {
    out.dv = dt * a2;
    out.dp = dt * d2;
    return out;
  }
  const Vec3 v3 = v + 0.5 * dt * a2, p3 = p + 0.5 * dt * d2;
  const Vec3 a3 = m.accel(Cm, v3, p3, f), d3 = m.pdot(v3, p3);
  const Vec3 v4 = v + dt * a3, p4 = p + dt * d3;
  const Vec3 a4 = m.accel(out.R, v4, p4, f), d4 = m.pdot(v4, p4);
  out.dv = dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
  out.dp = dt / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
  return out;
}

NavState advance(const NavState& s, const ImuSample& imu, double dt, const Env& env,
                 Integrator integ) {
  const Increment inc = advance_increment(s, imu, dt, env, integ);
  NavState out = s;
  out.x.R = inc.R;
  out.x.v = s.x.v + inc.dv;
  out.x.p = s.x.p + inc.dp;
  return out;
}

NavState step(const NavState& s, const ImuSample& imu, const Env& env, Integrator integ) {
  if (!(imu.dt > 0.0 && imu.dt <= 0.1 + 1e-12))
    throw std::invalid_argument("imu.dt must lie in (0, 0.1]");
  return advance(s, imu, imu.dt, env, integ);
}

ImuSample solve_step_inputs(const NavState& s, const Mat3& C1, const Vec3& v1, double dt,
                            const Env& env, Integrator integ) {
  const Vec3 w = transport_rate(s.frame, env);
  ImuSample u;
  u.dt = dt;
  u.omega_ib_b = so3_log(s.x.R.transpose() * so3_exp(w * dt) * C1) / dt;
  u.f_ib_b = s.x.R.transpose() * (v1 - s.x.v) / dt;
  for (int it = 0; it < 4; ++it) {
    const Vec3 r = advance(s, u, dt, env, integ).x.v - v1;
    if (r.norm() < 1e-15) break;
    Mat3 J;
    for (int k = 0; k < 3; ++k) {
      ImuSample e = u;
      e.f_ib_b[k] += 1.0;
      J.col(k) = advance(s, e, dt, env, integ).x.v - v1 - r;
    }
    u.f_ib_b -= J.partialPivLu().solve(r);
  }
  return u;
}

NavState to_proposed(const NavState& s, const Env& env) {
  if (s.grouping != Grouping::Traditional) throw FrameMismatch("state already proposed");
  NavState o = s;
  o.grouping = Grouping::Proposed;
  if (s.frame == Frame::I) {
    if (!s.dv0.isZero(0.0)) throw FrameMismatch("i-frame state carries a velocity anchor");
    return o;
  }
  const Vec3 w = transport_rate(s.frame, env);
  o.dv0 = w.cross(proposed_anchor(s.frame, s.r0, env));
  o.x.v = s.x.v + w.cross(s.x.p);
  return o;
}

NavState from_proposed(const NavState& s, const Env& env) {
  if (s.grouping != Grouping::Proposed) throw FrameMismatch("state is not proposed");
  NavState o = s;
  o.grouping = Grouping::Traditional;
  o.x.v = frame_velocity(s, env);
  o.dv0.setZero();
  return o;
}

NavState convert_frame(const NavState& s, Frame to, double t, const Env& env) {
  if (s.grouping == Grouping::Proposed)
    return to_proposed(convert_frame(from_proposed(s, env), to, t, env), env);
  if (s.frame == to) return s;
  const Vec3 w(0, 0, env.earth.omega_ie);
  const Mat3& Cew = env.world.C_e_w;
  Mat3 C = s.x.R;
  Vec3 v = s.x.v, r = position(s);
  if (s.frame == Frame::I) {
    const Mat3 T = frame_transform(Frame::I, Frame::E, env.world, t, env.earth).R;
    v = T * (v - w.cross(r));
    C = T * C;
    r = T * r;
  } else if (s.frame == Frame::W) {
    C = Cew.transpose() * C;
    v = Cew.transpose() * v;
    r = Cew.transpose() * r + env.world.r_ew_e;
  }
  if (to == Frame::I) {
    const Mat3 T = frame_transform(Frame::E, Frame::I, env.world, t, env.earth).R;
    v = T * (v + w.cross(r));
    C = T * C;
    r = T * r;
  } else if (to == Frame::W) {
    C = Cew * C;
    v = Cew * v;
    r = Cew * (r - env.world.r_ew_e);
  }
  const Transform T0 = frame_transform(s.frame, to, env.world, 0.0, env.earth);
  return make_state(to, Grouping::Traditional, C, v, r, T0.R * s.r0 + T0.o, env);
}

}  // namespace navkit
