#include "navkit/error_models.hpp"

#include "navkit/errors.hpp"

namespace navkit {

namespace {

void check_pair(const NavState& a, const NavState& b) {
  if (a.frame != b.frame || a.grouping != b.grouping ||
      (a.r0 - b.r0).norm() > 1e-9 * (1.0 + a.r0.norm()) ||
      (a.dv0 - b.dv0).norm() > 1e-9 * (1.0 + a.dv0.norm()))
    throw FrameMismatch("truth and estimate use different frames or anchors");
}

TangentVector flip(TangentVector xi) {
  xi.head<3>() = -xi.head<3>();
  return xi;
}

}  // namespace

SE23Element error_from_states(const NavState& truth, const NavState& est, ErrorConvention c) {
  check_pair(truth, est);
  return c == ErrorConvention::Right ? truth.x * se23_inverse(est.x)
                                     : se23_inverse(est.x) * truth.x;
}

TangentVector error_to_vector(const SE23Element& eta, ErrorConvention c) {
  const TangentVector xi = se23_log(eta);
  return c == ErrorConvention::Right ? xi : flip(xi);
}

SE23Element vector_to_error(const TangentVector& xi, ErrorConvention c) {
  return se23_exp(c == ErrorConvention::Right ? xi : flip(xi));
}

NavState apply_correction(const NavState& est, const TangentVector& xi, ErrorConvention c) {
  NavState o = est;
  const SE23Element eta = vector_to_error(xi, c);
  o.x = c == ErrorConvention::Right ? eta * est.x : est.x * eta;
  return o;
}

TangentVector error_vector(const NavState& truth, const NavState& est, ErrorConvention c) {
  return error_to_vector(error_from_states(truth, est, c), c);
}

Mat5 exact_error_derivative(const SE23Element& eta, const NavState& truth, const NavState& est,
                            const ImuSample& imu_true, const ImuSample& imu_est, const Env& env,
                            ErrorConvention c) {
  check_pair(truth, est);
  const WDecomposition Wt = derivative(truth, imu_true, env).w;
  const WDecomposition We = derivative(est, imu_est, env).w;
  const Mat5 E = embed5(eta), X = embed5(est.x), Xi = embed5(se23_inverse(est.x));
  if (c == ErrorConvention::Right) {
    const Mat5 conj = wedge(adjoint(est.x) * vee5(We.W1 - Wt.W1));
    Mat5 d = Wt.W2 * E - E * We.W2 - E * conj;
    if (Wt.has_w34) d += (Wt.W3 * E - E * Wt.W3) * X * Wt.W4 * Xi;
    return d;
  }
  const Mat5 conj = wedge(adjoint(se23_inverse(est.x)) * vee5(Wt.W2 - We.W2));
  Mat5 d = E * Wt.W1 - We.W1 * E + conj * E;
  if (Wt.has_w34) d += Xi * Wt.W3 * X * (E * Wt.W4 - Wt.W4 * E);
  return d;
}

Linearization linearized_F_G(const ModelVariant& variant, ErrorConvention c,
                             const NavState& est, const ImuSample& imu, const Env& env) {
  if (est.variant() != variant) throw FrameMismatch("estimate does not match the variant");
  const bool proposed = variant.grouping == Grouping::Proposed && variant.frame != Frame::I;
  const bool fold = !proposed && variant.frame != Frame::I;
  const Mat3 I = Mat3::Identity();
  const Mat3& C = est.x.R;
  const Vec3& v = est.x.v;
  const Vec3& p = est.x.p;
  const Vec3 w = transport_rate(variant.frame, env);
  const Mat3 Wx = skew(w);
  const Vec3 R = from_center(variant.frame, position(est), env.world);
  const Mat3 Gg = gravitation_gradient(R, env.gravity, env.earth);
  // Gradient of the W2 field column: the centrifugal term only moves with the
  // state for the traditional grouping.
  const Mat3 Gf = proposed ? Gg : Mat3(Gg - Wx * Wx);

  Linearization L;
  L.F.setZero();
  L.G.setZero();
  auto A = [&](int i, int j) { return L.F.block<3, 3>(3 * i, 3 * j); };
  if (c == ErrorConvention::Right) {
    const Vec3 col = derivative(est, imu, env).w.W2.block<3, 1>(0, 3);
    A(0, 0) = -Wx;
    A(1, 0) = skew(col) - Gf * skew(p);
    A(1, 1) = (fold ? 2.0 : 1.0) * -Wx;
    A(1, 2) = Gf;
    A(2, 1) = I;
    if (fold) {
      A(1, 0) += skew(v) * Wx;
      A(2, 0) = -skew(p) * Wx;
    } else {
      A(2, 2) = -Wx;
    }
    A(0, 3) = -C;
    A(1, 3) = -skew(v) * C;
    A(2, 3) = -skew(p) * C;
    A(1, 4) = -C;
  } else {
    const Mat3 Om = skew(imu.omega_ib_b);
    A(0, 0) = -Om;
    A(1, 0) = skew(imu.f_ib_b);
    A(1, 1) = -Om;
    A(1, 2) = C.transpose() * Gf * C;
    A(2, 1) = I;
    A(2, 2) = -Om;
    if (fold) {
      const Mat3 Wb = skew(C.transpose() * w);
      A(1, 1) -= Wb;
      A(2, 2) += Wb;
    }
    A(0, 3) = I;
    A(1, 4) = -I;
  }
  L.G.block<9, 6>(0, 0) = L.F.block<9, 6>(0, 9);
  L.G.block<6, 6>(9, 6).setIdentity();
  return L;
}

WDecomposition error_decomposition(const NavState& truth, const NavState& est,
                                   const ImuSample& imu_true, const ImuSample& imu_est,
                                   const Env& env) {
  const WDecomposition Wt = derivative(truth, imu_true, env).w;
  WDecomposition W = derivative(est, imu_est, env).w;
  W.dW1 = W.W1 - Wt.W1;
  W.dW2 = Wt.W2 - W.W2;
  return W;
}

AutonomyClass classify_autonomy(const WDecomposition& w, bool include_input_errors,
                                bool include_gravity_error) {
  if (w.has_w34 && !(w.W3.isZero(0.0) || w.W4.isZero(0.0))) return AutonomyClass::Weak;
  if (include_input_errors || include_gravity_error || !w.dW1.isZero(0.0) ||
      !w.dW2.isZero(0.0))
    return AutonomyClass::Approximate;
  return AutonomyClass::Perfect;
}

const char* convention_name(ErrorConvention c) {
  return c == ErrorConvention::Right ? "right" : "left";
}

const char* autonomy_name(AutonomyClass a) {
  switch (a) {
    case AutonomyClass::Perfect: return "perfect";
    case AutonomyClass::Approximate: return "approximate";
    case AutonomyClass::Weak: return "weak";
  }
  return "?";
}

}  // namespace navkit
