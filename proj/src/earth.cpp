#include "navkit/earth.hpp"

#include <cmath>

#include "navkit/errors.hpp"

namespace navkit {

WorldFrameDef WorldFrameDef::ned_at(double lat, double lon, double height,
                                    const EarthParams& ep) {
  const double sl = std::sin(lat), cl = std::cos(lat);
  const double so = std::sin(lon), co = std::cos(lon);
  WorldFrameDef w;
  w.r_ew_e = (ep.re + height) * Vec3(cl * co, cl * so, sl);
  w.C_e_w << -sl * co, -sl * so, cl,
             -so, co, 0,
             -cl * co, -cl * so, -sl;
  return w;
}

Vec3 earth_rate(Frame frame, const WorldFrameDef& world, double, const EarthParams& ep) {
  const Vec3 w(0, 0, ep.omega_ie);
  return frame == Frame::W ? Vec3(world.C_e_w * w) : w;
}

Vec3 gravitation(const Vec3& r, const GravityModel& model, const EarthParams& ep) {
  if (model.kind == GravityModel::Kind::Uniform) return model.gamma0;
  const double n = r.norm();
  if (!(n > 1e5)) throw SingularRadius();
  return -ep.mu / (n * n * n) * r;
}

Mat3 gravitation_gradient(const Vec3& r, const GravityModel& model, const EarthParams& ep) {
  if (model.kind == GravityModel::Kind::Uniform) return Mat3::Zero();
  const double n = r.norm();
  if (!(n > 1e5)) throw SingularRadius();
  const Vec3 u = r / n;
  return -ep.mu / (n * n * n) * (Mat3::Identity() - 3.0 * u * u.transpose());
}

Vec3 gravity(const Vec3& r, const GravityModel& model, const EarthParams& ep,
             const Vec3& omega) {
  return gravitation(r, model, ep) - omega.cross(omega.cross(r));
}

Vec3 gravity(const Vec3& r_e, const GravityModel& model, const EarthParams& ep) {
  return gravity(r_e, model, ep, Vec3(0, 0, ep.omega_ie));
}

Transform compose(const Transform& bc, const Transform& ab) {
  return {bc.R * ab.R, bc.R * ab.o + bc.o};
}

namespace {

Transform to_e(Frame f, const WorldFrameDef& world, double t, const EarthParams& ep) {
  switch (f) {
    case Frame::I: return {so3_exp(Vec3(0, 0, -ep.omega_ie * t)), Vec3::Zero()};
    case Frame::E: return {};
    case Frame::W: return {world.C_e_w.transpose(), world.r_ew_e};
  }
  return {};
}

Transform inverse(const Transform& T) { return {T.R.transpose(), -T.R.transpose() * T.o}; }

}  // namespace

Transform frame_transform(Frame from, Frame to, const WorldFrameDef& world, double t,
                          const EarthParams& ep) {
  if (from == to) return {};
  return compose(inverse(to_e(to, world, t, ep)), to_e(from, world, t, ep));
}

Vec3 from_center(Frame frame, const Vec3& r, const WorldFrameDef& world) {
  return frame == Frame::W ? Vec3(world.C_e_w * world.r_ew_e + r) : r;
}

const char* frame_name(Frame f) {
  switch (f) {
    case Frame::I: return "i";
    case Frame::E: return "e";
    case Frame::W: return "w";
  }
  return "?";
}

}  // namespace navkit
