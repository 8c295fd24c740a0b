#pragma once

#include "navkit/se23.hpp"

namespace navkit {

enum class Frame { I, E, W };

struct EarthParams {
  double omega_ie = 7.2921151467e-5;
  double mu = 3.986004418e14;
  double re = 6378137.0;
};

struct GravityModel {
  enum class Kind { Uniform, Spherical } kind = Kind::Spherical;
  Vec3 gamma0 = Vec3::Zero();

  static GravityModel Spherical() { return {}; }
  static GravityModel Uniform(const Vec3& g) { return {Kind::Uniform, g}; }
};

struct WorldFrameDef {
  Vec3 r_ew_e = Vec3::Zero();
  Mat3 C_e_w = Mat3::Identity();

  // x^w = C_e_w (x^e - r_ew_e)
  static WorldFrameDef ned_at(double lat, double lon, double height = 0.0,
                              const EarthParams& ep = {});
};

// x_to = R x_from + o for points; R alone for free vectors.
struct Transform {
  Mat3 R = Mat3::Identity();
  Vec3 o = Vec3::Zero();
};

Vec3 earth_rate(Frame frame, const WorldFrameDef& world, double t = 0.0,
                const EarthParams& ep = {});

Vec3 gravitation(const Vec3& r, const GravityModel& model, const EarthParams& ep = {});
Mat3 gravitation_gradient(const Vec3& r, const GravityModel& model,
                          const EarthParams& ep = {});
// e-frame gravity: gravitation minus the centrifugal term.
Vec3 gravity(const Vec3& r_e, const GravityModel& model, const EarthParams& ep = {});
Vec3 gravity(const Vec3& r, const GravityModel& model, const EarthParams& ep,
             const Vec3& omega);

Transform frame_transform(Frame from, Frame to, const WorldFrameDef& world, double t,
                          const EarthParams& ep = {});
Transform compose(const Transform& b_to_c, const Transform& a_to_b);

// Vector from the earth center to the point r given in `frame` coordinates.
Vec3 from_center(Frame frame, const Vec3& r, const WorldFrameDef& world);

const char* frame_name(Frame f);

}  // namespace navkit
