#pragma once

#include "navkit/earth.hpp"

namespace navkit {

enum class Grouping { Traditional, Proposed };

struct ModelVariant {
  Frame frame = Frame::E;
  Grouping grouping = Grouping::Traditional;
  bool operator==(const ModelVariant&) const = default;
};

// x.p holds r - r0; for the proposed grouping x.v holds v_ib - dv0.
struct NavState {
  Frame frame = Frame::E;
  Grouping grouping = Grouping::Traditional;
  SE23Element x;
  Vec3 r0 = Vec3::Zero();
  Vec3 dv0 = Vec3::Zero();

  ModelVariant variant() const { return {frame, grouping}; }
};

struct ImuSample {
  Vec3 omega_ib_b = Vec3::Zero();
  Vec3 f_ib_b = Vec3::Zero();
  double dt = 0.01;
};

struct WDecomposition {
  Mat5 W1 = Mat5::Zero(), W2 = Mat5::Zero(), W3 = Mat5::Zero(), W4 = Mat5::Zero();
  bool has_w34 = false;
  Mat5 dW1 = Mat5::Zero(), dW2 = Mat5::Zero();
};

struct Env {
  EarthParams earth;
  GravityModel gravity;
  WorldFrameDef world;
};

enum class Integrator { Midpoint, RK4 };

struct Derivative {
  Mat5 dchi;
  WDecomposition w;
};

struct StateRates {
  Mat3 C;
  Vec3 v, p;
};

NavState make_state(Frame frame, Grouping grouping, const Mat3& C, const Vec3& v_frame,
                    const Vec3& r, const Vec3& r0, const Env& env);

Vec3 position(const NavState& s);
// Velocity of the body relative to the state's frame: v_ib^i, v_eb^e or v_wb^w.
Vec3 frame_velocity(const NavState& s, const Env& env);
// Velocity relative to the earth, in the state's frame coordinates.
Vec3 ground_velocity(const NavState& s, const Env& env);
// Earth rate entering the attitude equation (zero for the i-frame).
Vec3 transport_rate(Frame f, const Env& env);
Vec3 proposed_anchor(Frame f, const Vec3& r0, const Env& env);

Derivative derivative(const NavState& s, const ImuSample& imu, const Env& env, double t = 0.0);
// Same ODEs written out per component; independent of the W assembly.
StateRates component_rates(const NavState& s, const ImuSample& imu, const Env& env);

NavState step(const NavState& s, const ImuSample& imu, const Env& env,
              Integrator integ = Integrator::Midpoint);
struct Increment {
  Mat3 R;
  Vec3 dv, dp;
};

// New attitude and the unrounded velocity/position increments of one step.
Increment advance_increment(const NavState& s, const ImuSample& imu, double dt, const Env& env,
                            Integrator integ);
// Unchecked variant used for negative-time finite differences.
NavState advance(const NavState& s, const ImuSample& imu, double dt, const Env& env,
                 Integrator integ);

// Constant inputs over dt that carry s onto (C1, v1) with the given integrator.
ImuSample solve_step_inputs(const NavState& s, const Mat3& C1, const Vec3& v1, double dt,
                            const Env& env, Integrator integ = Integrator::RK4);

NavState to_proposed(const NavState& s, const Env& env);
NavState from_proposed(const NavState& s, const Env& env);
// Frame change at time t; anchors map through the t = 0 transform.
NavState convert_frame(const NavState& s, Frame to, double t, const Env& env);

}  // namespace navkit
