#pragma once

#include "navkit/mechanization.hpp"

namespace navkit {

enum class ErrorConvention { Right, Left };
enum class AutonomyClass { Perfect, Approximate, Weak };

using Vec15 = Eigen::Matrix<double, 15, 1>;
using Mat15 = Eigen::Matrix<double, 15, 15>;
using Mat15x12 = Eigen::Matrix<double, 15, 12>;

struct ErrorState {
  TangentVector xi = TangentVector::Zero();
  Vec3 bias_g = Vec3::Zero();
  Vec3 bias_a = Vec3::Zero();
};

// Noise columns of G: gyro white, accel white, gyro bias walk, accel bias walk.
struct Linearization {
  Mat15 F;
  Mat15x12 G;
};

// Right: eta = X Xe^-1 ; Left: eta = Xe^-1 X.
SE23Element error_from_states(const NavState& truth, const NavState& est, ErrorConvention c);
// The left vector carries phi_b with eta.R = exp(-phi_b x).
TangentVector error_to_vector(const SE23Element& eta, ErrorConvention c);
SE23Element vector_to_error(const TangentVector& xi, ErrorConvention c);
NavState apply_correction(const NavState& est, const TangentVector& xi, ErrorConvention c);
TangentVector error_vector(const NavState& truth, const NavState& est, ErrorConvention c);

Mat5 exact_error_derivative(const SE23Element& eta, const NavState& truth, const NavState& est,
                            const ImuSample& imu_true, const ImuSample& imu_est, const Env& env,
                            ErrorConvention c);

// imu holds the bias-compensated inputs the estimate is propagated with.
Linearization linearized_F_G(const ModelVariant& variant, ErrorConvention c,
                             const NavState& est, const ImuSample& imu, const Env& env);

// W of the estimate together with the input (dW1) and field (dW2) mismatch.
WDecomposition error_decomposition(const NavState& truth, const NavState& est,
                                   const ImuSample& imu_true, const ImuSample& imu_est,
                                   const Env& env);

AutonomyClass classify_autonomy(const WDecomposition& w, bool include_input_errors,
                                bool include_gravity_error);

const char* convention_name(ErrorConvention c);
const char* autonomy_name(AutonomyClass a);

}  // namespace navkit
