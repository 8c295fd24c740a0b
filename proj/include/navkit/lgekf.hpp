#pragma once

#include "navkit/error_models.hpp"

namespace navkit {

struct NoiseConfig {
  double gyro_noise_psd = 0.0;     // (rad/s)^2/Hz
  double accel_noise_psd = 0.0;    // (m/s^2)^2/Hz
  double gyro_bias_rw_psd = 0.0;   // (rad/s^2)^2/Hz
  double accel_bias_rw_psd = 0.0;  // (m/s^3)^2/Hz
  Mat3 odo_noise_cov = Mat3::Identity() * 1e-4;
};

struct OdoSample {
  Vec3 v_odo_b = Vec3::Zero();
  double t = 0.0;
};

// P is ordered (phi, rho_v, rho_r, b_g, b_a).
struct FilterState {
  NavState nav;
  Vec3 bias_g = Vec3::Zero();
  Vec3 bias_a = Vec3::Zero();
  Mat15 P = Mat15::Zero();
  ErrorConvention conv = ErrorConvention::Right;
  ModelVariant variant;
  double t = 0.0;
};

using Mat3x15 = Eigen::Matrix<double, 3, 15>;

// dz = v_ins_b - v_odo_b ~ H * error
struct OdoModel {
  Mat3x15 H = Mat3x15::Zero();
  Vec3 v_ins_b = Vec3::Zero();
};

struct UpdateInfo {
  Vec3 innovation = Vec3::Zero();
  Mat3 S = Mat3::Identity();
  bool gated = false;
};

ImuSample compensate(const ImuSample& meas, const Vec3& bias_g, const Vec3& bias_a);
Mat15 transition_matrix(const Mat15& F, double dt);
Mat15 process_noise(const Mat15& Phi, const Mat15x12& G, const NoiseConfig& n, double dt);

FilterState predict(const FilterState& fs, const ImuSample& imu_meas, const NoiseConfig& noise,
                    const Env& env);

// Body-frame ground velocity predicted by the estimate and its error Jacobian.
OdoModel odo_H(const ModelVariant& variant, ErrorConvention conv, const NavState& est,
               const Env& env);

// gate_sigma <= 0 disables innovation gating.
FilterState update(const FilterState& fs, const OdoSample& z, const NoiseConfig& noise,
                   const Env& env, UpdateInfo* info = nullptr, double gate_sigma = 0.0);

Vec15 filter_error(const FilterState& fs, const NavState& truth, const Vec3& bias_g,
                   const Vec3& bias_a);
double nees(const FilterState& fs, const Vec15& err);

void check_covariance(const Mat15& P);

}  // namespace navkit
