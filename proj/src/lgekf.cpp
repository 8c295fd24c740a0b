#include "navkit/lgekf.hpp"

#include <cmath>

#include "navkit/errors.hpp"

namespace navkit {

ImuSample compensate(const ImuSample& meas, const Vec3& bias_g, const Vec3& bias_a) {
  ImuSample u = meas;
  u.omega_ib_b -= bias_g;
  u.f_ib_b -= bias_a;
  return u;
}

Mat15 transition_matrix(const Mat15& F, double dt) {
  const Mat15 Fd = F * dt;
  return Mat15::Identity() + Fd + 0.5 * Fd * Fd;
}

Mat15 process_noise(const Mat15& Phi, const Mat15x12& G, const NoiseConfig& n, double dt) {
  Eigen::Matrix<double, 12, 1> q;
  q << Vec3::Constant(n.gyro_noise_psd), Vec3::Constant(n.accel_noise_psd),
      Vec3::Constant(n.gyro_bias_rw_psd), Vec3::Constant(n.accel_bias_rw_psd);
  const Mat15 GQG = G * q.asDiagonal() * G.transpose();
  return 0.5 * (Phi * GQG * Phi.transpose() + GQG) * dt;
}

void check_covariance(const Mat15& P) {
  if (!P.allFinite()) throw CovarianceNotPSD("covariance has non-finite entries");
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + P.cwiseAbs().maxCoeff()))
    throw CovarianceNotPSD("covariance lost symmetry");
  const double lo = Eigen::SelfAdjointEigenSolver<Mat15>(P, Eigen::EigenvaluesOnly)
                        .eigenvalues()
                        .minCoeff();
  if (lo < -1e-9 * std::max(P.trace(), 1e-300)) throw CovarianceNotPSD();
}

FilterState predict(const FilterState& fs, const ImuSample& imu_meas, const NoiseConfig& noise,
                    const Env& env) {
  const ImuSample u = compensate(imu_meas, fs.bias_g, fs.bias_a);
  const Linearization L = linearized_F_G(fs.variant, fs.conv, fs.nav, u, env);
  const Mat15 Phi = transition_matrix(L.F, u.dt);
  FilterState o = fs;
  o.nav = step(fs.nav, u, env, Integrator::Midpoint);
  o.P = Phi * fs.P * Phi.transpose() + process_noise(Phi, L.G, noise, u.dt);
  o.P = 0.5 * (o.P + o.P.transpose()).eval();
  o.t = fs.t + u.dt;
  if (!o.P.allFinite() || (o.P.diagonal().array() < 0.0).any())
    throw CovarianceNotPSD("propagated covariance has a negative variance");
  return o;
}

OdoModel odo_H(const ModelVariant& variant, ErrorConvention conv, const NavState& est,
               const Env& env) {
  if (est.variant() != variant) throw FrameMismatch("estimate does not match the variant");
  // Ground velocity is affine in the group columns: vg = v - K p - c.
  Mat3 K = Mat3::Zero();
  if (variant.frame == Frame::I)
    K = skew(earth_rate(Frame::I, env.world, 0, env.earth));
  else if (variant.grouping == Grouping::Proposed)
    K = skew(transport_rate(variant.frame, env));
  const Mat3& C = est.x.R;
  const Vec3 vg = ground_velocity(est, env);
  OdoModel m;
  m.v_ins_b = C.transpose() * vg;
  if (conv == ErrorConvention::Right) {
    m.H.block<3, 3>(0, 0) = -C.transpose() * (skew(vg - est.x.v) + K * skew(est.x.p));
    m.H.block<3, 3>(0, 3) = -C.transpose();
    m.H.block<3, 3>(0, 6) = C.transpose() * K;
  } else {
    m.H.block<3, 3>(0, 0) = skew(m.v_ins_b);
    m.H.block<3, 3>(0, 3) = -Mat3::Identity();
    m.H.block<3, 3>(0, 6) = C.transpose() * K * C;
  }
  return m;
}

FilterState update(const FilterState& fs, const OdoSample& z, const NoiseConfig& noise,
                   const Env& env, UpdateInfo* info, double gate_sigma) {
  if (std::abs(z.t - fs.t) > 0.1 + 1e-9)
    throw std::invalid_argument("odometer sample is not aligned with the filter epoch");
  const OdoModel m = odo_H(fs.variant, fs.conv, fs.nav, env);
  const Vec3 dz = m.v_ins_b - z.v_odo_b;
  const Mat3& R = noise.odo_noise_cov;
  const Mat3 S = m.H * fs.P * m.H.transpose() + R;
  const Eigen::SelfAdjointEigenSolver<Mat3> es(S, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 1e-12 * es.eigenvalues().maxCoeff()))
    throw SingularInnovation();
  const Eigen::LDLT<Mat3> Sf(S);
  if (info) {
    info->innovation = dz;
    info->S = S;
    info->gated = false;
  }
  if (gate_sigma > 0.0 && dz.dot(Sf.solve(dz)) > gate_sigma * gate_sigma) {
    if (info) info->gated = true;
    return fs;
  }
  const Eigen::Matrix<double, 15, 3> K = Sf.solve(m.H * fs.P).transpose();
  const Vec15 dx = K * dz;
  FilterState o = fs;
  o.nav = apply_correction(fs.nav, dx.head<9>(), fs.conv);
  o.bias_g += dx.segment<3>(9);
  o.bias_a += dx.tail<3>();
  const Mat15 IKH = Mat15::Identity() - K * m.H;
  o.P = IKH * fs.P * IKH.transpose() + K * R * K.transpose();
  o.P = 0.5 * (o.P + o.P.transpose()).eval();
  check_covariance(o.P);
  return o;
}

Vec15 filter_error(const FilterState& fs, const NavState& truth, const Vec3& bias_g,
                   const Vec3& bias_a) {
  Vec15 e;
  e << error_vector(truth, fs.nav, fs.conv), bias_g - fs.bias_g, bias_a - fs.bias_a;
  return e;
}

double nees(const FilterState& fs, const Vec15& err) {
  const Eigen::LDLT<Mat15> ldlt(fs.P);
  if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all())
    return err.dot(ldlt.solve(err));
  // Singular covariance: pseudo-inverse over the supported subspace.
  const Eigen::SelfAdjointEigenSolver<Mat15> es(fs.P);
  const double tol = 1e-12 * std::max(es.eigenvalues().maxCoeff(), 0.0);
  const Vec15 y = es.eigenvectors().transpose() * err;
  double q = 0;
  for (int i = 0; i < 15; ++i)
    if (es.eigenvalues()(i) > tol && es.eigenvalues()(i) > 0.0) q += y(i) * y(i) / es.eigenvalues()(i);
  return q;
}

}  // namespace navkit
