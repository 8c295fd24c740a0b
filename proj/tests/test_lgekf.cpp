#include <gtest/gtest.h>

#include "navkit/errors.hpp"
#include "navkit/lgekf.hpp"
#include "oracles.hpp"

using namespace navkit;
using namespace oracle;

namespace {

const ErrorConvention kConvs[] = {ErrorConvention::Right, ErrorConvention::Left};

Mat3x15 numerical_H(const NavState& est, ErrorConvention c, const Env& env, double eps = 1e-6) {
  Mat3x15 H = Mat3x15::Zero();
  auto h = [&](const NavState& s) { return odo_H(s.variant(), c, s, env).v_ins_b; };
  for (int k = 0; k < 9; ++k) {
    const Vec9 e = eps * Vec9::Unit(k);
    // truth = correction(est, xi) and dz = h(est) - h(truth)
    const Vec3 zp = h(apply_correction(est, e, c)), zm = h(apply_correction(est, -e, c));
    H.col(k) = -(zp - zm) / (2 * eps);
  }
  return H;
}

FilterState make_filter(const NavState& nav, ErrorConvention c) {
  FilterState fs;
  fs.nav = nav;
  fs.conv = c;
  fs.variant = nav.variant();
  return fs;
}

}  // namespace

TEST(Lgekf, OdometerJacobianMatchesPerturbationOracle) {
  const Env env = default_env();
  Gen g(41);
  for (const auto& mv : filter_variants())
    for (auto c : kConvs) {
      double worst = 0;
      for (int n = 0; n < 100; ++n) {
        const NavState est = random_state(g, mv, env);
        const Mat3x15 H = odo_H(mv, c, est, env).H;
        const Mat3x15 Hn = numerical_H(est, c, env);
        worst = std::max(worst, (H - Hn).norm() / Hn.norm());
        EXPECT_EQ(H.rightCols<6>().norm(), 0.0);
      }
      EXPECT_LT(worst, 1e-5) << variant_label(mv) << " " << convention_name(c);
    }
}

TEST(Lgekf, LeftOdometerJacobianAtRest) {
  const Env env = default_env();
  Gen g(42);
  NavState est = random_state(g, {Frame::E, Grouping::Traditional}, env, 0.0);
  ASSERT_LT(ground_velocity(est, env).norm(), 1e-12);
  const Mat3x15 H = odo_H(est.variant(), ErrorConvention::Left, est, env).H;
  EXPECT_LT((H.block<3, 3>(0, 0)).norm(), 1e-12);
  EXPECT_LT((H.block<3, 3>(0, 3) + Mat3::Identity()).norm(), 1e-15);
  EXPECT_EQ((H.block<3, 3>(0, 6).norm()), 0.0);

  const Mat3x15 Hr = odo_H(est.variant(), ErrorConvention::Right, est, env).H;
  const Mat3 Ct = est.x.R.transpose();
  EXPECT_LT((Hr.block<3, 3>(0, 3) + Ct).norm(), 1e-15);
  EXPECT_LT((Hr.block<3, 3>(0, 0)).norm(), 1e-12);
  EXPECT_EQ((Hr.block<3, 3>(0, 6).norm()), 0.0);
}

TEST(Lgekf, RejectsMismatchedVariant) {
  const Env env = default_env();
  Gen g(43);
  const NavState est = random_state(g, {Frame::E, Grouping::Traditional}, env);
  EXPECT_THROW(odo_H({Frame::W, Grouping::Traditional}, ErrorConvention::Right, est, env),
               FrameMismatch);
}

TEST(Lgekf, ZeroNoiseKeepsZeroCovariance) {
  const Env env = default_env();
  Gen g(44);
  for (const auto& mv : filter_variants()) {
    const NavState s = random_state(g, mv, env);
    FilterState fs = make_filter(s, ErrorConvention::Right);
    NavState truth = s;
    const NoiseConfig noise{0, 0, 0, 0, Mat3::Identity()};
    for (int k = 0; k < 100; ++k) {
      const ImuSample u = random_imu(g);
      fs = predict(fs, u, noise, env);
      truth = step(truth, u, env);
    }
    EXPECT_EQ(fs.P.norm(), 0.0);
    EXPECT_EQ((embed5(truth.x) - embed5(fs.nav.x)).norm(), 0.0);
  }
}

TEST(Lgekf, GyroRandomWalkVariance) {
  const Env env = default_env();
  for (auto c : kConvs) {
    NavState s = make_state(Frame::W, Grouping::Traditional, Mat3::Identity(), Vec3::Zero(),
                            Vec3::Zero(), Vec3::Zero(), env);
    FilterState fs = make_filter(s, c);
    const ImuSample u = solve_step_inputs(s, s.x.R * so3_exp(Vec3::Zero()), Vec3::Zero(), 0.01,
                                          env, Integrator::Midpoint);
    NoiseConfig noise;
    noise.gyro_noise_psd = 1e-6;
    for (int k = 0; k < 1000; ++k) fs = predict(fs, u, noise, env);
    const double got = fs.P.block<3, 3>(0, 0).trace() / 3;
    EXPECT_NEAR(got / (noise.gyro_noise_psd * 10.0), 1.0, 0.05) << convention_name(c);
  }
}

TEST(Lgekf, TransitionMatrixIsThirdOrder) {
  const Env env = default_env();
  Gen g(45);
  for (const auto& mv : filter_variants()) {
    const NavState s = random_state(g, mv, env);
    const ImuSample u = random_imu(g);
    const Mat15 F = linearized_F_G(mv, ErrorConvention::Right, s, u, env).F;
    auto gap = [&](double dt) {
      return (transition_matrix(F, dt) - Mat15((F * dt).exp())).norm();
    };
    const double ratio = gap(0.02) / gap(0.01);
    EXPECT_NEAR(ratio, 8.0, 0.5) << variant_label(mv);
  }
}

TEST(Lgekf, ScalarGainOnVelocityChannel) {
  const Env env = default_env();
  NavState s = make_state(Frame::E, Grouping::Traditional, Mat3::Identity(), Vec3::Zero(),
                          env.world.r_ew_e, env.world.r_ew_e, env);
  FilterState fs = make_filter(s, ErrorConvention::Left);
  const double p = 0.04, r = 0.01;
  fs.P.block<3, 3>(3, 3) = p * Mat3::Identity();
  NoiseConfig noise;
  noise.odo_noise_cov = r * Mat3::Identity();
  OdoSample z{Vec3(0.1, 0, 0), 0.0};
  const FilterState o = update(fs, z, noise, env);
  EXPECT_NEAR(o.P(3, 3), p * r / (p + r), 1e-15);
  // innovation is v_ins - v_odo = -0.1 and the velocity column of H is -I
  const Vec9 xi = error_vector(o.nav, fs.nav, ErrorConvention::Left);
  EXPECT_NEAR(xi(3), 0.1 * p / (p + r), 1e-12);
  const Vec3 vb = o.nav.x.R.transpose() * ground_velocity(o.nav, env);
  EXPECT_NEAR(vb.x(), 0.1 * p / (p + r), 1e-12);
}

TEST(Lgekf, ZeroInnovationShrinksCovariance) {
  const Env env = default_env();
  Gen g(46);
  for (const auto& mv : filter_variants())
    for (auto c : kConvs) {
      const NavState s = random_state(g, mv, env);
      FilterState fs = make_filter(s, c);
      Eigen::Matrix<double, 15, 15> A = Eigen::Matrix<double, 15, 15>::Random();
      fs.P = A * A.transpose() * 1e-2 + Mat15::Identity() * 1e-4;
      NoiseConfig noise;
      const OdoSample z{odo_H(mv, c, s, env).v_ins_b, 0.0};
      const FilterState o = update(fs, z, noise, env);
      EXPECT_LT(error_vector(s, o.nav, c).norm(), 1e-11);
      EXPECT_EQ(o.bias_g.norm() + o.bias_a.norm(), 0.0);
      EXPECT_LT(o.P.trace(), fs.P.trace());
      EXPECT_NO_THROW(check_covariance(o.P));
    }
}

TEST(Lgekf, ErrorsOnBadCovarianceAndInnovation) {
  const Env env = default_env();
  Gen g(47);
  const NavState s = random_state(g, {Frame::E, Grouping::Traditional}, env);
  FilterState fs = make_filter(s, ErrorConvention::Right);
  NoiseConfig noise;
  noise.odo_noise_cov = Mat3::Zero();
  EXPECT_THROW(update(fs, {Vec3::Zero(), 0.0}, noise, env), SingularInnovation);
  Mat15 P = Mat15::Identity();
  P(4, 4) = -1;
  EXPECT_THROW(check_covariance(P), CovarianceNotPSD);
  noise.odo_noise_cov = Mat3::Identity();
  EXPECT_THROW(update(fs, {Vec3::Zero(), 0.5}, noise, env), std::invalid_argument);
}

TEST(Lgekf, GatingRejectsOutliers) {
  const Env env = default_env();
  Gen g(48);
  const NavState s = random_state(g, {Frame::W, Grouping::Proposed}, env);
  FilterState fs = make_filter(s, ErrorConvention::Right);
  fs.P = Mat15::Identity() * 1e-4;
  NoiseConfig noise;
  UpdateInfo info;
  const OdoSample z{odo_H(fs.variant, fs.conv, s, env).v_ins_b + Vec3(5, 0, 0), 0.0};
  const FilterState o = update(fs, z, noise, env, &info, 5.0);
  EXPECT_TRUE(info.gated);
  EXPECT_EQ((o.P - fs.P).norm(), 0.0);
  update(fs, z, noise, env, &info, 0.0);
  EXPECT_FALSE(info.gated);
}

TEST(Lgekf, AutonomousModelHasConstantF) {
  Env env = default_env();
  env.gravity = GravityModel::Uniform(Vec3(1.0, -2.0, 9.0));
  Gen g(49);
  for (const auto& mv : filter_variants()) {
    std::vector<Mat9> Fs;
    for (int n = 0; n < 100; ++n) {
      const NavState s = random_state(g, mv, env, 30.0, true);
      Fs.push_back(linearized_F_G(mv, ErrorConvention::Right, s, random_imu(g), env)
                       .F.topLeftCorner<9, 9>());
    }
    double spread = 0;
    for (const auto& a : Fs)
      for (const auto& b : Fs) spread = std::max(spread, (a - b).cwiseAbs().maxCoeff());
    const bool autonomous = mv.frame == Frame::I || mv.grouping == Grouping::Proposed;
    if (autonomous)
      EXPECT_LT(spread, 1e-12) << variant_label(mv);
    else
      EXPECT_GT(spread, 1e-6) << variant_label(mv);
  }
}

TEST(Lgekf, NeesMatchesQuadraticForm) {
  const Env env = default_env();
  Gen g(50);
  const NavState s = random_state(g, {Frame::I, Grouping::Traditional}, env);
  FilterState fs = make_filter(s, ErrorConvention::Left);
  Vec15 d;
  for (int k = 0; k < 15; ++k) d(k) = 0.1 + k;
  fs.P = d.asDiagonal();
  Vec15 e = Vec15::Ones();
  EXPECT_NEAR(nees(fs, e), (1.0 / d.array()).sum(), 1e-12);
  const NavState truth = apply_correction(s, e.head<9>(), fs.conv);
  EXPECT_LT((filter_error(fs, truth, Vec3::Ones(), Vec3::Ones()) - e).norm(), 1e-12);
}
