#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "navkit/cli.hpp"
#include "navkit/sim.hpp"
#include "oracles.hpp"

using namespace navkit;
using namespace oracle;
namespace fs = std::filesystem;

namespace {

const ErrorConvention kConvs[] = {ErrorConvention::Right, ErrorConvention::Left};

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char b[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(b, sizeof b, f, ap);
  va_end(ap);
  return b;
}

double secs(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome group_axioms() {
  const auto t0 = std::chrono::steady_clock::now();
  Gen g(1001);
  double assoc = 0, inv = 0, trip = 0;
  for (int i = 0; i < 10000; ++i) {
    const SE23Element a = g.element(), b = g.element(), c = g.element();
    assoc = std::max(assoc, (embed5((a * b) * c) - embed5(a * (b * c))).norm());
    inv = std::max(inv, std::max((embed5(se23_inverse(a) * a) - Mat5::Identity()).norm(),
                                 (embed5(a * se23_inverse(a)) - Mat5::Identity()).norm()));
    const TangentVector xi = g.tangent(3.0);
    trip = std::max(trip, (se23_log(se23_exp(xi)) - xi).norm());
    trip = std::max(trip, (embed5(se23_exp(se23_log(a))) - embed5(a)).norm());
  }
  const double t = secs(t0);
  return {assoc < 1e-9 && inv < 1e-9 && trip < 1e-9 && t < 5.0,
          fmt("1e4 elements: assoc %.1e, inverse %.1e, exp/log %.1e (tol 1e-9), %.2f s (limit 5 s)",
              assoc, inv, trip, t)};
}

Outcome derivatives() {
  const auto t0 = std::chrono::steady_clock::now();
  const Env env = default_env();
  // traditional i/e/w, proposed e/w and the i-frame in both groupings
  const std::vector<ModelVariant> models = {
      {Frame::I, Grouping::Traditional}, {Frame::E, Grouping::Traditional},
      {Frame::W, Grouping::Traditional}, {Frame::E, Grouping::Proposed},
      {Frame::W, Grouping::Proposed},    {Frame::I, Grouping::Traditional},
      {Frame::I, Grouping::Proposed}};
  Gen g(1002);
  double worst = 0;
  for (const auto& mv : models)
    for (int i = 0; i < 100; ++i) {
      const NavState s = random_state(g, mv, env);
      const ImuSample u = random_imu(g);
      const double h = 1e-4;
      const Mat5 fd = (embed5(advance(s, u, h, env, Integrator::RK4).x) -
                       embed5(advance(s, u, -h, env, Integrator::RK4).x)) / (2 * h);
      worst = std::max(worst, rel_err(fd, derivative(s, u, env).dchi));
    }
  const double t = secs(t0);
  return {worst < 1e-6 && t < 30.0,
          fmt("7 models x 100 states: worst relative %.1e (tol 1e-6), %.2f s (limit 30 s)", worst, t)};
}

Outcome frame_consistency() {
  const Env env = default_env();
  Gen g(1003);
  std::vector<ImuSample> imu(6000);
  const Mat3 C0 = g.rot();
  const Vec3 g0 = gravity(env.world.r_ew_e, env.gravity, env.earth);
  for (size_t k = 0; k < imu.size(); ++k) {
    const double t = 0.01 * k;
    imu[k].dt = 0.01;
    imu[k].omega_ib_b = Vec3(0.05 * std::sin(0.3 * t), 0.02, 0.1 * std::cos(0.1 * t));
    imu[k].f_ib_b = -C0.transpose() * g0 + Vec3(std::sin(0.2 * t), 0.3, 0.1);
  }
  const NavState w0 = make_state(Frame::W, Grouping::Traditional, C0, Vec3(10, 3, 0),
                                 Vec3::Zero(), Vec3::Zero(), env);
  std::vector<NavState> s[3] = {{w0}, {convert_frame(w0, Frame::E, 0, env)},
                                {convert_frame(w0, Frame::I, 0, env)}};
  for (const auto& u : imu)
    for (auto& tr : s) tr.push_back(advance(tr.back(), u, u.dt, env, Integrator::RK4));
  double dp = 0, dv = 0, da = 0;
  for (size_t k = 0; k < imu.size() + 1; k += 10) {
    const double t = 0.01 * k;
    const NavState& e = s[1][k];
    for (const NavState& o : {convert_frame(s[2][k], Frame::E, t, env), convert_frame(s[0][k], Frame::E, t, env)}) {
      dp = std::max(dp, (position(o) - position(e)).norm());
      dv = std::max(dv, (o.x.v - e.x.v).norm());
      da = std::max(da, so3_log(o.x.R.transpose() * e.x.R).norm());
    }
  }
  return {dp < 1e-6 && dv < 1e-7 && da < 1e-9,
          fmt("i-vs-e and e-vs-w over 60 s at 100 Hz: %.1e m (tol 1e-6), %.1e m/s (tol 1e-7), "
              "%.1e rad (tol 1e-9)",
              dp, dv, da)};
}

// Endpoint of the linear error flow de/dt = F(est(t)) e, RK4 along the estimate.
Vec15 linear_flow(NavState s, const ImuSample& u, Vec15 e, ErrorConvention c, const Env& env,
                  int steps, double h) {
  auto F = [&](const NavState& x) { return linearized_F_G(x.variant(), c, x, u, env).F; };
  for (int k = 0; k < steps; ++k) {
    const NavState mid = advance(s, u, h / 2, env, Integrator::RK4);
    const NavState end = advance(s, u, h, env, Integrator::RK4);
    const Mat15 F0 = F(s), F1 = F(mid), F2 = F(end);
    const Vec15 k1 = F0 * e, k2 = F1 * (e + h / 2 * k1), k3 = F1 * (e + h / 2 * k2),
                k4 = F2 * (e + h * k3);
    e += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    s = end;
  }
  return e;
}

Vec15 exact_flow(const NavState& est, const ImuSample& u, const Vec15& e, ErrorConvention c,
                 const Env& env, int steps, double h) {
  Twin t = make_twin(est, u, e, c);
  for (int k = 0; k < steps; ++k) t = advance_twin(t, h, env);
  return twin_error(t, c);
}

Outcome linearization_order() {
  const auto t0 = std::chrono::steady_clock::now();
  const Env env = default_env();
  Gen g(1004);
  const int steps = 1000;
  const double h = 0.01;
  double lo = 1e9, hi = 0;
  for (const auto& mv : filter_variants())
    for (auto c : kConvs) {
      const NavState est = random_state(g, mv, env);
      const ImuSample u = random_imu(g);
      Vec15 d;
      d << g.ball(1.0), g.vec(1.0), g.vec(10.0), g.vec(1e-2), g.vec(1e-1);
      const Vec15 lin = linear_flow(est, u, d, c, env, steps, h);
      std::vector<double> D;
      for (double eps = 1e-2; eps > 0.9e-5; eps /= 2)
        D.push_back((exact_flow(est, u, eps * d, c, env, steps, h) - eps * lin).norm());
      for (size_t k = 0; k + 1 < D.size(); ++k) {
        lo = std::min(lo, D[k] / D[k + 1]);
        hi = std::max(hi, D[k] / D[k + 1]);
      }
    }
  const double t = secs(t0);
  return {lo >= 3.5 && hi <= 4.5,
          fmt("10 F matrices, eps 1e-2 to 1e-5 by halving: ratios in [%.2f, %.2f] (need [3.5, 4.5]), %.1f s",
              lo, hi, t)};
}

Outcome autonomy() {
  const auto t0 = std::chrono::steady_clock::now();
  const Env env = default_env();
  TrajectorySpec rest, moving;
  rest.segments = {Segment::Rest(60)};
  moving.segments = {Segment::Straight(60, 30)};
  Vec9 xi0;
  xi0 << 1e-2, -2e-2, 1.5e-2, 0.5, -0.3, 0.2, 5, -3, 2;
  const AutonomySettings st;
  auto metric = [&](Frame f, Grouping gr) {
    return autonomy_experiment({f, gr}, ErrorConvention::Right, rest, moving, xi0, st, env).metric;
  };
  const double a = metric(Frame::I, Grouping::Traditional);
  const double b = metric(Frame::E, Grouping::Traditional);
  const double ce = metric(Frame::E, Grouping::Proposed);
  const double cw = metric(Frame::W, Grouping::Proposed);
  const double t = secs(t0);
  return {a < 1e-9 && b > 1e-6 && ce < 1e-9 && cw < 1e-9 && t < 60.0,
          fmt("right error, 60 s, 0 vs 30 m/s: traditional-i %.1e (< 1e-9), traditional-e %.1e (> 1e-6), "
              "proposed-e %.1e (< 1e-9), proposed-w %.1e (< 1e-9), %.1f s (limit 60 s)",
              a, b, ce, cw, t)};
}

Mat3x15 numerical_H(const NavState& est, ErrorConvention c, const Env& env, double eps = 1e-6) {
  Mat3x15 H = Mat3x15::Zero();
  auto h = [&](const NavState& s) { return odo_H(s.variant(), c, s, env).v_ins_b; };
  for (int k = 0; k < 9; ++k) {
    const Vec9 e = eps * Vec9::Unit(k);
    H.col(k) = -(h(apply_correction(est, e, c)) - h(apply_correction(est, -e, c))) / (2 * eps);
  }
  return H;
}

Outcome measurement_model() {
  const Env env = default_env();
  Gen g(1006);
  double worst = 0;
  int count = 0;
  for (const auto& mv : filter_variants())
    for (auto c : kConvs) {
      ++count;
      for (int n = 0; n < 100; ++n) {
        const NavState est = random_state(g, mv, env);
        const Mat3x15 Hn = numerical_H(est, c, env);
        worst = std::max(worst, (odo_H(mv, c, est, env).H - Hn).norm() / Hn.norm());
      }
    }
  return {worst < 1e-5,
          fmt("%d odometer H matrices x 100 states: worst relative %.1e (tol 1e-5)", count, worst)};
}

Outcome filter_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  const SimConfig cfg = desk_config();
  const MonteCarloStats mc = run_monte_carlo(cfg, 50);
  const double ratio = mc.nees_mean / 15.0;
  const double lag = mc.innov_lag1.cwiseAbs().maxCoeff();
  const double t = secs(t0);
  return {ratio >= 0.75 && ratio <= 1.35 && lag <= 0.2 && mc.diverged == 0 && t < 300.0,
          fmt("50 runs, %.0f s desk scenario: NEES %.2f = %.3f x 15 (need [0.75, 1.35]), "
              "innovation lag-1 |%.3f| (need <= 0.2), %d diverged, %.1f s (limit 300 s)",
              cfg.trajectory.duration(), mc.nees_mean, ratio, lag, mc.diverged, t)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args) {
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("navkit_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg = root / "config.json";
  std::ofstream(cfg) << R"({
  "schema": "navkit.config/1",
  "seed": 2024,
  "autonomy": {"duration": 20},
  "compare": {"variants": ["traditional-w", "proposed-w"], "conventions": ["right", "left"], "runs": 2}
})";
  const std::vector<std::pair<std::string, std::vector<std::string>>> cmds = {
      {"simulate", {"truth.csv", "imu.csv", "odo.csv"}},
      {"run", {"errors.csv", "nees.csv", "summary.json"}},
      {"autonomy", {"autonomy.json"}},
      {"compare", {"compare.csv"}}};
  int files = 0, same = 0;
  std::string bad;
  for (const auto& [cmd, outs] : cmds) {
    for (const char* rep : {"a", "b"}) {
      const int rc = cli({"navkit", cmd, "--config", cfg.string(), "--out", (root / (cmd + rep)).string()});
      if (rc != 0) return {false, cmd + " exited with " + std::to_string(rc)};
    }
    for (const auto& f : outs) {
      ++files;
      const std::string a = slurp(root / (cmd + "a") / f), b = slurp(root / (cmd + "b") / f);
      if (!a.empty() && a == b) ++same;
      else bad += " " + f;
    }
  }
  fs::remove_all(root);
  return {same == files, fmt("simulate, run, autonomy, compare rerun: %d/%d files bit-identical%s%s", same, files,
                             bad.empty() ? "" : ", differing:", bad.c_str())};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {"group axioms", group_axioms},
      {"derivative correctness", derivatives},
      {"frame consistency", frame_consistency},
      {"linearization order", linearization_order},
      {"autonomy taxonomy", autonomy},
      {"measurement model", measurement_model},
      {"filter consistency", filter_consistency},
      {"determinism", determinism},
  };
  int failed = 0, n = 0;
  for (const auto& c : all) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", ++n, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", n - failed, n);
  return failed == 0 ? 0 : 1;
}
