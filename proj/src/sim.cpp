#include "navkit/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "navkit/errors.hpp"

namespace navkit {

namespace {

constexpr double kTwoPi = 6.283185307179586;

struct SegmentPlan {
  double t0, T, ramp;
  double s0, s1, r0, r1, th0, th1;
  double psi0;
};

double smooth(double a) { return a * a * (3.0 - 2.0 * a); }

// Integral of smooth(tau / T) over [0, tau].
double smooth_integral(double tau, double T) {
  if (T <= 0.0) return tau;
  if (tau >= T) return 0.5 * T + (tau - T);
  const double a = tau / T;
  return T * (a * a * a - 0.5 * a * a * a * a);
}

void targets(const Segment& s, double& speed, double& rate, double& pitch) {
  speed = s.kind == Segment::Kind::Rest ? 0.0 : s.speed;
  rate = s.kind == Segment::Kind::Turn ? s.yaw_rate : 0.0;
  pitch = s.kind == Segment::Kind::Climb ? s.pitch : 0.0;
}

std::vector<SegmentPlan> plan(const TrajectorySpec& spec) {
  std::vector<SegmentPlan> out;
  double t = 0, psi = spec.heading0, s = 0, r = 0, th = 0;
  for (size_t i = 0; i < spec.segments.size(); ++i) {
    const Segment& seg = spec.segments[i];
    SegmentPlan p{};
    p.t0 = t;
    p.T = seg.duration;
    targets(seg, p.s1, p.r1, p.th1);
    if (i == 0) {
      s = p.s1;
      r = p.r1;
      th = p.th1;
    }
    p.s0 = s;
    p.r0 = r;
    p.th0 = th;
    p.psi0 = psi;
    p.ramp = std::min(spec.ramp_time, 0.5 * seg.duration);
    psi += p.r0 * p.T + (p.r1 - p.r0) * smooth_integral(p.T, p.ramp);
    s = p.s1;
    r = p.r1;
    th = p.th1;
    t += p.T;
    out.push_back(p);
  }
  return out;
}

struct Kinematics {
  Mat3 C;
  Vec3 v;
};

Kinematics evaluate(const std::vector<SegmentPlan>& pl, double t) {
  size_t i = 0;
  while (i + 1 < pl.size() && t >= pl[i + 1].t0) ++i;
  const SegmentPlan& p = pl[i];
  const double tau = std::clamp(t - p.t0, 0.0, p.T);
  const double a = p.ramp > 0 ? smooth(std::min(tau / p.ramp, 1.0)) : 1.0;
  const double s = p.s0 + (p.s1 - p.s0) * a;
  const double th = p.th0 + (p.th1 - p.th0) * a;
  const double psi = p.psi0 + p.r0 * tau + (p.r1 - p.r0) * smooth_integral(tau, p.ramp);
  Kinematics k;
  k.C = Eigen::AngleAxisd(psi, Vec3::UnitZ()).toRotationMatrix() *
        Eigen::AngleAxisd(th, Vec3::UnitY()).toRotationMatrix();
  k.v = k.C * Vec3(s, 0, 0);
  return k;
}

size_t steps(const TrajectorySpec& spec) {
  return static_cast<size_t>(std::llround(spec.duration() * spec.imu_rate));
}

// Double-double accumulator for long twin propagations.
struct Compensated {
  NavState s;
  Vec3 v_lo = Vec3::Zero(), p_lo = Vec3::Zero();

  static void two_sum(double& hi, double& lo, double b) {
    const double a = hi, y = b + lo, t = a + y, bb = t - a;
    lo = (a - (t - bb)) + (y - bb);
    hi = t;
  }
  void advance(const ImuSample& u, const Env& env) {
    const Increment inc = advance_increment(s, u, u.dt, env, Integrator::RK4);
    s.x.R = inc.R;
    for (int j = 0; j < 3; ++j) {
      two_sum(s.x.v[j], v_lo[j], inc.dv[j]);
      two_sum(s.x.p[j], p_lo[j], inc.dp[j]);
    }
  }
};

enum Stream : uint64_t {
  kGyroWhite = 0,
  kAccelWhite = 3,
  kGyroWalk = 6,
  kAccelWalk = 9,
  kOdo = 12,
  kInitNav = 16,
  kInitBias = 32,
};

}  // namespace

double TrajectorySpec::duration() const {
  double t = 0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

void TrajectorySpec::validate() const {
  if (segments.empty()) throw SpecInvalid("trajectory has no segments");
  for (const auto& s : segments) {
    if (!(s.duration > 0.0) || !std::isfinite(s.duration))
      throw SpecInvalid("segment duration must be positive");
    if (!std::isfinite(s.speed) || !std::isfinite(s.yaw_rate) || !std::isfinite(s.pitch))
      throw SpecInvalid("segment values must be finite");
    if (s.kind == Segment::Kind::Climb && std::abs(s.pitch) >= 1.5)
      throw SpecInvalid("climb pitch must stay below 1.5 rad");
  }
  if (duration() > 3600.0) throw SpecInvalid("total duration exceeds 3600 s");
  if (!(imu_rate >= 10.0 && imu_rate <= 2000.0)) throw SpecInvalid("imu_rate out of range");
  if (!(ramp_time >= 0.0)) throw SpecInvalid("ramp_time must be non-negative");
  if (!origin.allFinite()) throw SpecInvalid("origin must be finite");
}

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double CounterRng::uniform(uint64_t stream, uint64_t index) const {
  const uint64_t h = mix64(mix64(seed_ ^ mix64(stream)) + index);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double CounterRng::gauss(uint64_t stream, uint64_t index) const {
  const double u1 = 1.0 - uniform(stream, 2 * index);
  const double u2 = uniform(stream, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

TruthSeries gen_truth(const TrajectorySpec& spec, const Env& env) {
  spec.validate();
  const auto pl = plan(spec);
  const size_t n = steps(spec);
  TruthSeries out;
  out.dt = 1.0 / spec.imu_rate;
  out.states.reserve(n + 1);
  const Kinematics k0 = evaluate(pl, 0.0);
  NavState s = make_state(Frame::W, Grouping::Traditional, k0.C, k0.v, spec.origin, spec.origin,
                          env);
  out.states.push_back(s);
  for (size_t k = 0; k < n; ++k) {
    const Kinematics k1 = evaluate(pl, out.time(k + 1));
    const ImuSample u = solve_step_inputs(s, k1.C, k1.v, out.dt, env, Integrator::RK4);
    s = advance(s, u, out.dt, env, Integrator::RK4);
    out.states.push_back(s);
  }
  return out;
}

std::vector<ImuSample> inverse_imu(const TruthSeries& truth, const Env& env) {
  std::vector<ImuSample> out;
  if (truth.size() < 2) return out;
  out.reserve(truth.size() - 1);
  for (size_t k = 0; k + 1 < truth.size(); ++k) {
    const NavState& a = truth.states[k];
    const NavState& b = truth.states[k + 1];
    if (a.grouping == Grouping::Proposed) {
      const NavState ta = from_proposed(a, env), tb = from_proposed(b, env);
      out.push_back(solve_step_inputs(ta, tb.x.R, tb.x.v, truth.dt, env, Integrator::RK4));
    } else {
      out.push_back(solve_step_inputs(a, b.x.R, b.x.v, truth.dt, env, Integrator::RK4));
    }
  }
  return out;
}

CorruptedImu corrupt_with_truth(const std::vector<ImuSample>& imu, const SensorErrors& e) {
  const CounterRng rng(e.seed);
  const NoiseConfig& n = e.noise;
  CorruptedImu out;
  out.samples.reserve(imu.size());
  out.bias_g.reserve(imu.size() + 1);
  out.bias_a.reserve(imu.size() + 1);
  Vec3 bg = e.gyro_bias, ba = e.accel_bias;
  out.bias_g.push_back(bg);
  out.bias_a.push_back(ba);
  for (size_t k = 0; k < imu.size(); ++k) {
    ImuSample u = imu[k];
    const double dt = u.dt;
    const double sg = std::sqrt(n.gyro_noise_psd / dt), sa = std::sqrt(n.accel_noise_psd / dt);
    const double wg = std::sqrt(n.gyro_bias_rw_psd * dt), wa = std::sqrt(n.accel_bias_rw_psd * dt);
    for (int j = 0; j < 3; ++j) {
      u.omega_ib_b[j] += bg[j] + (sg > 0 ? sg * rng.gauss(kGyroWhite + j, k) : 0.0);
      u.f_ib_b[j] += ba[j] + (sa > 0 ? sa * rng.gauss(kAccelWhite + j, k) : 0.0);
      if (wg > 0) bg[j] += wg * rng.gauss(kGyroWalk + j, k);
      if (wa > 0) ba[j] += wa * rng.gauss(kAccelWalk + j, k);
    }
    out.samples.push_back(u);
    out.bias_g.push_back(bg);
    out.bias_a.push_back(ba);
  }
  return out;
}

std::vector<ImuSample> corrupt(const std::vector<ImuSample>& imu, const SensorErrors& e) {
  return corrupt_with_truth(imu, e).samples;
}

std::vector<OdoEpoch> gen_odometer(const TruthSeries& truth, const Mat3& odo_cov, uint64_t seed,
                                   const Env& env, double odo_rate) {
  std::vector<OdoEpoch> out;
  if (!(odo_rate > 0)) return out;
  const long every = std::max(1L, std::lround(1.0 / (odo_rate * truth.dt)));
  const CounterRng rng(seed);
  const Eigen::LLT<Mat3> llt(odo_cov);
  const bool noisy = odo_cov.norm() > 0 && llt.info() == Eigen::Success;
  const Mat3 L = noisy ? Mat3(llt.matrixL()) : Mat3::Zero();
  uint64_t n = 0;
  for (size_t k = every; k < truth.size(); k += every, ++n) {
    const NavState& s = truth.states[k];
    const Vec3 vb = s.x.R.transpose() * ground_velocity(s, env);
    Vec3 z(vb.x(), 0, 0);
    if (noisy) z += L * Vec3(rng.gauss(kOdo, n), rng.gauss(kOdo + 1, n), rng.gauss(kOdo + 2, n));
    out.push_back({k, {z, truth.time(k)}});
  }
  return out;
}

TrajectorySpec desk_trajectory() {
  TrajectorySpec t;
  t.segments = {Segment::Straight(60, 30),     Segment::Turn(30, 0.05, 30),
                Segment::Straight(60, 30),     Segment::Climb(30, 0.05, 30),
                Segment::Straight(60, 30),     Segment::Turn(30, -0.05, 30),
                Segment::Straight(30, 30)};
  return t;
}

SimConfig desk_config() {
  SimConfig c;
  c.env.world = WorldFrameDef::ned_at(0.7, 0.3, 120.0, c.env.earth);
  c.trajectory = desk_trajectory();
  NoiseConfig n;
  n.gyro_noise_psd = 1e-9;
  n.accel_noise_psd = 1e-6;
  n.gyro_bias_rw_psd = 1e-14;
  n.accel_bias_rw_psd = 1e-9;
  n.odo_noise_cov = Mat3::Identity() * 1e-2;
  c.sensors.noise = n;
  c.filter.noise = n;
  c.filter.gyro_bias_std = 2e-5;
  c.filter.accel_bias_std = 2e-2;
  return c;
}

const char* channel_name(int c) {
  static const char* names[] = {"att", "vel", "pos", "bias_g", "bias_a"};
  return names[c];
}

NavState to_variant(const NavState& w_state, const ModelVariant& v, double t, const Env& env) {
  const NavState s = convert_frame(w_state, v.frame, t, env);
  return v.grouping == Grouping::Proposed ? to_proposed(s, env) : s;
}

Scenario prepare(const SimConfig& cfg) {
  Scenario sc;
  sc.truth_w = gen_truth(cfg.trajectory, cfg.env);
  sc.imu = inverse_imu(sc.truth_w, cfg.env);
  return sc;
}

RunInputs make_run_inputs(const SimConfig& cfg, const Scenario& sc, int run) {
  const FilterSettings& f = cfg.filter;
  const uint64_t rs = mix64(cfg.seed ^ mix64(static_cast<uint64_t>(run) + 1));
  const CounterRng rng(rs);
  RunInputs in;
  in.sd << Vec3::Constant(f.att_std), Vec3::Constant(f.vel_std), Vec3::Constant(f.pos_std),
      Vec3::Constant(f.gyro_bias_std), Vec3::Constant(f.accel_bias_std);
  for (int j = 0; j < 15; ++j) in.e0(j) = in.sd(j) * rng.gauss(j < 9 ? kInitNav : kInitBias, j);
  SensorErrors se = cfg.sensors;
  se.seed = mix64(rs + 1);
  se.gyro_bias += in.e0.segment<3>(9);
  se.accel_bias += in.e0.tail<3>();
  in.imu = corrupt_with_truth(sc.imu, se);
  if (f.odometer)
    in.odo = gen_odometer(sc.truth_w, cfg.sensors.noise.odo_noise_cov, mix64(rs + 2), cfg.env,
                          f.odo_rate);
  return in;
}

RunResult run_single(const SimConfig& cfg, const Scenario& sc, int run, bool keep_errors) {
  const FilterSettings& f = cfg.filter;
  const Env& env = cfg.env;
  const RunInputs in = make_run_inputs(cfg, sc, run);
  const CorruptedImu& ci = in.imu;
  const auto& odo = in.odo;

  FilterState fs;
  fs.variant = f.variant;
  fs.conv = f.conv;
  fs.nav = apply_correction(to_variant(sc.truth_w.states[0], f.variant, 0.0, env),
                            -in.e0.head<9>(), f.conv);
  fs.bias_g = f.gyro_bias0;
  fs.bias_a = f.accel_bias0;
  fs.P = in.sd.cwiseAbs2().asDiagonal();

  RunResult out;
  const size_t n = sc.imu.size();
  out.t.reserve(n + 1);
  out.nees.reserve(n + 1);
  if (keep_errors) out.err.reserve(n + 1);

  auto record = [&](size_t k) {
    const NavState truth = to_variant(sc.truth_w.states[k], f.variant, sc.truth_w.time(k), env);
    const Vec15 e = filter_error(fs, truth, ci.bias_g[k], ci.bias_a[k]);
    const double q = nees(fs, e);
    out.t.push_back(sc.truth_w.time(k));
    out.nees.push_back(q);
    if (keep_errors) out.err.push_back(e);
    const double d[kChannels] = {
        so3_log(truth.x.R * fs.nav.x.R.transpose()).norm(),
        (ground_velocity(truth, env) - ground_velocity(fs.nav, env)).norm(),
        (position(truth) - position(fs.nav)).norm(),
        (ci.bias_g[k] - fs.bias_g).norm(),
        (ci.bias_a[k] - fs.bias_a).norm()};
    for (int c = 0; c < kChannels; ++c) out.sq_sum[c] += d[c] * d[c];
    return std::isfinite(q) && q <= 1e6;
  };

  bool ok = record(0);
  size_t oi = 0;
  try {
    for (size_t k = 0; ok && k < n; ++k) {
      fs = predict(fs, ci.samples[k], f.noise, env);
      while (oi < odo.size() && odo[oi].k < k + 1) ++oi;
      if (oi < odo.size() && odo[oi].k == k + 1) {
        UpdateInfo info;
        fs = update(fs, odo[oi].z, f.noise, env, &info, f.gate_sigma);
        out.innov_t.push_back(odo[oi].z.t);
        out.innov.push_back(info.innovation);
        out.innov_white.push_back(info.S.llt().matrixL().solve(info.innovation));
        ++oi;
      }
      ok = record(k + 1);
    }
  } catch (const Error&) {
    ok = false;
  }
  out.diverged = !ok;
  const double m = static_cast<double>(out.t.size());
  for (int c = 0; c < kChannels; ++c) out.rmse[c] = std::sqrt(out.sq_sum[c] / m);
  double acc = 0;
  for (double q : out.nees) acc += q;
  out.nees_mean = acc / m;
  return out;
}

RunResult run_single(const SimConfig& cfg, int run) { return run_single(cfg, prepare(cfg), run); }

int thread_count(int threads) {
  if (threads <= 0) {
    if (const char* s = std::getenv("NAVKIT_THREADS")) threads = std::atoi(s);
  }
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(threads, 1);
}

MonteCarloStats run_monte_carlo(const SimConfig& cfg, int n_runs, int threads,
                                const Scenario* sc) {
  if (n_runs < 2) throw std::invalid_argument("Monte Carlo needs at least 2 runs");
  Scenario local;
  if (!sc) {
    local = prepare(cfg);
    sc = &local;
  }
  std::vector<RunResult> res(n_runs);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < n_runs; r = next++) res[r] = run_single(cfg, *sc, r, false);
  };
  const int nt = std::min(thread_count(threads), n_runs);
  std::vector<std::thread> pool;
  for (int i = 1; i < nt; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  MonteCarloStats st;
  st.runs = n_runs;
  size_t len = 0;
  for (const auto& r : res) len = std::max(len, r.t.size());
  st.t.assign(len, 0.0);
  st.mean_nees.assign(len, 0.0);
  std::vector<int> count(len, 0);
  ChannelStats sq{};
  double epochs = 0;
  for (const auto& r : res) {
    if (r.diverged) ++st.diverged;
    for (size_t k = 0; k < r.t.size(); ++k) {
      st.t[k] = r.t[k];
      st.mean_nees[k] += r.nees[k];
      ++count[k];
    }
    for (int c = 0; c < kChannels; ++c) sq[c] += r.sq_sum[c];
    epochs += static_cast<double>(r.t.size());
  }
  double acc = 0;
  for (size_t k = 0; k < len; ++k) {
    st.mean_nees[k] /= count[k];
    acc += st.mean_nees[k];
  }
  st.nees_mean = len ? acc / static_cast<double>(len) : 0.0;
  for (int c = 0; c < kChannels; ++c) st.rmse[c] = std::sqrt(sq[c] / epochs);

  Vec3 mean = Vec3::Zero();
  double cnt = 0;
  for (const auto& r : res)
    for (const auto& w : r.innov_white) {
      mean += w;
      ++cnt;
    }
  if (cnt > 0) mean /= cnt;
  Vec3 num = Vec3::Zero(), den = Vec3::Zero();
  for (const auto& r : res)
    for (size_t k = 0; k < r.innov_white.size(); ++k) {
      const Vec3 a = r.innov_white[k] - mean;
      den += a.cwiseAbs2();
      if (k + 1 < r.innov_white.size()) num += a.cwiseProduct(r.innov_white[k + 1] - mean);
    }
  for (int j = 0; j < 3; ++j) st.innov_lag1[j] = den[j] > 0 ? num[j] / den[j] : 0.0;
  return st;
}

std::vector<CompareRow> run_comparison(const SimConfig& cfg,
                                       const std::vector<ModelVariant>& variants,
                                       const std::vector<ErrorConvention>& convs, int n_runs,
                                       int threads) {
  const Scenario sc = prepare(cfg);
  std::vector<CompareRow> rows;
  for (const auto& v : variants)
    for (auto c : convs) {
      SimConfig cell = cfg;
      cell.filter.variant = v;
      cell.filter.conv = c;
      rows.push_back({v, c, run_monte_carlo(cell, n_runs, threads, &sc)});
    }
  return rows;
}

GravityModel uniform_gravity_at_origin(Frame f, const Env& env) {
  const Vec3 ge = gravitation(env.world.r_ew_e, GravityModel::Spherical(), env.earth);
  return GravityModel::Uniform(f == Frame::W ? Vec3(env.world.C_e_w * ge) : ge);
}

AutonomyResult autonomy_experiment(const ModelVariant& variant, ErrorConvention conv,
                                   const TrajectorySpec& traj_a, const TrajectorySpec& traj_b,
                                   const Vec9& xi0, const AutonomySettings& settings,
                                   const Env& env) {
  Env env_w = env, env_x = env;
  if (settings.uniform_gravity) {
    env_w.gravity = uniform_gravity_at_origin(Frame::W, env);
    env_x.gravity = uniform_gravity_at_origin(variant.frame, env);
  }
  const size_t n = static_cast<size_t>(std::llround(settings.duration * settings.rate));
  AutonomyResult out;

  auto flow = [&](const TrajectorySpec& spec, bool classify) {
    TrajectorySpec ts = spec;
    ts.imu_rate = settings.rate;
    const TruthSeries tw = gen_truth(ts, env_w);
    const auto imu = inverse_imu(tw, env_w);
    Compensated truth{to_variant(tw.states[0], variant, 0.0, env)};
    Compensated est{apply_correction(truth.s, -xi0, conv)};
    if (classify) {
      const bool input = !settings.gyro_error.isZero(0.0) || !settings.accel_error.isZero(0.0);
      out.cls = classify_autonomy(derivative(est.s, imu[0], env_x).w, input,
                                  !settings.uniform_gravity);
    }
    std::vector<Vec9> eta;
    eta.reserve(n + 1);
    eta.push_back(error_vector(truth.s, est.s, conv));
    for (size_t k = 0; k < n && k < imu.size(); ++k) {
      ImuSample ue = imu[k];
      ue.omega_ib_b += settings.gyro_error;
      ue.f_ib_b += settings.accel_error;
      truth.advance(imu[k], env_x);
      est.advance(ue, env_x);
      eta.push_back(error_vector(truth.s, est.s, conv));
    }
    return eta;
  };

  const auto a = flow(traj_a, true);
  const auto b = flow(traj_b, false);
  for (size_t k = 0; k < std::min(a.size(), b.size()); ++k)
    out.metric = std::max(out.metric, (a[k] - b[k]).norm());
  return out;
}

}  // namespace navkit
