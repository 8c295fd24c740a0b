#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "navkit/lgekf.hpp"

namespace navkit {

struct Segment {
  enum class Kind { Straight, Turn, Climb, Rest } kind = Kind::Rest;
  double duration = 1.0;
  double speed = 0.0;     // m/s
  double yaw_rate = 0.0;  // rad/s, Turn only
  double pitch = 0.0;     // rad, Climb only

  static Segment Straight(double duration, double speed) { return {Kind::Straight, duration, speed}; }
  static Segment Turn(double duration, double yaw_rate, double speed) {
    return {Kind::Turn, duration, speed, yaw_rate};
  }
  static Segment Climb(double duration, double pitch, double speed) {
    return {Kind::Climb, duration, speed, 0.0, pitch};
  }
  static Segment Rest(double duration) { return {Kind::Rest, duration}; }
};

// Kinematics are smoothstep-blended between segment targets over ramp_time.
struct TrajectorySpec {
  Vec3 origin = Vec3::Zero();  // w-frame start point
  double heading0 = 0.0;
  std::vector<Segment> segments;
  double imu_rate = 100.0;
  double ramp_time = 2.0;

  double duration() const;
  void validate() const;
};

struct TruthSeries {
  double dt = 0.01;
  std::vector<NavState> states;

  double time(size_t k) const { return static_cast<double>(k) * dt; }
  size_t size() const { return states.size(); }
};

// Per run the true turn-on bias is gyro_bias plus a draw from the filter's bias prior.
struct SensorErrors {
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();
  NoiseConfig noise;
  uint64_t seed = 1;
};

// SplitMix64 over (seed, stream, index); Box-Muller for normals.
class CounterRng {
 public:
  explicit CounterRng(uint64_t seed) : seed_(seed) {}
  double uniform(uint64_t stream, uint64_t index) const;
  double gauss(uint64_t stream, uint64_t index) const;

 private:
  uint64_t seed_;
};

uint64_t mix64(uint64_t x);

TruthSeries gen_truth(const TrajectorySpec& spec, const Env& env);
std::vector<ImuSample> inverse_imu(const TruthSeries& truth, const Env& env);

struct CorruptedImu {
  std::vector<ImuSample> samples;
  std::vector<Vec3> bias_g, bias_a;  // true biases at each epoch, one more than samples
};

CorruptedImu corrupt_with_truth(const std::vector<ImuSample>& imu, const SensorErrors& e);
std::vector<ImuSample> corrupt(const std::vector<ImuSample>& imu, const SensorErrors& e);

struct OdoEpoch {
  size_t k = 0;  // index into the truth series
  OdoSample z;
};

std::vector<OdoEpoch> gen_odometer(const TruthSeries& truth, const Mat3& odo_cov, uint64_t seed,
                                   const Env& env, double odo_rate = 10.0);

struct FilterSettings {
  ModelVariant variant{Frame::E, Grouping::Proposed};
  ErrorConvention conv = ErrorConvention::Right;
  NoiseConfig noise;
  double odo_rate = 10.0;
  double gate_sigma = 0.0;
  bool odometer = true;
  double att_std = 1e-3, vel_std = 0.1, pos_std = 1.0;
  double gyro_bias_std = 0.0, accel_bias_std = 0.0;
  Vec3 gyro_bias0 = Vec3::Zero(), accel_bias0 = Vec3::Zero();  // prior mean of the biases
};

struct SimConfig {
  Env env;
  TrajectorySpec trajectory;
  SensorErrors sensors;
  FilterSettings filter;
  uint64_t seed = 1;
};

// 300 s ground-vehicle loop at 30 m/s from a mid-latitude start, 100 Hz IMU, 10 Hz odometer.
SimConfig desk_config();
TrajectorySpec desk_trajectory();

enum Channel { kAtt, kVel, kPos, kGyroBias, kAccelBias, kChannels };
using ChannelStats = std::array<double, kChannels>;
const char* channel_name(int c);

struct RunResult {
  std::vector<double> t;
  std::vector<Vec15> err;  // true minus estimate in the run's convention
  std::vector<double> nees;
  std::vector<double> innov_t;
  std::vector<Vec3> innov, innov_white;
  ChannelStats rmse{};  // physical attitude, velocity, position errors and bias errors
  ChannelStats sq_sum{};
  double nees_mean = 0.0;
  bool diverged = false;
};

struct Scenario {
  TruthSeries truth_w;
  std::vector<ImuSample> imu;
};

Scenario prepare(const SimConfig& cfg);

// Sensor streams and initial filter error of one Monte-Carlo run.
struct RunInputs {
  CorruptedImu imu;
  std::vector<OdoEpoch> odo;
  Vec15 e0 = Vec15::Zero();  // initial estimation error, true minus estimate
  Vec15 sd = Vec15::Zero();  // prior standard deviations
};

RunInputs make_run_inputs(const SimConfig& cfg, const Scenario& sc, int run);
RunResult run_single(const SimConfig& cfg, const Scenario& sc, int run = 0, bool keep_errors = true);
RunResult run_single(const SimConfig& cfg, int run = 0);

struct MonteCarloStats {
  int runs = 0;
  ChannelStats rmse{};
  std::vector<double> t, mean_nees;
  double nees_mean = 0.0;
  Vec3 innov_lag1 = Vec3::Zero();
  int diverged = 0;
};

// threads <= 0 reads NAVKIT_THREADS, falling back to the hardware count.
int thread_count(int threads = 0);
MonteCarloStats run_monte_carlo(const SimConfig& cfg, int n_runs, int threads = 0,
                                const Scenario* sc = nullptr);

struct CompareRow {
  ModelVariant variant;
  ErrorConvention conv;
  MonteCarloStats stats;
};

std::vector<CompareRow> run_comparison(const SimConfig& cfg,
                                       const std::vector<ModelVariant>& variants,
                                       const std::vector<ErrorConvention>& convs, int n_runs,
                                       int threads = 0);

struct AutonomySettings {
  double duration = 60.0;
  double rate = 100.0;
  bool uniform_gravity = true;
  Vec3 gyro_error = Vec3::Zero();   // added to the estimate's gyro input
  Vec3 accel_error = Vec3::Zero();  // added to the estimate's accelerometer input
};

struct AutonomyResult {
  double metric = 0.0;
  AutonomyClass cls = AutonomyClass::Perfect;
};

// The Uniform model used per frame: spherical gravitation at the world origin.
GravityModel uniform_gravity_at_origin(Frame f, const Env& env);

AutonomyResult autonomy_experiment(const ModelVariant& variant, ErrorConvention conv,
                                   const TrajectorySpec& traj_a, const TrajectorySpec& traj_b,
                                   const Vec9& xi0, const AutonomySettings& settings,
                                   const Env& env);

NavState to_variant(const NavState& w_state, const ModelVariant& v, double t, const Env& env);

}  // namespace navkit
