#include "navkit/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "navkit/config.hpp"
#include "navkit/errors.hpp"

namespace navkit {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kOk = 0, kUsage = 2, kNumerical = 3;

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

std::string epoch(double t) {
  char b[32];
  std::snprintf(b, sizeof b, "%.9f", t);
  return b;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

class Csv {
 public:
  Csv(const fs::path& path, const RunConfig& rc, const std::vector<std::string>& header)
      : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError(path.string() + ":1: cannot open output file");
    out_ << "# config_hash=" << rc.hash_hex() << "\r\n";
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << quote(cells[i]);
    out_ << "\r\n";
  }
  template <class V>
  void values(double t, const V& v) {
    std::vector<std::string> cells{epoch(t)};
    for (Eigen::Index i = 0; i < v.size(); ++i) cells.push_back(fmt(v(i)));
    row(cells);
  }

 private:
  std::ofstream out_;
};

std::vector<std::string> axes(const std::string& name, int n = 3) {
  static const char* xyz[] = {"x", "y", "z"};
  std::vector<std::string> h;
  for (int i = 0; i < n; ++i) h.push_back(name + "_" + xyz[i]);
  return h;
}

std::vector<std::string> header(std::initializer_list<const char*> groups) {
  std::vector<std::string> h{"t"};
  for (const char* g : groups) {
    const auto a = axes(g);
    h.insert(h.end(), a.begin(), a.end());
  }
  return h;
}

void write_json(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(path.string() + ":1: cannot open output file");
  out << j.dump(2) << "\n";
}

ordered_json channels(const ChannelStats& s) {
  ordered_json j = ordered_json::object();
  for (int c = 0; c < kChannels; ++c) j[channel_name(c)] = s[c];
  return j;
}

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v(0), v(1), v(2)}); }

struct Job {
  RunConfig rc;
  fs::path out;
};

Job open(const std::string& config, const std::string& out, const ConfigOverrides& ov) {
  Job j{load_config(config, ov), {}};
  j.out = out.empty() ? fs::path(j.rc.output_dir) : fs::path(out);
  std::error_code ec;
  fs::create_directories(j.out, ec);
  if (ec || !fs::is_directory(j.out))
    throw ConfigError(j.out.string() + ":1: cannot create output directory");
  return j;
}

int cmd_simulate(const Job& job) {
  const SimConfig& cfg = job.rc.sim;
  const Scenario sc = prepare(cfg);
  const RunInputs in = make_run_inputs(cfg, sc, 0);
  const TruthSeries& tr = sc.truth_w;

  Csv truth(job.out / "truth.csv", job.rc, header({"att", "vel", "pos"}));
  for (size_t k = 0; k < tr.size(); ++k) {
    Vec9 row;
    row << so3_log(tr.states[k].x.R), tr.states[k].x.v, position(tr.states[k]);
    truth.values(tr.time(k), row);
  }
  Csv imu(job.out / "imu.csv", job.rc, header({"gyro", "accel"}));
  for (size_t k = 0; k < in.imu.samples.size(); ++k) {
    Eigen::Matrix<double, 6, 1> row;
    row << in.imu.samples[k].omega_ib_b, in.imu.samples[k].f_ib_b;
    imu.values(tr.time(k), row);
  }
  Csv odo(job.out / "odo.csv", job.rc, header({"v_odo"}));
  for (const auto& e : in.odo) odo.values(e.z.t, e.z.v_odo_b);
  return kOk;
}

int cmd_run(const Job& job, int runs) {
  const SimConfig& cfg = job.rc.sim;
  const Scenario sc = prepare(cfg);
  const RunResult r = run_single(cfg, sc, 0, true);

  std::vector<std::string> h{"t"};
  for (const char* g : {"att", "vel", "pos", "bias_g", "bias_a"}) {
    const auto a = axes(std::string("d") + g);
    h.insert(h.end(), a.begin(), a.end());
  }
  Csv errors(job.out / "errors.csv", job.rc, h);
  for (size_t k = 0; k < r.err.size(); ++k) errors.values(r.t[k], r.err[k]);
  Csv nees(job.out / "nees.csv", job.rc, {"t", "nees"});
  for (size_t k = 0; k < r.nees.size(); ++k) nees.values(r.t[k], Eigen::Matrix<double, 1, 1>(r.nees[k]));

  ordered_json s;
  s["config_hash"] = job.rc.hash_hex();
  s["variant"] = variant_name(cfg.filter.variant);
  s["convention"] = convention_name(cfg.filter.conv);
  s["seed"] = cfg.seed;
  s["epochs"] = r.t.size();
  s["duration"] = r.t.empty() ? 0.0 : r.t.back();
  s["rmse"] = channels(r.rmse);
  s["nees_mean"] = r.nees_mean;
  s["diverged"] = r.diverged;
  if (runs > 1) {
    const MonteCarloStats mc = run_monte_carlo(cfg, runs, 0, &sc);
    ordered_json m;
    m["runs"] = mc.runs;
    m["rmse"] = channels(mc.rmse);
    m["nees_mean"] = mc.nees_mean;
    m["innov_lag1"] = vec_json(mc.innov_lag1);
    m["diverged"] = mc.diverged;
    s["monte_carlo"] = m;
    if (mc.diverged > 0) {
      write_json(job.out / "summary.json", s);
      std::cerr << "navkit: " << mc.diverged << " of " << runs << " runs diverged\n";
      return kNumerical;
    }
  }
  write_json(job.out / "summary.json", s);
  if (r.diverged) {
    std::cerr << "navkit: filter diverged (NEES > 1e6)\n";
    return kNumerical;
  }
  return kOk;
}

int cmd_autonomy(const Job& job) {
  const SimConfig& cfg = job.rc.sim;
  const AutonomyConfig& a = job.rc.autonomy;
  const AutonomyResult r = autonomy_experiment(cfg.filter.variant, cfg.filter.conv, a.traj_a,
                                               a.traj_b, a.xi0, a.settings, cfg.env);
  ordered_json j;
  j["config_hash"] = job.rc.hash_hex();
  j["class"] = autonomy_name(r.cls);
  j["divergence_metric"] = r.metric;
  ordered_json st;
  st["variant"] = variant_name(cfg.filter.variant);
  st["convention"] = convention_name(cfg.filter.conv);
  st["duration"] = a.settings.duration;
  st["rate"] = a.settings.rate;
  st["uniform_gravity"] = a.settings.uniform_gravity;
  st["gyro_error"] = vec_json(a.settings.gyro_error);
  st["accel_error"] = vec_json(a.settings.accel_error);
  st["xi0"] = ordered_json::array();
  for (int i = 0; i < 9; ++i) st["xi0"].push_back(a.xi0(i));
  j["settings"] = st;
  write_json(job.out / "autonomy.json", j);
  return kOk;
}

int cmd_compare(const Job& job, int runs) {
  const auto rows = run_comparison(job.rc.sim, job.rc.compare.variants,
                                   job.rc.compare.conventions, runs);
  std::vector<std::string> h{"variant", "convention", "runs"};
  for (int c = 0; c < kChannels; ++c) h.push_back(std::string("rmse_") + channel_name(c));
  h.insert(h.end(), {"nees_mean", "diverged"});
  Csv out(job.out / "compare.csv", job.rc, h);
  int diverged = 0;
  for (const auto& r : rows) {
    std::vector<std::string> cells{variant_name(r.variant), convention_name(r.conv),
                                   std::to_string(r.stats.runs)};
    for (int c = 0; c < kChannels; ++c) cells.push_back(fmt(r.stats.rmse[c]));
    cells.push_back(fmt(r.stats.nees_mean));
    cells.push_back(std::to_string(r.stats.diverged));
    out.row(cells);
    diverged += r.stats.diverged;
  }
  if (diverged > 0) {
    std::cerr << "navkit: " << diverged << " runs diverged\n";
    return kNumerical;
  }
  return kOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"navkit: SE2(3) inertial navigation error-propagation toolkit"};
  app.require_subcommand(1);
  std::string config, out, variant, convention;
  int runs = 0;
  uint64_t seed = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "run configuration (JSON)")->required();
    sub->add_option("--out", out, "output directory (overrides config)");
    sub->add_option("--seed", seed, "random seed (overrides config)");
    sub->add_option("--variant", variant, "traditional-i/e/w or proposed-i/e/w");
    sub->add_option("--convention", convention, "right or left");
  };
  CLI::App* sim = app.add_subcommand("simulate", "write truth.csv, imu.csv, odo.csv");
  CLI::App* run = app.add_subcommand("run", "run the filter, write errors.csv, nees.csv, summary.json");
  CLI::App* aut = app.add_subcommand("autonomy", "classify and measure error autonomy");
  CLI::App* cmp = app.add_subcommand("compare", "Monte-Carlo over the variant grid, write compare.csv");
  for (CLI::App* s : {sim, run, aut, cmp}) common(s);
  run->add_option("--runs", runs, "Monte-Carlo runs added to the summary")->check(CLI::Range(1, 100000));
  cmp->add_option("--runs", runs, "Monte-Carlo runs per cell")->check(CLI::Range(2, 100000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  ConfigOverrides ov;
  auto given = [](CLI::App* s, const char* name) { return s->count(name) > 0; };
  CLI::App* sub = app.get_subcommands().front();
  if (given(sub, "--seed")) ov.seed = seed;
  if (given(sub, "--variant")) ov.variant = variant;
  if (given(sub, "--convention")) ov.convention = convention;

  try {
    if (ov.variant) parse_variant(*ov.variant);
    if (ov.convention) parse_convention(*ov.convention);
    const Job job = open(config, out, ov);
    if (sub == sim) return cmd_simulate(job);
    if (sub == run) return cmd_run(job, runs > 0 ? runs : 1);
    if (sub == aut) return cmd_autonomy(job);
    return cmd_compare(job, runs > 0 ? runs : job.rc.compare.runs);
  } catch (const ConfigError& e) {
    std::cerr << "navkit: " << e.what() << "\n";
    return kUsage;
  } catch (const SpecInvalid& e) {
    std::cerr << "navkit: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "navkit: numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "navkit: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "navkit: " << e.what() << "\n";
    return kNumerical;
  }
}

}  // namespace navkit
