#include "navkit/config.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "navkit/errors.hpp"

namespace navkit {

using nlohmann::json;

namespace {

// Forward iterator that counts the newlines the parser has consumed.
class LineIter {
 public:
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  LineIter() = default;
  LineIter(const char* p, int* line) : p_(p), line_(line) {}
  reference operator*() const { return *p_; }
  LineIter& operator++() {
    if (*p_ == '\n') ++*line_;
    ++p_;
    return *this;
  }
  LineIter operator++(int) {
    LineIter t = *this;
    ++*this;
    return t;
  }
  bool operator==(const LineIter& o) const { return p_ == o.p_; }

 private:
  const char* p_ = nullptr;
  int* line_ = nullptr;
};

// SAX pass recording the line of every JSON pointer.
struct LineSax {
  struct Level {
    bool array;
    std::string key;
    size_t index = 0;
  };
  int* line;
  std::map<std::string, int> lines;
  std::vector<Level> st;

  std::string path() const {
    std::string p;
    for (const auto& l : st) p += "/" + (l.array ? std::to_string(l.index) : l.key);
    return p;
  }
  void element() {
    if (!st.empty() && st.back().array) lines[path()] = *line;
  }
  bool scalar() {
    element();
    if (!st.empty() && st.back().array) ++st.back().index;
    return true;
  }
  bool null() { return scalar(); }
  bool boolean(bool) { return scalar(); }
  bool number_integer(json::number_integer_t) { return scalar(); }
  bool number_unsigned(json::number_unsigned_t) { return scalar(); }
  bool number_float(json::number_float_t, const std::string&) { return scalar(); }
  bool string(std::string&) { return scalar(); }
  bool binary(json::binary_t&) { return scalar(); }
  bool start_object(std::size_t) {
    element();
    st.push_back({false, ""});
    return true;
  }
  bool key(std::string& k) {
    st.back().key = k;
    lines[path()] = *line;
    return true;
  }
  bool end_object() { return close(); }
  bool start_array(std::size_t) {
    element();
    st.push_back({true, ""});
    return true;
  }
  bool end_array() { return close(); }
  bool close() {
    st.pop_back();
    if (!st.empty() && st.back().array) ++st.back().index;
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) {
    return false;
  }
};

struct Doc {
  std::string origin;
  std::map<std::string, int> lines;

  int line_of(std::string p) const {
    while (true) {
      auto it = lines.find(p);
      if (it != lines.end()) return it->second;
      const auto cut = p.rfind('/');
      if (cut == std::string::npos || p.empty()) return 1;
      p.resize(cut);
    }
  }
  [[noreturn]] void fail(const std::string& p, const std::string& msg) const {
    throw ConfigError(origin + ":" + std::to_string(line_of(p)) + ": " + msg);
  }
};

struct Node {
  const Doc& doc;
  const json& j;
  std::string path;

  Node at(const std::string& k) const { return {doc, j.at(k), path + "/" + k}; }
  Node at(size_t i) const { return {doc, j.at(i), path + "/" + std::to_string(i)}; }
  bool has(const std::string& k) const { return j.contains(k); }
  std::string where() const { return path.empty() ? "/" : path; }
  [[noreturn]] void fail(const std::string& msg) const { doc.fail(path, where() + ": " + msg); }

  void object(std::initializer_list<const char*> allowed) const {
    if (!j.is_object()) fail("expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!ok.count(it.key()))
        doc.fail(path + "/" + it.key(), "unknown key '" + it.key() + "' in " + where());
  }
  double num() const {
    if (!j.is_number()) fail("expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }
  double num(double lo, double hi) const {
    const double v = num();
    if (v < lo || v > hi) {
      std::ostringstream os;
      os << "value " << v << " outside [" << lo << ", " << hi << "]";
      fail(os.str());
    }
    return v;
  }
  double nonneg() const { return num(0.0, 1e300); }
  bool boolean() const {
    if (!j.is_boolean()) fail("expected true or false");
    return j.get<bool>();
  }
  std::string str() const {
    if (!j.is_string()) fail("expected a string");
    return j.get<std::string>();
  }
  uint64_t u64() const {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<int64_t>() >= 0))
      fail("expected a non-negative integer");
    return j.get<uint64_t>();
  }
  int count(int lo, int hi) const {
    if (!j.is_number_integer()) fail("expected an integer");
    const int64_t v = j.get<int64_t>();
    if (v < lo || v > hi) fail("integer outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(v);
  }
  template <int N>
  Eigen::Matrix<double, N, 1> vec() const {
    if (!j.is_array() || j.size() != N) fail("expected an array of " + std::to_string(N) + " numbers");
    Eigen::Matrix<double, N, 1> v;
    for (int i = 0; i < N; ++i) v(i) = at(static_cast<size_t>(i)).num();
    return v;
  }
};

void read_noise(const Node& n, NoiseConfig& out) {
  n.object({"gyro_noise_psd", "accel_noise_psd", "gyro_bias_rw_psd", "accel_bias_rw_psd",
            "odo_noise_cov"});
  if (n.has("gyro_noise_psd")) out.gyro_noise_psd = n.at("gyro_noise_psd").nonneg();
  if (n.has("accel_noise_psd")) out.accel_noise_psd = n.at("accel_noise_psd").nonneg();
  if (n.has("gyro_bias_rw_psd")) out.gyro_bias_rw_psd = n.at("gyro_bias_rw_psd").nonneg();
  if (n.has("accel_bias_rw_psd")) out.accel_bias_rw_psd = n.at("accel_bias_rw_psd").nonneg();
  if (n.has("odo_noise_cov")) {
    const Node c = n.at("odo_noise_cov");
    Mat3 R;
    if (c.j.is_number()) {
      R = Mat3::Identity() * c.nonneg();
    } else if (c.j.is_array() && c.j.size() == 3 && c.j[0].is_number()) {
      R = c.vec<3>().asDiagonal();
    } else if (c.j.is_array() && c.j.size() == 3) {
      for (int r = 0; r < 3; ++r) R.row(r) = c.at(static_cast<size_t>(r)).vec<3>().transpose();
    } else {
      c.fail("expected a variance, a 3-vector diagonal or a 3x3 matrix");
    }
    if ((R - R.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1 + R.cwiseAbs().maxCoeff()))
      c.fail("covariance must be symmetric");
    const Eigen::LLT<Mat3> llt(R);
    if (llt.info() != Eigen::Success) c.fail("covariance must be positive definite");
    out.odo_noise_cov = R;
  }
}

Segment read_segment(const Node& n) {
  if (!n.j.is_object() || !n.has("type")) n.fail("segment needs a 'type'");
  const std::string t = n.at("type").str();
  Segment s;
  if (t == "straight") {
    n.object({"type", "duration", "speed"});
    s.kind = Segment::Kind::Straight;
  } else if (t == "turn") {
    n.object({"type", "duration", "speed", "yaw_rate"});
    s.kind = Segment::Kind::Turn;
  } else if (t == "climb") {
    n.object({"type", "duration", "speed", "pitch"});
    s.kind = Segment::Kind::Climb;
  } else if (t == "rest") {
    n.object({"type", "duration"});
    s.kind = Segment::Kind::Rest;
  } else {
    n.at("type").fail("unknown segment type '" + t + "' (straight, turn, climb, rest)");
  }
  if (!n.has("duration")) n.fail("segment needs a 'duration'");
  s.duration = n.at("duration").num(1e-9, 3600.0);
  if (n.has("speed")) s.speed = n.at("speed").num(-1e4, 1e4);
  if (n.has("yaw_rate")) s.yaw_rate = n.at("yaw_rate").num(-10.0, 10.0);
  if (n.has("pitch")) s.pitch = n.at("pitch").num(-1.49, 1.49);
  return s;
}

TrajectorySpec read_trajectory(const Node& n, TrajectorySpec t) {
  n.object({"origin", "heading0", "imu_rate", "ramp_time", "segments"});
  if (n.has("origin")) t.origin = n.at("origin").vec<3>();
  if (n.has("heading0")) t.heading0 = n.at("heading0").num();
  if (n.has("imu_rate")) t.imu_rate = n.at("imu_rate").num(10.0, 2000.0);
  if (n.has("ramp_time")) t.ramp_time = n.at("ramp_time").nonneg();
  if (n.has("segments")) {
    const Node s = n.at("segments");
    if (!s.j.is_array() || s.j.empty()) s.fail("expected a non-empty array of segments");
    t.segments.clear();
    for (size_t i = 0; i < s.j.size(); ++i) t.segments.push_back(read_segment(s.at(i)));
  }
  try {
    t.validate();
  } catch (const SpecInvalid& e) {
    n.fail(e.what());
  }
  return t;
}

void apply(RunConfig& rc, const json& j, const Doc& doc) {
  const Node root{doc, j, ""};
  root.object({"schema", "seed", "output_dir", "runs", "earth", "world", "gravity", "trajectory",
               "sensors", "filter", "autonomy", "compare"});
  if (!root.has("schema")) root.fail("missing 'schema' (expected \"" + std::string(kConfigSchema) + "\")");
  if (root.at("schema").str() != kConfigSchema)
    root.at("schema").fail("unsupported schema '" + root.at("schema").str() + "'");

  SimConfig& sim = rc.sim;
  if (root.has("seed")) sim.seed = root.at("seed").u64();
  if (root.has("output_dir")) rc.output_dir = root.at("output_dir").str();
  if (root.has("runs")) rc.runs = root.at("runs").count(1, 100000);

  if (root.has("earth")) {
    const Node n = root.at("earth");
    n.object({"omega_ie", "mu", "re"});
    if (n.has("omega_ie")) sim.env.earth.omega_ie = n.at("omega_ie").num(0.0, 1e-2);
    if (n.has("mu")) sim.env.earth.mu = n.at("mu").num(1.0, 1e20);
    if (n.has("re")) sim.env.earth.re = n.at("re").num(1.0, 1e9);
  }
  double lat = 0.7, lon = 0.3, h = 120.0;
  if (root.has("world")) {
    const Node n = root.at("world");
    n.object({"lat", "lon", "height"});
    if (n.has("lat")) lat = n.at("lat").num(-1.5707963267948966, 1.5707963267948966);
    if (n.has("lon")) lon = n.at("lon").num(-7.0, 7.0);
    if (n.has("height")) h = n.at("height").num(-1e4, 1e6);
  }
  sim.env.world = WorldFrameDef::ned_at(lat, lon, h, sim.env.earth);
  if (root.has("gravity")) {
    const Node n = root.at("gravity");
    n.object({"model", "gamma"});
    const std::string m = n.has("model") ? n.at("model").str() : "spherical";
    if (m == "spherical") {
      if (n.has("gamma")) n.at("gamma").fail("'gamma' applies to the uniform model only");
      sim.env.gravity = GravityModel::Spherical();
    } else if (m == "uniform") {
      if (!n.has("gamma")) n.fail("uniform gravity needs 'gamma'");
      sim.env.gravity = GravityModel::Uniform(n.at("gamma").vec<3>());
    } else {
      n.at("model").fail("unknown gravity model '" + m + "' (spherical, uniform)");
    }
  }
  if (root.has("trajectory")) sim.trajectory = read_trajectory(root.at("trajectory"), sim.trajectory);

  bool filter_noise = false;
  if (root.has("sensors")) {
    const Node n = root.at("sensors");
    n.object({"gyro_bias", "accel_bias", "noise"});
    if (n.has("gyro_bias")) sim.sensors.gyro_bias = n.at("gyro_bias").vec<3>();
    if (n.has("accel_bias")) sim.sensors.accel_bias = n.at("accel_bias").vec<3>();
    if (n.has("noise")) read_noise(n.at("noise"), sim.sensors.noise);
  }
  FilterSettings& f = sim.filter;
  if (root.has("filter")) {
    const Node n = root.at("filter");
    n.object({"variant", "convention", "odo_rate", "gate_sigma", "odometer", "noise", "init_std",
              "gyro_bias0", "accel_bias0"});
    if (n.has("variant")) {
      try {
        f.variant = parse_variant(n.at("variant").str());
      } catch (const ConfigError& e) {
        n.at("variant").fail(e.what());
      }
    }
    if (n.has("convention")) {
      try {
        f.conv = parse_convention(n.at("convention").str());
      } catch (const ConfigError& e) {
        n.at("convention").fail(e.what());
      }
    }
    if (n.has("odo_rate")) f.odo_rate = n.at("odo_rate").num(1e-3, 1000.0);
    if (n.has("gate_sigma")) f.gate_sigma = n.at("gate_sigma").nonneg();
    if (n.has("odometer")) f.odometer = n.at("odometer").boolean();
    if (n.has("noise")) {
      f.noise = sim.sensors.noise;
      read_noise(n.at("noise"), f.noise);
      filter_noise = true;
    }
    if (n.has("init_std")) {
      const Node s = n.at("init_std");
      s.object({"att", "vel", "pos", "gyro_bias", "accel_bias"});
      if (s.has("att")) f.att_std = s.at("att").num(0.0, 0.5);
      if (s.has("vel")) f.vel_std = s.at("vel").nonneg();
      if (s.has("pos")) f.pos_std = s.at("pos").nonneg();
      if (s.has("gyro_bias")) f.gyro_bias_std = s.at("gyro_bias").nonneg();
      if (s.has("accel_bias")) f.accel_bias_std = s.at("accel_bias").nonneg();
    }
    if (n.has("gyro_bias0")) f.gyro_bias0 = n.at("gyro_bias0").vec<3>();
    if (n.has("accel_bias0")) f.accel_bias0 = n.at("accel_bias0").vec<3>();
  }
  if (!filter_noise) f.noise = sim.sensors.noise;

  AutonomyConfig& a = rc.autonomy;
  if (root.has("autonomy")) {
    const Node n = root.at("autonomy");
    n.object({"duration", "rate", "uniform_gravity", "gyro_error", "accel_error", "xi0", "traj_a",
              "traj_b"});
    if (n.has("duration")) a.settings.duration = n.at("duration").num(0.01, 3600.0);
    if (n.has("rate")) a.settings.rate = n.at("rate").num(10.0, 2000.0);
    if (n.has("uniform_gravity")) a.settings.uniform_gravity = n.at("uniform_gravity").boolean();
    if (n.has("gyro_error")) a.settings.gyro_error = n.at("gyro_error").vec<3>();
    if (n.has("accel_error")) a.settings.accel_error = n.at("accel_error").vec<3>();
    if (n.has("xi0")) {
      a.xi0 = n.at("xi0").vec<9>();
      if (a.xi0.head<3>().norm() >= 3.0) n.at("xi0").fail("initial attitude error must stay below pi");
    }
    if (n.has("traj_a")) a.traj_a = read_trajectory(n.at("traj_a"), a.traj_a);
    if (n.has("traj_b")) a.traj_b = read_trajectory(n.at("traj_b"), a.traj_b);
  }

  if (root.has("compare")) {
    const Node n = root.at("compare");
    n.object({"variants", "conventions", "runs"});
    if (n.has("variants")) {
      const Node v = n.at("variants");
      if (!v.j.is_array() || v.j.empty()) v.fail("expected a non-empty array of variant names");
      rc.compare.variants.clear();
      for (size_t i = 0; i < v.j.size(); ++i) {
        try {
          rc.compare.variants.push_back(parse_variant(v.at(i).str()));
        } catch (const ConfigError& e) {
          v.at(i).fail(e.what());
        }
      }
    }
    if (n.has("conventions")) {
      const Node v = n.at("conventions");
      if (!v.j.is_array() || v.j.empty()) v.fail("expected a non-empty array of conventions");
      rc.compare.conventions.clear();
      for (size_t i = 0; i < v.j.size(); ++i) {
        try {
          rc.compare.conventions.push_back(parse_convention(v.at(i).str()));
        } catch (const ConfigError& e) {
          v.at(i).fail(e.what());
        }
      }
    }
    if (n.has("runs")) rc.compare.runs = n.at("runs").count(2, 100000);
  }
}

}  // namespace

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string RunConfig::hash_hex() const {
  char b[17];
  std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(hash));
  return b;
}

ModelVariant parse_variant(const std::string& name) {
  const auto dash = name.find('-');
  if (dash != std::string::npos && dash + 2 == name.size()) {
    const std::string g = name.substr(0, dash);
    const char f = name.back();
    ModelVariant v;
    bool ok = true;
    if (g == "traditional") v.grouping = Grouping::Traditional;
    else if (g == "proposed") v.grouping = Grouping::Proposed;
    else ok = false;
    if (f == 'i') v.frame = Frame::I;
    else if (f == 'e') v.frame = Frame::E;
    else if (f == 'w') v.frame = Frame::W;
    else ok = false;
    if (ok) return v;
  }
  throw ConfigError("unknown variant '" + name + "' (traditional-i/e/w, proposed-i/e/w)");
}

ErrorConvention parse_convention(const std::string& name) {
  if (name == "right") return ErrorConvention::Right;
  if (name == "left") return ErrorConvention::Left;
  throw ConfigError("unknown convention '" + name + "' (right, left)");
}

std::string variant_name(const ModelVariant& v) {
  return std::string(v.grouping == Grouping::Proposed ? "proposed-" : "traditional-") +
         frame_name(v.frame);
}

RunConfig parse_config(const std::string& text, const ConfigOverrides& ov,
                       const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const size_t upto = std::min<size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    const long line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    throw ConfigError(origin + ":" + std::to_string(line) + ": malformed JSON");
  }
  Doc doc{origin, {}};
  int line = 1;
  LineSax sax{&line, {}, {}};
  json::sax_parse(LineIter(text.data(), &line), LineIter(text.data() + text.size(), &line), &sax);
  doc.lines = std::move(sax.lines);

  if (j.is_object()) {
    if (ov.seed) j["seed"] = *ov.seed;
    if (ov.variant) j["filter"]["variant"] = *ov.variant;
    if (ov.convention) j["filter"]["convention"] = *ov.convention;
    if (ov.output_dir) j["output_dir"] = *ov.output_dir;
  }

  RunConfig rc;
  rc.sim = desk_config();
  rc.autonomy.traj_a.segments = {Segment::Rest(60)};
  rc.autonomy.traj_b.segments = {Segment::Straight(60, 30)};
  rc.autonomy.xi0 << 1e-2, -2e-2, 1.5e-2, 0.5, -0.3, 0.2, 5, -3, 2;
  rc.compare.variants = {{Frame::I, Grouping::Traditional}, {Frame::E, Grouping::Traditional},
                         {Frame::W, Grouping::Traditional}, {Frame::E, Grouping::Proposed},
                         {Frame::W, Grouping::Proposed}};
  rc.compare.conventions = {ErrorConvention::Right, ErrorConvention::Left};
  apply(rc, j, doc);
  // output_dir does not change results
  json h = j;
  h.erase("output_dir");
  rc.canonical = h.dump();
  rc.hash = fnv1a(rc.canonical);
  return rc;
}

RunConfig load_config(const std::string& path, const ConfigOverrides& ov) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ":1: cannot read config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), ov, path);
}

}  // namespace navkit
