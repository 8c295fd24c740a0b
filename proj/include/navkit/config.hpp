#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "navkit/sim.hpp"

namespace navkit {

inline constexpr const char* kConfigSchema = "navkit.config/1";

struct AutonomyConfig {
  AutonomySettings settings;
  TrajectorySpec traj_a, traj_b;
  Vec9 xi0 = Vec9::Zero();
};

struct CompareConfig {
  std::vector<ModelVariant> variants;
  std::vector<ErrorConvention> conventions;
  int runs = 10;
};

struct RunConfig {
  SimConfig sim;
  AutonomyConfig autonomy;
  CompareConfig compare;
  int runs = 1;
  std::string output_dir = ".";
  std::string canonical;  // effective configuration, sorted-key JSON
  uint64_t hash = 0;      // FNV-1a of canonical

  std::string hash_hex() const;
};

struct ConfigOverrides {
  std::optional<uint64_t> seed;
  std::optional<std::string> variant, convention, output_dir;
};

// Throws ConfigError with "<origin>:<line>: <message>".
RunConfig parse_config(const std::string& text, const ConfigOverrides& ov = {},
                       const std::string& origin = "<config>");
RunConfig load_config(const std::string& path, const ConfigOverrides& ov = {});

ModelVariant parse_variant(const std::string& name);
ErrorConvention parse_convention(const std::string& name);
std::string variant_name(const ModelVariant& v);
uint64_t fnv1a(const std::string& s);

}  // namespace navkit
