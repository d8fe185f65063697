#pragma once

// Run configuration: every tunable of every module in one tree, loaded from
// JSON with dotted key=value overrides. Unknown keys and out-of-range values
// are rejected with the offending key named.

#include "barlowwalk/env.hpp"
#include "barlowwalk/ppo.hpp"
#include "barlowwalk/ppo_update.hpp"
#include "barlowwalk/randomization.hpp"
#include "barlowwalk/rewards.hpp"
#include "barlowwalk/terrain.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace barlowwalk {

struct BarlowConfig {
  bool enabled = true;
  double lambda = 5e-3;
  bool center = false;
};

struct TerrainConfig {
  std::vector<std::string> families{"rough"};
  std::uint64_t seed = 0;  // 0: derive from the run seed
  TerrainSchedule schedule;
};

struct EvalConfig {
  double success_traversal = 0.8;  // fraction of the commanded distance
  double eval_command = 0.5;       // forward command for evaluation episodes
};

struct TrainConfig {
  std::uint64_t seed = 1;
  int num_envs = 64;
  int horizon = 24;
  int iterations = 1500;
  int checkpoint_every = 100;
  int workers = 1;
  bool baseline2 = false;
  double init_log_std = 0.0;
  /// Bootstrap the value of states cut off by the time limit.
  bool bootstrap_timeouts = true;
  int max_nonfinite_updates = 10;

  PpoConfig ppo;
  BarlowConfig barlow;
  EnvConfig env;
  TerrainConfig terrain;
  RewardConfig rewards;
  RandomizationConfig randomization;
  CurriculumConfig curriculum;
  EvalConfig eval;

  void validate() const;
  LossOptions loss_options() const;
  std::vector<TerrainFamily> families() const;
};

nlohmann::json to_json(const TrainConfig& c);
/// Strict: every key must exist in the default tree.
TrainConfig from_json(const nlohmann::json& j);

/// Defaults, then the file (if non-empty path), then the overrides, then
/// validation.
TrainConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Applies "a.b.c=value" to a JSON tree; value parses as JSON when it can,
/// otherwise as a string.
void apply_override(nlohmann::json& tree, const std::string& assignment);

}  // namespace barlowwalk
