#pragma once

// Rollout collection, PPO + Barlow updates, curriculum bookkeeping,
// metrics and checkpoints.

#include "barlowwalk/config.hpp"
#include "barlowwalk/encoders.hpp"
#include "barlowwalk/env.hpp"
#include "barlowwalk/policy.hpp"
#include "barlowwalk/ppo_update.hpp"
#include "barlowwalk/rollout.hpp"

#include <json.hpp>

#include <atomic>
#include <deque>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace barlowwalk {

using Real = float;  // network and rollout precision

struct IterationMetrics {
  int iteration = 0;
  std::optional<double> mean_reward;  // rolling mean over the last 100 episodes
  std::optional<double> mean_episode_length;
  std::optional<double> lin_tracking_error;  // per step, rolling
  std::optional<double> ang_tracking_error;
  double mean_step_reward = 0;
  double mean_terrain_level = 0;
  int episodes = 0;  // completed during this iteration
  int falls = 0;
  UpdateStats update;
  std::array<std::optional<double>, kNumRewardTerms> reward_terms{};  // per episode, rolling
  double collect_seconds = 0;
  double update_seconds = 0;

  nlohmann::json to_json() const;  // wall-clock excluded
};

/// Everything one environment worker owns.
struct EnvSlot {
  std::unique_ptr<BipedEnv> env;
  HistoryBuffer<Real> history;
  ObservationFrame obs;
};

class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  IterationMetrics run_iteration();

  int iteration() const { return iteration_; }
  const TrainConfig& config() const { return cfg_; }
  const ActorCritic<Real>& net() const { return net_; }
  nn::ParamSet<Real>& params() { return params_; }
  const CurriculumState& curriculum() const { return curriculum_; }
  const RolloutBatch<Real>& batch() const { return batch_; }
  std::vector<EnvSlot>& slots() { return slots_; }
  const TerrainWorld& world() const { return *world_; }
  double learning_rate() const { return opt_.lr; }
  int nonfinite_streak() const { return nonfinite_streak_; }

  void save_checkpoint(const std::string& path) const;
  /// Restores the full training state. The checkpoint's network layout must
  /// match this trainer's configuration.
  void load_checkpoint(const std::string& path);

 private:
  void collect(IterationMetrics& m);
  void reset_env(int e);
  void finish_episode(int e, const StepResult& r, IterationMetrics& m);
  void step_envs(const Matrix<Real>& actions, std::vector<StepResult>& results);

  TrainConfig cfg_;
  std::unique_ptr<TerrainWorld> world_;
  ActorCritic<Real> net_;
  nn::ParamSet<Real> params_;
  OptimizerState<Real> opt_;
  RolloutBatch<Real> batch_;
  CurriculumState curriculum_;
  std::vector<EnvSlot> slots_;
  Matrix<Real> actor_hidden_;
  Matrix<Real> critic_hidden_;
  std::mt19937_64 rng_;  // action sampling
  int iteration_ = 0;
  int nonfinite_streak_ = 0;

  struct EpisodeRecord {
    double ret, length, lin_err, ang_err;
    std::array<double, kNumRewardTerms> terms;
  };
  std::deque<EpisodeRecord> recent_;
};

/// Reads the configuration stored in a checkpoint's trailing block.
TrainConfig checkpoint_config(const std::string& path);

/// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct TrainOptions {
  std::string run_dir;
  std::string resume;             // checkpoint to continue from
  const std::atomic<bool>* stop = nullptr;  // cooperative cancellation
  bool quiet = false;
};

/// Full training loop with files in run_dir. Returns an exit code.
int train(const TrainConfig& cfg, const TrainOptions& opt);

struct EpisodeReport {
  double ret = 0;
  double lin_err = 0;  // mean per step
  double ang_err = 0;
  double distance = 0;
  int steps = 0;
  bool fell = false;
  bool success = false;
};

struct EvalReport {
  std::vector<EpisodeReport> episodes;
  double success_rate = 0;
  double mean_return = 0;
  double mean_lin_err = 0;
  double mean_ang_err = 0;
  std::array<double, kNumRewardTerms> reward_terms{};  // mean per episode
};

struct EvalOptions {
  TerrainFamily family = TerrainFamily::Rough;
  int level = 0;
  int episodes = 10;
  std::uint64_t seed = 1;
  std::string trace_path;  // optional per-step CSV
};

/// Deterministic (mean action) evaluation of a parameter set.
EvalReport evaluate(const TrainConfig& cfg, const ActorCritic<Real>& net,
                    nn::ParamSet<Real>& params, const EvalOptions& opt);
EvalReport evaluate_checkpoint(const std::string& checkpoint, const EvalOptions& opt);

struct LatentExportOptions {
  std::vector<TerrainFamily> families = {TerrainFamily::Rough, TerrainFamily::SlopeUp,
                                         TerrainFamily::SlopeDown, TerrainFamily::StairsUp,
                                         TerrainFamily::Obstacles};
  int envs = 8;
  int steps = 160;
  int level = 2;
  std::uint64_t seed = 1;
};

/// Rolls the deterministic policy on each family and writes one CSV row per
/// step: episode_id, step, terrain_family, terrain_level, z_0..z_15.
/// Returns rows per family.
std::vector<int> export_latents(const std::string& checkpoint, const std::string& csv_path,
                                const LatentExportOptions& opt);

/// Converts metrics.jsonl into CSV with one column per scalar field.
void metrics_to_csv(const std::string& jsonl_path, std::ostream& out);

}  // namespace barlowwalk
