#pragma once

// Per-episode dynamics randomization, push perturbations and the terrain /
// command curriculum.

#include "barlowwalk/terrain.hpp"
#include "barlowwalk/types.hpp"

#include <random>
#include <vector>

namespace barlowwalk {

struct Interval {
  double lo = 0;
  double hi = 0;
  double sample(std::mt19937_64& rng) const {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct RandomizationConfig {
  bool enabled = true;
  Interval link_mass_scale{0.8, 1.2};
  Interval payload_kg{-1.0, 3.0};
  Interval com_x_cm{-7.5, 7.5};
  Interval com_y_cm{-5.0, 5.0};
  Interval com_z_cm{-5.0, 5.0};
  Interval friction{0.2, 1.25};
  Interval restitution{0.0, 1.0};
  Interval kp_scale{0.9, 1.1};
  Interval kd_scale{0.9, 1.1};
  Interval motor_strength{0.8, 1.2};

  bool push_enabled = true;
  double push_interval_s = 7.0;
  double push_velocity = 0.5;  // per horizontal axis

  void validate() const;
};

struct RandomizationDraw {
  double link_mass_scale = 1.0;
  double payload_kg = 0.0;
  Eigen::Vector3d com_offset_cm = Eigen::Vector3d::Zero();
  double friction = 1.0;
  double restitution = 0.0;
  double kp_scale = 1.0;
  double kd_scale = 1.0;
  double motor_strength = 1.0;

  /// The nominal robot.
  static RandomizationDraw nominal() { return {}; }
};

/// Independent uniform draw per row. With randomization disabled returns
/// the nominal draw without touching the generator.
RandomizationDraw sample_randomization(std::mt19937_64& rng, const RandomizationConfig& cfg = {});

/// Velocity kick for the base, uniform per horizontal axis.
Eigen::Vector3d sample_push(std::mt19937_64& rng, const RandomizationConfig& cfg);

struct CommandRanges {
  Interval lin_x{-0.5, 0.5};
  Interval lin_y{-0.3, 0.3};
  Interval yaw{-0.5, 0.5};
  /// Heading mode: a target heading is drawn instead of a yaw rate and the
  /// yaw-rate command follows gain * heading error, clipped to `yaw`.
  bool heading = true;
  double heading_gain = 0.5;
};

struct CurriculumConfig {
  bool terrain_enabled = true;
  bool command_enabled = true;
  int initial_level = 0;
  double promote_fraction = 0.5;   // of the tile length
  double demote_fraction = 0.25;   // of the commanded distance
  double lin_x_start = 0.5;
  double lin_x_end = 1.0;
  double lin_y = 0.3;
  double yaw = 0.5;
  bool heading_command = true;
  double heading_gain = 0.5;

  void validate() const;
};

struct EpisodeResult {
  double distance = 0;           // start to end, horizontal
  double commanded_speed = 0;    // |c_xy|
  double duration_s = 20.0;      // nominal episode length
  bool fell = false;
};

struct CurriculumState {
  std::vector<int> levels;
  CommandRanges commands;
  long promotions = 0;
  long demotions = 0;

  double mean_level() const;
};

CurriculumState make_curriculum(int num_envs, const CurriculumConfig& cfg);

/// Moves one environment's level by at most one step and refreshes the
/// command ranges from the new mean level.
void update_curriculum(CurriculumState& state, int env, const EpisodeResult& result,
                       double tile_length, const CurriculumConfig& cfg);

/// Forward range widens linearly with the mean level.
CommandRanges command_ranges(double mean_level, const CurriculumConfig& cfg);

Eigen::Vector3d sample_command(std::mt19937_64& rng, const CommandRanges& ranges);
/// Uniform target heading in [-pi, pi).
double sample_heading(std::mt19937_64& rng);
/// Yaw-rate command steering `yaw` toward `target`.
double heading_yaw_rate(double target, double yaw, const CommandRanges& ranges);

}  // namespace barlowwalk
