#include "barlowwalk/randomization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace barlowwalk {

namespace {

void check_interval(const Interval& v, const Interval& bounds, const char* key) {
  if (!(v.lo <= v.hi && v.lo >= bounds.lo && v.hi <= bounds.hi)) {
    throw ConfigError(std::string(key) + " must be an ordered interval inside [" +
                      std::to_string(bounds.lo) + ", " + std::to_string(bounds.hi) + "]");
  }
}

constexpr double kInf = 1e300;

}  // namespace

void RandomizationConfig::validate() const {
  check_interval(link_mass_scale, {0.05, kInf}, "randomization.link_mass_scale");
  check_interval(payload_kg, {-10, kInf}, "randomization.payload_kg");
  check_interval(com_x_cm, {-50, 50}, "randomization.com_x_cm");
  check_interval(com_y_cm, {-50, 50}, "randomization.com_y_cm");
  check_interval(com_z_cm, {-50, 50}, "randomization.com_z_cm");
  check_interval(friction, {0, kInf}, "randomization.friction");
  check_interval(restitution, {0, 1}, "randomization.restitution");
  check_interval(kp_scale, {0, kInf}, "randomization.kp_scale");
  check_interval(kd_scale, {0, kInf}, "randomization.kd_scale");
  check_interval(motor_strength, {0, kInf}, "randomization.motor_strength");
  if (!(push_interval_s > 0)) {
    throw ConfigError("randomization.push_interval_s must lie in (0, inf)");
  }
  if (!(push_velocity >= 0)) throw ConfigError("randomization.push_velocity must lie in [0, inf)");
}

RandomizationDraw sample_randomization(std::mt19937_64& rng, const RandomizationConfig& cfg) {
  RandomizationDraw d;
  if (!cfg.enabled) return d;
  d.link_mass_scale = cfg.link_mass_scale.sample(rng);
  d.payload_kg = cfg.payload_kg.sample(rng);
  d.com_offset_cm.x() = cfg.com_x_cm.sample(rng);
  d.com_offset_cm.y() = cfg.com_y_cm.sample(rng);
  d.com_offset_cm.z() = cfg.com_z_cm.sample(rng);
  d.friction = cfg.friction.sample(rng);
  d.restitution = cfg.restitution.sample(rng);
  d.kp_scale = cfg.kp_scale.sample(rng);
  d.kd_scale = cfg.kd_scale.sample(rng);
  d.motor_strength = cfg.motor_strength.sample(rng);
  return d;
}

Eigen::Vector3d sample_push(std::mt19937_64& rng, const RandomizationConfig& cfg) {
  const Interval u{-cfg.push_velocity, cfg.push_velocity};
  const double x = u.sample(rng);
  const double y = u.sample(rng);
  return {x, y, 0.0};
}

void CurriculumConfig::validate() const {
  if (initial_level < 0 || initial_level > kMaxLevel) {
    throw ConfigError("curriculum.initial_level must lie in [0, 9]");
  }
  if (!(promote_fraction >= 0)) throw ConfigError("curriculum.promote_fraction must lie in [0, inf)");
  if (!(demote_fraction >= 0 && demote_fraction <= 1)) {
    throw ConfigError("curriculum.demote_fraction must lie in [0, 1]");
  }
  if (!(lin_x_start >= 0 && lin_x_end >= lin_x_start)) {
    throw ConfigError("curriculum.lin_x_start/lin_x_end must satisfy 0 <= start <= end");
  }
  if (!(heading_gain >= 0)) throw ConfigError("curriculum.heading_gain must lie in [0, inf)");
  if (!(lin_y >= 0) || !(yaw >= 0)) {
    throw ConfigError("curriculum.lin_y and curriculum.yaw must lie in [0, inf)");
  }
}

double CurriculumState::mean_level() const {
  if (levels.empty()) return 0.0;
  return std::accumulate(levels.begin(), levels.end(), 0.0) / static_cast<double>(levels.size());
}

CommandRanges command_ranges(double mean_level, const CurriculumConfig& cfg) {
  const double t = cfg.command_enabled ? std::clamp(mean_level / kMaxLevel, 0.0, 1.0) : 0.0;
  const double x = cfg.lin_x_start + (cfg.lin_x_end - cfg.lin_x_start) * t;
  CommandRanges r;
  r.lin_x = {-x, x};
  r.lin_y = {-cfg.lin_y, cfg.lin_y};
  r.yaw = {-cfg.yaw, cfg.yaw};
  r.heading = cfg.heading_command;
  r.heading_gain = cfg.heading_gain;
  return r;
}

CurriculumState make_curriculum(int num_envs, const CurriculumConfig& cfg) {
  CurriculumState s;
  s.levels.assign(static_cast<std::size_t>(num_envs), cfg.initial_level);
  s.commands = command_ranges(s.mean_level(), cfg);
  return s;
}

void update_curriculum(CurriculumState& state, int env, const EpisodeResult& r,
                       double tile_length, const CurriculumConfig& cfg) {
  int& level = state.levels.at(static_cast<std::size_t>(env));
  if (cfg.terrain_enabled) {
    const bool promote = !r.fell && r.distance >= cfg.promote_fraction * tile_length;
    const bool demote =
        !promote && r.distance < cfg.demote_fraction * r.commanded_speed * r.duration_s;
    if (promote && level < kMaxLevel) {
      ++level;
      ++state.promotions;
    } else if (demote && level > 0) {
      --level;
      ++state.demotions;
    }
  }
  state.commands = command_ranges(state.mean_level(), cfg);
}

Eigen::Vector3d sample_command(std::mt19937_64& rng, const CommandRanges& r) {
  const double x = r.lin_x.sample(rng);
  const double y = r.lin_y.sample(rng);
  const double w = r.yaw.sample(rng);
  return {x, y, w};
}

double sample_heading(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(-std::numbers::pi, std::numbers::pi)(rng);
}

double heading_yaw_rate(double target, double yaw, const CommandRanges& r) {
  const double err = std::remainder(target - yaw, 2.0 * std::numbers::pi);
  return std::clamp(r.heading_gain * err, r.yaw.lo, r.yaw.hi);
}

}  // namespace barlowwalk
