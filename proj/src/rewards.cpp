#include "barlowwalk/rewards.hpp"

#include <cmath>

namespace barlowwalk {

namespace {

constexpr const char* kNames[kNumRewardTerms] = {
    "tracking_lin_vel", "tracking_ang_vel", "action_smoothness", "ang_vel_xy",
    "base_height",      "orientation",      "feet_clearance",    "torques",
    "powers",           "dof_vel",          "dof_acc",           "feet_swing_height",
    "contact",          "base_acc",         "feet_contact_forces", "feet_air_time",
    "feet_contact_number"};

}  // namespace

const char* reward_name(RewardTerm t) { return kNames[static_cast<int>(t)]; }

RewardGroup reward_group(RewardTerm t) {
  const int i = static_cast<int>(t);
  if (i <= static_cast<int>(RewardTerm::FeetClearance)) return RewardGroup::Tracking;
  if (i <= static_cast<int>(RewardTerm::FeetSwingHeight)) return RewardGroup::Action;
  return RewardGroup::Constraint;
}

bool RewardConfig::group_enabled(RewardGroup g) const {
  switch (g) {
    case RewardGroup::Tracking: return tracking_enabled;
    case RewardGroup::Action: return action_enabled;
    case RewardGroup::Constraint: return constraint_enabled;
  }
  return false;
}

void RewardConfig::validate() const {
  for (double w : weights) {
    if (!std::isfinite(w)) throw ConfigError("rewards.weights must be finite");
  }
  if (!(tracking_sigma > 0)) throw ConfigError("rewards.tracking_sigma must lie in (0, inf)");
  if (!(stance_fraction >= 0 && stance_fraction <= 1)) {
    throw ConfigError("rewards.stance_fraction must lie in [0, 1]");
  }
  if (!(max_contact_force >= 0)) {
    throw ConfigError("rewards.max_contact_force must lie in [0, inf)");
  }
  if (!(contact_threshold >= 0) || !(contact_number_threshold >= 0)) {
    throw ConfigError("rewards.contact_threshold must lie in [0, inf)");
  }
}

RewardTerms compute_rewards(const RewardInputs& in, const RewardConfig& cfg) {
  RewardTerms r;
  auto set = [&](RewardTerm t, double v) { r.values[static_cast<std::size_t>(t)] = v; };

  const Eigen::Vector2d v_err = in.command.head<2>() - in.lin_vel.head<2>();
  set(RewardTerm::TrackingLinVel, std::exp(-v_err.squaredNorm() / cfg.tracking_sigma));
  const double w_err = in.command.z() - in.ang_vel.z();
  set(RewardTerm::TrackingAngVel, std::exp(-w_err * w_err / cfg.tracking_sigma));

  const Joint8 second = cfg.literal_smoothness
                            ? Joint8(in.action - 2 * in.action_prev - in.action_prev2)
                            : Joint8(in.action - 2 * in.action_prev + in.action_prev2);
  set(RewardTerm::ActionSmoothness, second.squaredNorm());
  set(RewardTerm::AngVelXY, in.ang_vel.head<2>().squaredNorm());
  const double dh = cfg.base_height_target - in.base_height;
  set(RewardTerm::BaseHeight, dh * dh);
  set(RewardTerm::Orientation, in.gravity.head<2>().squaredNorm());

  double clearance = 0, swing = 0, contact = 0, forces = 0, air = 0, number = 0;
  for (int f = 0; f < dims::kFeet; ++f) {
    const auto fi = static_cast<std::size_t>(f);
    const double dz = cfg.foot_height_target - in.foot_height[fi];
    clearance += dz * dz * in.foot_velocity[fi].head<2>().norm();

    const double fz = in.foot_force[fi].z();
    const bool in_contact = fz > cfg.contact_threshold;
    if (!in_contact) {
      const double s = in.foot_height[fi] - cfg.foot_height_target;
      swing += s * s;
    }

    const bool stance = in.foot_phase[fi] < cfg.stance_fraction;
    const bool agree = stance == in_contact;
    contact += (cfg.literal_xor ? !agree : agree) ? 1.0 : 0.0;
    const bool agree5 = stance == (fz > cfg.contact_number_threshold);
    number += (cfg.literal_xor ? !agree5 : agree5) ? 1.0 : 0.0;

    const double fn = in.foot_force[fi].norm();
    if (fn > cfg.contact_threshold) {
      forces += cfg.literal_contact_force ? std::max(0.0, cfg.max_contact_force - fn)
                                          : std::max(0.0, fn - cfg.max_contact_force);
    }
    if (in.first_contact[fi]) air += in.air_time[fi] - cfg.air_time_target;
  }
  set(RewardTerm::FeetClearance, clearance);

  set(RewardTerm::Torques, in.torque.squaredNorm());
  set(RewardTerm::Powers, (in.torque.array() * in.joint_vel.array()).abs().sum());
  set(RewardTerm::DofVel, in.joint_vel.squaredNorm());
  set(RewardTerm::DofAcc, in.joint_acc.squaredNorm());
  set(RewardTerm::FeetSwingHeight, swing);

  set(RewardTerm::Contact, contact);
  set(RewardTerm::BaseAcc, std::exp(-in.base_vel_change.norm()));
  set(RewardTerm::FeetContactForces, forces);
  const bool moving = in.command.head<2>().norm() > cfg.air_time_command_threshold;
  set(RewardTerm::FeetAirTime, moving ? air : 0.0);
  // "/2" averages the per-foot (indicator - 0.3) over both feet.
  set(RewardTerm::FeetContactNumber, (number - 0.3 * dims::kFeet) / 2.0);

  for (int i = 0; i < kNumRewardTerms; ++i) {
    const auto t = reward_term(i);
    const auto g = reward_group(t);
    if (!cfg.group_enabled(g)) continue;
    const double c = cfg.weight(t) * r.values[static_cast<std::size_t>(i)];
    switch (g) {
      case RewardGroup::Tracking: r.tracking += c; break;
      case RewardGroup::Action: r.action += c; break;
      case RewardGroup::Constraint: r.constraint += c; break;
    }
  }
  r.weighted_total = r.tracking + r.action + r.constraint;
  return r;
}

double total_reward(const RewardTerms& terms) {
  return terms.tracking + terms.action + terms.constraint;
}

}  // namespace barlowwalk
