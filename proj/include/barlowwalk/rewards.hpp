#pragma once

// The seventeen shaped reward terms, their weights and group sums.

#include "barlowwalk/types.hpp"

#include <array>
#include <string>

namespace barlowwalk {

enum class RewardGroup { Tracking, Action, Constraint };

enum class RewardTerm {
  TrackingLinVel,
  TrackingAngVel,
  ActionSmoothness,
  AngVelXY,
  BaseHeight,
  Orientation,
  FeetClearance,
  Torques,
  Powers,
  DofVel,
  DofAcc,
  FeetSwingHeight,
  Contact,
  BaseAcc,
  FeetContactForces,
  FeetAirTime,
  FeetContactNumber,
};

inline constexpr int kNumRewardTerms = 17;

const char* reward_name(RewardTerm t);
RewardGroup reward_group(RewardTerm t);
inline RewardTerm reward_term(int i) { return static_cast<RewardTerm>(i); }

using Joint8 = Eigen::Matrix<double, dims::kJoints, 1>;

struct RewardConfig {
  std::array<double, kNumRewardTerms> weights = {
      5.0, 2.5, -0.01, -0.05, -10.0, -1.0, 1.0,        // tracking
      -8e-5, -2e-3, -1e-3, -2.5e-7, -20.0,             // action
      0.18, 0.2, -0.002, 1.0, 1.2};                    // constraint
  double tracking_sigma = 0.25;
  double base_height_target = 0.8;
  double foot_height_target = 0.1;
  double max_contact_force = 350.0;
  double contact_threshold = 1.0;
  double contact_number_threshold = 5.0;
  double stance_fraction = 0.55;
  double air_time_target = 0.5;
  double air_time_command_threshold = 0.1;
  bool tracking_enabled = true;
  bool action_enabled = true;
  bool constraint_enabled = true;
  bool literal_smoothness = false;
  bool literal_xor = false;
  bool literal_contact_force = false;

  double weight(RewardTerm t) const { return weights[static_cast<std::size_t>(t)]; }
  bool group_enabled(RewardGroup g) const;
  void validate() const;
};

/// Everything the reward terms read, for one control step.
struct RewardInputs {
  Eigen::Vector3d lin_vel = Eigen::Vector3d::Zero();  // body frame
  Eigen::Vector3d ang_vel = Eigen::Vector3d::Zero();  // body frame
  Eigen::Vector3d gravity{0, 0, -1};                  // unit, body frame
  Eigen::Vector3d command = Eigen::Vector3d::Zero();  // c_x, c_y, c_yaw
  Joint8 action = Joint8::Zero();
  Joint8 action_prev = Joint8::Zero();
  Joint8 action_prev2 = Joint8::Zero();
  double base_height = 0.8;  // above local terrain
  std::array<double, dims::kFeet> foot_height{};
  std::array<Eigen::Vector3d, dims::kFeet> foot_velocity{Eigen::Vector3d::Zero(),
                                                         Eigen::Vector3d::Zero()};
  std::array<Eigen::Vector3d, dims::kFeet> foot_force{Eigen::Vector3d::Zero(),
                                                      Eigen::Vector3d::Zero()};
  std::array<double, dims::kFeet> foot_phase{};
  Joint8 torque = Joint8::Zero();
  Joint8 joint_vel = Joint8::Zero();
  Joint8 joint_acc = Joint8::Zero();
  Eigen::Vector3d base_vel_change = Eigen::Vector3d::Zero();  // over one control step
  /// Air time accumulated up to and including this step, and whether this
  /// step is the first in contact after a swing.
  std::array<double, dims::kFeet> air_time{};
  std::array<bool, dims::kFeet> first_contact{};
};

struct RewardTerms {
  std::array<double, kNumRewardTerms> values{};  // unweighted
  double tracking = 0;
  double action = 0;
  double constraint = 0;
  double weighted_total = 0;

  double operator[](RewardTerm t) const { return values[static_cast<std::size_t>(t)]; }
};

RewardTerms compute_rewards(const RewardInputs& in, const RewardConfig& cfg);

/// Sum of the three group contributions.
double total_reward(const RewardTerms& terms);

}  // namespace barlowwalk
