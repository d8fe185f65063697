#pragma once

// Surrogate biped: a rigid 6-DoF base carried by two massless 4-joint legs.
// The joints are PD servos with rotor inertia. The ground load reaches the
// abduction, hip and knee servos through the foot Jacobian; the ankle servo
// is unloaded by default, so a flat foot holds its shank. Each foot is a flat plate touching the
// heightfield through four penalty spring-damper points with stick/slip
// friction; the contact gains apply to every point.
//
// Joint order per leg: abduction (about x), hip, knee, ankle (about y).
// Left leg first.

#include "barlowwalk/randomization.hpp"
#include "barlowwalk/rewards.hpp"
#include "barlowwalk/terrain.hpp"
#include "barlowwalk/types.hpp"

#include <array>
#include <random>
#include <string>

namespace barlowwalk {

/// Offsets of each block inside the 38-entry observation.
struct ObsLayout {
  static constexpr int kLinVel = 0;
  static constexpr int kAngVel = 3;
  static constexpr int kGravity = 6;
  static constexpr int kCommand = 9;
  static constexpr int kJointPos = 12;
  static constexpr int kJointVel = 20;
  static constexpr int kAction = 28;
  static constexpr int kPhase = 36;
  static constexpr int kSize = 38;
  /// The policy view drops the leading linear velocity.
  static constexpr int kPolicyOffset = 3;
};
static_assert(ObsLayout::kSize == dims::kFullObs);
static_assert(ObsLayout::kSize - ObsLayout::kPolicyOffset == dims::kPolicyObs);

using Obs38 = Eigen::Matrix<double, dims::kFullObs, 1>;
using Vec4 = Eigen::Vector4d;

struct ObservationFrame {
  Obs38 full = Obs38::Zero();
  Vector<double> policy_view() const { return full.tail(dims::kPolicyObs); }
};

struct ObsNoise {
  double lin_vel = 0.1;
  double ang_vel = 0.2;
  double gravity = 0.05;
  double joint_pos = 0.01;
  double joint_vel = 1.5;
  double action = 0.01;
};

/// Fixed per-block scales applied after noise.
struct ObsScales {
  double lin_vel = 2.0;
  double ang_vel = 0.25;
  double gravity = 1.0;
  Eigen::Vector3d command{2.0, 2.0, 0.25};
  double joint_pos = 1.0;
  double joint_vel = 0.05;
  double action = 1.0;

  static ObsScales unit() {
    ObsScales s;
    s.lin_vel = s.ang_vel = s.gravity = s.joint_pos = s.joint_vel = s.action = 1.0;
    s.command.setOnes();
    return s;
  }
};

struct EnvConfig {
  double base_mass = 15.0;
  Eigen::Vector3d base_inertia{0.8, 0.7, 0.4};
  double gravity = 9.81;

  double hip_spacing = 0.1;    // lateral offset of each hip
  double hip_drop = 0.05;      // base origin to abduction axis
  double abad_length = 0.05;   // abduction axis to hip pitch axis
  double thigh = 0.35;
  double shank = 0.35;
  double foot_drop = 0.04;     // ankle to sole
  double toe = 0.09;
  double heel = 0.09;
  double foot_half_width = 0.04;

  Vec4 default_pose{0.0, -0.35, 0.70, -0.35};
  Vec4 kp{100.0, 100.0, 150.0, 45.0};
  Vec4 kd{1.5, 1.5, 1.5, 0.8};
  Vec4 torque_limit{80.0, 80.0, 80.0, 40.0};
  Vec4 joint_inertia{0.05, 0.05, 0.05, 0.01};
  Vec4 ground_load{0.5, 0.5, 0.5, 0.0};  // fraction of the contact load each servo feels
  Vec4 joint_lower{-0.5, -1.4, 0.0, -1.0};
  Vec4 joint_upper{0.5, 1.0, 2.0, 0.8};

  // Per sole point.
  double contact_stiffness = 5000.0;
  double contact_damping = 100.0;
  double tangential_stiffness = 2500.0;
  double tangential_damping = 15.0;

  double action_scale = 0.25;
  double action_clip = 10.0;
  double sim_dt = 0.005;
  int decimation = 4;
  double gait_frequency = 1.5;
  std::array<double, dims::kFeet> phase_offset{0.0, 0.5};
  double fall_height = 0.35;
  double fall_tilt = 0.8;
  int max_episode_steps = 1000;
  double spawn_jitter = 0.5;  // m, uniform around the tile center
  double scan_forward_offset = 0.3;

  bool noise_enabled = true;
  ObsNoise noise;
  ObsScales scales;

  double control_dt() const { return sim_dt * decimation; }
  double episode_seconds() const { return max_episode_steps * control_dt(); }
  void validate() const;
};

struct RobotState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // base origin, world
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d lin_vel = Eigen::Vector3d::Zero();  // world
  Eigen::Vector3d ang_vel = Eigen::Vector3d::Zero();  // body
  Joint8 q = Joint8::Zero();
  Joint8 qd = Joint8::Zero();
  Joint8 tau = Joint8::Zero();
  std::array<Eigen::Vector3d, dims::kFeet> foot_position{Eigen::Vector3d::Zero(),
                                                         Eigen::Vector3d::Zero()};
  std::array<Eigen::Vector3d, dims::kFeet> foot_velocity{Eigen::Vector3d::Zero(),
                                                         Eigen::Vector3d::Zero()};
  std::array<Eigen::Vector3d, dims::kFeet> foot_force{Eigen::Vector3d::Zero(),
                                                      Eigen::Vector3d::Zero()};
  double phase = 0.0;

  Eigen::Vector3d body_lin_vel() const { return orientation.conjugate() * lin_vel; }
  Eigen::Vector3d projected_gravity() const {
    return orientation.conjugate() * Eigen::Vector3d(0, 0, -1);
  }
  double yaw() const;
};

/// Sole contact points of one foot in the base frame, plus the sole center.
struct FootPoints {
  std::array<Eigen::Vector3d, 4> points;
  Eigen::Vector3d center;
};

/// Forward kinematics of leg `leg` (0 left, 1 right) in the base frame.
FootPoints foot_kinematics(const EnvConfig& cfg, int leg, const Vec4& q);

/// Table-ordered observation. Noise is uniform in +-range per block and is
/// added before scaling; commands and phase are exact.
ObservationFrame observe(const RobotState& s, const Eigen::Vector3d& command,
                         const Joint8& prev_action, bool noise_on, std::mt19937_64& rng,
                         const EnvConfig& cfg);

/// Noise-free observation followed by the height scan.
Vector<double> critic_observe(const RobotState& s, const Eigen::Vector3d& command,
                              const Joint8& prev_action, const Vector<double>& scan,
                              const EnvConfig& cfg);

struct StepResult {
  RewardTerms terms;
  double reward = 0;
  bool done = false;
  bool fell = false;
  bool timeout = false;
  bool truncated = false;  // non-finite state
  std::string diagnostic;
};

struct EpisodeStats {
  int steps = 0;
  double ret = 0;
  double lin_err = 0;  // summed per step, |c_xy - v_xy|
  double ang_err = 0;  // summed per step, |c_yaw - w_z|
  std::array<double, kNumRewardTerms> terms{};  // weighted, summed
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  double distance = 0;
};

class BipedEnv {
 public:
  BipedEnv(const TerrainWorld& world, EnvConfig cfg, RewardConfig rewards,
           RandomizationConfig randomization, std::uint64_t seed);

  /// Places the robot near the center of tile (row, level) in the default
  /// pose, draws a fresh randomization and command (a heading target in
  /// heading mode).
  void reset(int row, int level, const CommandRanges& commands);
  /// Same, with an explicit fixed command.
  void reset_with_command(int row, int level, const Eigen::Vector3d& command);

  StepResult step(const Joint8& action);

  ObservationFrame observe();  // draws noise from the env generator when enabled
  ObservationFrame observe_clean() const;
  Vector<double> critic_observe() const;

  const RobotState& state() const { return s_; }
  RobotState& mutable_state() { return s_; }
  const Eigen::Vector3d& command() const { return command_; }
  void set_command(const Eigen::Vector3d& c) { command_ = c; }
  const RandomizationDraw& draw() const { return draw_; }
  void set_draw(const RandomizationDraw& d);
  const EpisodeStats& episode() const { return episode_; }
  int row() const { return row_; }
  int level() const { return level_; }
  const EnvConfig& config() const { return cfg_; }
  EnvConfig& mutable_config() { return cfg_; }
  const RewardConfig& reward_config() const { return rewards_; }
  const TerrainWorld& world() const { return *world_; }
  std::mt19937_64& rng() { return rng_; }
  void seed(std::uint64_t s) { rng_.seed(s); }
  const Joint8& last_action() const { return a1_; }
  double base_height() const;
  /// Foot sole center height above the terrain below it.
  double foot_clearance(int foot) const;

  /// Bit-exact snapshot of everything that evolves, for checkpoints.
  std::vector<double> save_state() const;
  void load_state(const std::vector<double>& v);
  std::string rng_state() const;
  void set_rng_state(const std::string& s);

 private:
  void place(int row, int level);
  void substep(const Joint8& q_target);
  /// Ground reaction on the base, plus what the same forces do to each
  /// joint: generalized torque and its local stiffness and damping.
  struct JointLoad {
    Joint8 tau = Joint8::Zero();
    Joint8 stiffness = Joint8::Zero();
    Joint8 damping = Joint8::Zero();
  };
  void contact_forces(Eigen::Vector3d& force, Eigen::Vector3d& torque, JointLoad& load);
  void refresh_feet();
  RewardInputs reward_inputs(const Joint8& qd_prev, const Eigen::Vector3d& v_prev) const;

  const TerrainWorld* world_;
  EnvConfig cfg_;
  RewardConfig rewards_;
  RandomizationConfig rand_;
  std::mt19937_64 rng_;

  RobotState s_;
  RandomizationDraw draw_;
  Eigen::Vector3d command_ = Eigen::Vector3d::Zero();
  CommandRanges ranges_;
  double heading_target_ = 0.0;  // NaN when the yaw rate is commanded directly
  Joint8 a1_ = Joint8::Zero(), a2_ = Joint8::Zero();  // previous two actions
  int step_ = 0;
  int row_ = 0, level_ = 0;
  std::array<double, dims::kFeet> air_time_{};
  std::array<bool, dims::kFeet> last_contact_{};
  // Stiction anchors per sole point (xy), NaN when not touching.
  std::array<Eigen::Vector2d, 2 * dims::kFeet * 2> anchors_;
  EpisodeStats episode_;
};

}  // namespace barlowwalk
