#include "barlowwalk/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace barlowwalk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::Matrix3d rot_x(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()).toRotationMatrix();
}
Eigen::Matrix3d rot_y(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitY()).toRotationMatrix();
}

Vec4 leg_of(const Joint8& v, int leg) { return v.segment<4>(4 * leg); }

Joint8 both(const Vec4& v) {
  Joint8 out;
  out << v, v;
  return out;
}

bool finite_state(const RobotState& s) {
  return s.position.allFinite() && s.orientation.coeffs().allFinite() && s.lin_vel.allFinite() &&
         s.ang_vel.allFinite() && s.q.allFinite() && s.qd.allFinite();
}

void positive(double v, const char* key) {
  if (!(v > 0)) throw ConfigError(std::string(key) + " must lie in (0, inf)");
}

}  // namespace

double RobotState::yaw() const {
  const Eigen::Vector3d fwd = orientation * Eigen::Vector3d::UnitX();
  return std::atan2(fwd.y(), fwd.x());
}

void EnvConfig::validate() const {
  positive(base_mass, "env.base_mass");
  if (!(base_inertia.array() > 0).all()) throw ConfigError("env.base_inertia must lie in (0, inf)");
  positive(thigh, "env.thigh");
  positive(shank, "env.shank");
  positive(sim_dt, "env.sim_dt");
  positive(action_scale, "env.action_scale");
  positive(action_clip, "env.action_clip");
  positive(gait_frequency, "env.gait_frequency");
  if (decimation < 1) throw ConfigError("env.decimation must lie in [1, inf)");
  if (max_episode_steps < 1) throw ConfigError("env.max_episode_steps must lie in [1, inf)");
  if (!(joint_inertia.array() > 0).all()) throw ConfigError("env.joint_inertia must lie in (0, inf)");
  if (!(ground_load.array() >= 0).all() || !(ground_load.array() <= 1).all()) {
    throw ConfigError("env.ground_load must lie in [0, 1]");
  }
  if (!(kp.array() >= 0).all() || !(kd.array() >= 0).all()) {
    throw ConfigError("env.kp and env.kd must lie in [0, inf)");
  }
  if (!(torque_limit.array() >= 0).all()) throw ConfigError("env.torque_limit must lie in [0, inf)");
  if (!(joint_lower.array() < joint_upper.array()).all()) {
    throw ConfigError("env.joint_lower must be below env.joint_upper");
  }
  if (!(contact_stiffness > 0 && contact_damping >= 0 && tangential_stiffness > 0 &&
        tangential_damping >= 0)) {
    throw ConfigError("env contact stiffness must lie in (0, inf) and damping in [0, inf)");
  }
  if (!(fall_tilt > 0 && fall_tilt <= 1)) throw ConfigError("env.fall_tilt must lie in (0, 1]");
  for (double p : phase_offset) {
    if (!(p >= 0 && p < 1)) throw ConfigError("env.phase_offset must lie in [0, 1)");
  }
}

FootPoints foot_kinematics(const EnvConfig& c, int leg, const Vec4& q) {
  const double side = leg == 0 ? 1.0 : -1.0;
  const Eigen::Vector3d hip(0, side * c.hip_spacing, -c.hip_drop);
  const Eigen::Matrix3d r0 = rot_x(q(0));
  const Eigen::Vector3d p1 = hip + r0 * Eigen::Vector3d(0, 0, -c.abad_length);
  const Eigen::Matrix3d r1 = r0 * rot_y(q(1));
  const Eigen::Vector3d knee = p1 + r1 * Eigen::Vector3d(0, 0, -c.thigh);
  const Eigen::Matrix3d r2 = r1 * rot_y(q(2));
  const Eigen::Vector3d ankle = knee + r2 * Eigen::Vector3d(0, 0, -c.shank);
  const Eigen::Matrix3d r3 = r2 * rot_y(q(3));
  FootPoints f;
  int k = 0;
  for (double dx : {c.toe, -c.heel}) {
    for (double dy : {c.foot_half_width, -c.foot_half_width}) {
      f.points[static_cast<std::size_t>(k++)] = ankle + r3 * Eigen::Vector3d(dx, dy, -c.foot_drop);
    }
  }
  f.center = ankle + r3 * Eigen::Vector3d(0.5 * (c.toe - c.heel), 0, -c.foot_drop);
  return f;
}

ObservationFrame observe(const RobotState& s, const Eigen::Vector3d& command,
                         const Joint8& prev_action, bool noise_on, std::mt19937_64& rng,
                         const EnvConfig& cfg) {
  using L = ObsLayout;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto noise = [&](int n, double range) {
    Vector<double> v = Vector<double>::Zero(n);
    if (noise_on) {
      for (int i = 0; i < n; ++i) v(i) = range * u(rng);
    }
    return v;
  };
  const ObsScales& sc = cfg.scales;
  const ObsNoise& nz = cfg.noise;
  const Eigen::Vector3d gravity = s.projected_gravity();
  ObservationFrame o;
  o.full.segment<3>(L::kLinVel) = (s.body_lin_vel() + noise(3, nz.lin_vel)) * sc.lin_vel;
  o.full.segment<3>(L::kAngVel) = (s.ang_vel + noise(3, nz.ang_vel)) * sc.ang_vel;
  o.full.segment<3>(L::kGravity) = (gravity + noise(3, nz.gravity)) * sc.gravity;
  o.full.segment<3>(L::kCommand) = command.cwiseProduct(sc.command);
  o.full.segment<8>(L::kJointPos) =
      (s.q - both(cfg.default_pose) + noise(8, nz.joint_pos)) * sc.joint_pos;
  o.full.segment<8>(L::kJointVel) = (s.qd + noise(8, nz.joint_vel)) * sc.joint_vel;
  o.full.segment<8>(L::kAction) = (prev_action + noise(8, nz.action)) * sc.action;
  const double ang = 2.0 * std::numbers::pi * s.phase;
  o.full(L::kPhase) = std::sin(ang);
  o.full(L::kPhase + 1) = std::cos(ang);
  return o;
}

Vector<double> critic_observe(const RobotState& s, const Eigen::Vector3d& command,
                              const Joint8& prev_action, const Vector<double>& scan,
                              const EnvConfig& cfg) {
  if (scan.size() != dims::kScan) {
    throw ConfigError("height scan has " + std::to_string(scan.size()) + " entries, expected " +
                      std::to_string(dims::kScan));
  }
  std::mt19937_64 unused;
  Vector<double> out(dims::kCriticIn);
  out.head(dims::kFullObs) = observe(s, command, prev_action, false, unused, cfg).full;
  out.tail(dims::kScan) = scan;
  return out;
}

BipedEnv::BipedEnv(const TerrainWorld& world, EnvConfig cfg, RewardConfig rewards,
                   RandomizationConfig randomization, std::uint64_t seed)
    : world_(&world),
      cfg_(std::move(cfg)),
      rewards_(std::move(rewards)),
      rand_(std::move(randomization)),
      rng_(seed) {
  cfg_.validate();
  rewards_.validate();
  rand_.validate();
  anchors_.fill(Eigen::Vector2d::Constant(kNaN));
  place(0, 0);
}

void BipedEnv::set_draw(const RandomizationDraw& d) { draw_ = d; }

void BipedEnv::reset(int row, int level, const CommandRanges& commands) {
  draw_ = sample_randomization(rng_, rand_);
  command_ = sample_command(rng_, commands);
  ranges_ = commands;
  heading_target_ = commands.heading ? sample_heading(rng_) : kNaN;
  place(row, level);
  if (commands.heading) command_.z() = heading_yaw_rate(heading_target_, s_.yaw(), ranges_);
}

void BipedEnv::reset_with_command(int row, int level, const Eigen::Vector3d& command) {
  draw_ = sample_randomization(rng_, rand_);
  command_ = command;
  heading_target_ = kNaN;
  place(row, level);
}

void BipedEnv::place(int row, int level) {
  if (row < 0 || row >= TerrainWorld::kRows) throw ConfigError("row outside [0, 9]");
  if (level < 0 || level > kMaxLevel) throw ConfigError("terrain level outside [0, 9]");
  row_ = row;
  level_ = level;
  Eigen::Vector2d xy = world_->tile_center(row, level);
  if (cfg_.spawn_jitter > 0) {
    std::uniform_real_distribution<double> u(-cfg_.spawn_jitter, cfg_.spawn_jitter);
    xy.x() += u(rng_);
    xy.y() += u(rng_);
  }
  s_ = RobotState{};
  s_.q = both(cfg_.default_pose);
  // Lowest sole point just touches the highest terrain below any point.
  double ground = -std::numeric_limits<double>::infinity();
  double sole = std::numeric_limits<double>::infinity();
  for (int leg = 0; leg < dims::kFeet; ++leg) {
    for (const auto& p : foot_kinematics(cfg_, leg, cfg_.default_pose).points) {
      ground = std::max(ground, world_->height_at(xy.x() + p.x(), xy.y() + p.y()));
      sole = std::min(sole, p.z());
    }
  }
  s_.position = Eigen::Vector3d(xy.x(), xy.y(), ground - sole + 0.002);
  anchors_.fill(Eigen::Vector2d::Constant(kNaN));
  a1_.setZero();
  a2_.setZero();
  step_ = 0;
  air_time_.fill(0.0);
  last_contact_.fill(false);
  refresh_feet();
  episode_ = EpisodeStats{};
  episode_.start = xy;
}

double BipedEnv::base_height() const {
  return s_.position.z() - world_->height_at(s_.position.x(), s_.position.y());
}

double BipedEnv::foot_clearance(int foot) const {
  const auto& p = s_.foot_position[static_cast<std::size_t>(foot)];
  return p.z() - world_->height_at(p.x(), p.y());
}

void BipedEnv::refresh_feet() {
  const Eigen::Matrix3d R = s_.orientation.toRotationMatrix();
  for (int leg = 0; leg < dims::kFeet; ++leg) {
    const Vec4 q = leg_of(s_.q, leg);
    const Vec4 qd = leg_of(s_.qd, leg);
    const auto f0 = foot_kinematics(cfg_, leg, q);
    constexpr double h = 1e-6;
    const auto f1 = foot_kinematics(cfg_, leg, q + h * qd);
    const Eigen::Vector3d rel = (f1.center - f0.center) / h;
    const auto li = static_cast<std::size_t>(leg);
    s_.foot_position[li] = s_.position + R * f0.center;
    s_.foot_velocity[li] = s_.lin_vel + R * (s_.ang_vel.cross(f0.center) + rel);
  }
}

void BipedEnv::contact_forces(Eigen::Vector3d& force, Eigen::Vector3d& torque, JointLoad& load) {
  const Eigen::Matrix3d R = s_.orientation.toRotationMatrix();
  const Eigen::Vector3d com = R * (draw_.com_offset_cm / 100.0);
  const double kn = cfg_.contact_stiffness;
  const double cn = cfg_.contact_damping * (1.0 - 0.5 * draw_.restitution);
  const double kt = cfg_.tangential_stiffness;
  const double ct = cfg_.tangential_damping;
  const double mu = draw_.friction;
  force.setZero();
  torque.setZero();
  load = JointLoad{};
  constexpr double h = 1e-6;
  for (int leg = 0; leg < dims::kFeet; ++leg) {
    const Vec4 q = leg_of(s_.q, leg);
    const Vec4 qd = leg_of(s_.qd, leg);
    const auto f0 = foot_kinematics(cfg_, leg, q);
    const auto f1 = foot_kinematics(cfg_, leg, q + h * qd);
    // Sole point Jacobians in world axes, one column per joint of this leg.
    std::array<Eigen::Matrix<double, 3, 4>, 4> jac;
    for (int k = 0; k < 4; ++k) {
      const auto fk = foot_kinematics(cfg_, leg, q + h * Vec4::Unit(k));
      for (int p = 0; p < 4; ++p) {
        const auto pi = static_cast<std::size_t>(p);
        jac[pi].col(k) = R * (fk.points[pi] - f0.points[pi]) / h;
      }
    }
    Eigen::Vector3d foot_total = Eigen::Vector3d::Zero();
    for (int k = 0; k < 4; ++k) {
      const auto ki = static_cast<std::size_t>(k);
      Eigen::Vector2d& anchor = anchors_[static_cast<std::size_t>(4 * leg + k)];
      const Eigen::Vector3d pb = f0.points[ki];
      const Eigen::Vector3d p = s_.position + R * pb;
      const double pen = world_->height_at(p.x(), p.y()) - p.z();
      if (pen <= 0) {
        anchor.setConstant(kNaN);
        continue;
      }
      const Eigen::Vector3d v =
          s_.lin_vel + R * (s_.ang_vel.cross(pb) + (f1.points[ki] - pb) / h);
      const double fz = std::max(0.0, kn * pen - cn * v.z());
      if (std::isnan(anchor.x())) anchor = p.head<2>();
      Eigen::Vector2d ft = -kt * (p.head<2>() - anchor) - ct * v.head<2>();
      const double cap = mu * fz;
      const double norm = ft.norm();
      const bool sliding = norm > cap;
      if (sliding) {
        ft *= norm > 0 ? cap / norm : 0.0;
        anchor = p.head<2>() + (ft + ct * v.head<2>()) / kt;
      }
      const Eigen::Vector3d f(ft.x(), ft.y(), fz);
      foot_total += f;
      torque += (R * pb - com).cross(f);

      const auto& J = jac[ki];
      const Vec4 tau = J.transpose() * f;
      const Vec4 jz = J.row(2).transpose();
      const Vec4 jxy = J.topRows<2>().colwise().squaredNorm().transpose();
      load.tau.segment<4>(4 * leg) += tau;
      load.stiffness.segment<4>(4 * leg) += kn * jz.cwiseAbs2() + (sliding ? 0.0 : kt) * jxy;
      load.damping.segment<4>(4 * leg) += (fz > 0 ? cn : 0.0) * jz.cwiseAbs2() + ct * jxy;
    }
    s_.foot_force[static_cast<std::size_t>(leg)] = foot_total;
    force += foot_total;
  }
}

void BipedEnv::substep(const Joint8& q_target) {
  const double dt = cfg_.sim_dt;
  Eigen::Vector3d force, torque;
  JointLoad load;
  contact_forces(force, torque, load);

  // Joints: implicit in the PD terms and, to first order, in their share of
  // the ground load, so a stiff contact cannot be hammered by a leg.
  for (int j = 0; j < dims::kJoints; ++j) {
    const int k = j % 4;
    const double kp = cfg_.kp(k) * draw_.kp_scale;
    const double kd = cfg_.kd(k) * draw_.kd_scale;
    const double lim = cfg_.torque_limit(k) * draw_.motor_strength;
    const double inertia = cfg_.joint_inertia(k);
    const double share = cfg_.ground_load(k);
    const double kc = share * load.stiffness(j), cc = share * load.damping(j);
    double& q = s_.q(j);
    double& qd = s_.qd(j);
    const double err = q_target(j) - q;
    const double explicit_tau = kp * err - kd * qd;
    const double rhs = inertia * qd + dt * (share * load.tau(j) + cc * qd);
    double qd_new, tau;
    if (std::abs(explicit_tau) <= lim) {
      qd_new = (rhs + dt * kp * err) / (inertia + dt * (kd + cc) + dt * dt * (kp + kc));
      tau = kp * (err - dt * qd_new) - kd * qd_new;
      tau = std::clamp(tau, -lim, lim);
    } else {
      tau = std::clamp(explicit_tau, -lim, lim);
      qd_new = (rhs + dt * tau) / (inertia + dt * cc + dt * dt * kc);
    }
    qd = qd_new;
    q += dt * qd;
    s_.tau(j) = tau;
    const double lo = cfg_.joint_lower(k), hi = cfg_.joint_upper(k);
    if (q < lo || q > hi) {
      q = std::clamp(q, lo, hi);
      qd = 0.0;
    }
  }

  const double mass = cfg_.base_mass * draw_.link_mass_scale + draw_.payload_kg;
  const Eigen::Vector3d inertia = cfg_.base_inertia * (mass / cfg_.base_mass);
  const Eigen::Matrix3d R = s_.orientation.toRotationMatrix();
  const Eigen::Vector3d tau_b = R.transpose() * torque;
  const Eigen::Vector3d& w = s_.ang_vel;
  const Eigen::Vector3d gyro = w.cross(inertia.cwiseProduct(w));
  s_.ang_vel += dt * (tau_b - gyro).cwiseQuotient(inertia);
  s_.lin_vel += dt * (force / mass + Eigen::Vector3d(0, 0, -cfg_.gravity));
  s_.position += dt * s_.lin_vel;
  const double angle = s_.ang_vel.norm() * dt;
  if (angle > 0) {
    s_.orientation =
        s_.orientation * Eigen::Quaterniond(Eigen::AngleAxisd(angle, s_.ang_vel.normalized()));
  }
  s_.orientation.normalize();
}

RewardInputs BipedEnv::reward_inputs(const Joint8& qd_prev, const Eigen::Vector3d& v_prev) const {
  RewardInputs in;
  in.lin_vel = s_.body_lin_vel();
  in.ang_vel = s_.ang_vel;
  in.gravity = s_.projected_gravity();
  in.command = command_;
  in.base_height = base_height();
  for (int f = 0; f < dims::kFeet; ++f) {
    const auto fi = static_cast<std::size_t>(f);
    in.foot_height[fi] = foot_clearance(f);
    in.foot_velocity[fi] = s_.foot_velocity[fi];
    in.foot_force[fi] = s_.foot_force[fi];
    in.foot_phase[fi] = std::fmod(s_.phase + cfg_.phase_offset[fi], 1.0);
  }
  in.torque = s_.tau;
  in.joint_vel = s_.qd;
  in.joint_acc = (s_.qd - qd_prev) / cfg_.control_dt();
  in.base_vel_change = s_.lin_vel - v_prev;
  return in;
}

StepResult BipedEnv::step(const Joint8& raw_action) {
  StepResult r;
  Joint8 action = raw_action;
  if (!action.allFinite()) {
    r.done = r.truncated = true;
    r.diagnostic = "non-finite action";
    return r;
  }
  action = action.cwiseMax(-cfg_.action_clip).cwiseMin(cfg_.action_clip);
  const Joint8 q_target = both(cfg_.default_pose) + cfg_.action_scale * action;
  const Joint8 qd_prev = s_.qd;
  const Eigen::Vector3d v_prev = s_.lin_vel;

  for (int k = 0; k < cfg_.decimation; ++k) substep(q_target);
  ++step_;

  const int push_steps =
      std::max(1, static_cast<int>(std::lround(rand_.push_interval_s / cfg_.control_dt())));
  if (rand_.push_enabled && step_ % push_steps == 0) s_.lin_vel += sample_push(rng_, rand_);

  s_.phase = std::fmod(s_.phase + cfg_.gait_frequency * cfg_.control_dt(), 1.0);
  refresh_feet();
  if (!std::isnan(heading_target_)) {
    command_.z() = heading_yaw_rate(heading_target_, s_.yaw(), ranges_);
  }

  if (!finite_state(s_)) {
    r.done = r.truncated = true;
    r.diagnostic = "non-finite robot state at step " + std::to_string(step_);
    episode_.steps = step_;
    return r;
  }

  RewardInputs in = reward_inputs(qd_prev, v_prev);
  in.action = action;
  in.action_prev = a1_;
  in.action_prev2 = a2_;
  for (int f = 0; f < dims::kFeet; ++f) {
    const auto fi = static_cast<std::size_t>(f);
    const bool contact = s_.foot_force[fi].z() > rewards_.contact_threshold;
    const bool filtered = contact || last_contact_[fi];
    last_contact_[fi] = contact;
    in.first_contact[fi] = air_time_[fi] > 0 && filtered;
    air_time_[fi] += cfg_.control_dt();
    in.air_time[fi] = air_time_[fi];
    if (filtered) air_time_[fi] = 0.0;
  }
  r.terms = compute_rewards(in, rewards_);
  r.reward = r.terms.weighted_total;
  a2_ = a1_;
  a1_ = action;

  const Eigen::Vector3d g = s_.projected_gravity();
  r.fell = base_height() < cfg_.fall_height || g.head<2>().squaredNorm() > cfg_.fall_tilt;
  r.timeout = step_ >= cfg_.max_episode_steps;
  r.done = r.fell || r.timeout;

  episode_.steps = step_;
  episode_.ret += r.reward;
  episode_.lin_err += (command_.head<2>() - in.lin_vel.head<2>()).norm();
  episode_.ang_err += std::abs(command_.z() - in.ang_vel.z());
  for (int i = 0; i < kNumRewardTerms; ++i) {
    const auto t = reward_term(i);
    if (rewards_.group_enabled(reward_group(t))) {
      episode_.terms[static_cast<std::size_t>(i)] += rewards_.weight(t) * r.terms[t];
    }
  }
  episode_.distance = (s_.position.head<2>() - episode_.start).norm();
  return r;
}

ObservationFrame BipedEnv::observe() {
  return barlowwalk::observe(s_, command_, a1_, cfg_.noise_enabled, rng_, cfg_);
}

ObservationFrame BipedEnv::observe_clean() const {
  std::mt19937_64 unused;
  return barlowwalk::observe(s_, command_, a1_, false, unused, cfg_);
}

Vector<double> BipedEnv::critic_observe() const {
  ScanGrid grid;
  grid.forward_offset = cfg_.scan_forward_offset;
  const Vector<double> scan = height_scan(*world_, s_.position, s_.yaw(), grid);
  return barlowwalk::critic_observe(s_, command_, a1_, scan, cfg_);
}

std::vector<double> BipedEnv::save_state() const {
  std::vector<double> v;
  auto put = [&](const auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) v.push_back(m(i));
  };
  put(s_.position);
  put(s_.orientation.coeffs());
  put(s_.lin_vel);
  put(s_.ang_vel);
  put(s_.q);
  put(s_.qd);
  put(s_.tau);
  for (int f = 0; f < dims::kFeet; ++f) {
    const auto fi = static_cast<std::size_t>(f);
    put(s_.foot_position[fi]);
    put(s_.foot_velocity[fi]);
    put(s_.foot_force[fi]);
    v.push_back(air_time_[fi]);
    v.push_back(last_contact_[fi] ? 1.0 : 0.0);
  }
  v.push_back(s_.phase);
  v.push_back(draw_.link_mass_scale);
  v.push_back(draw_.payload_kg);
  put(draw_.com_offset_cm);
  v.push_back(draw_.friction);
  v.push_back(draw_.restitution);
  v.push_back(draw_.kp_scale);
  v.push_back(draw_.kd_scale);
  v.push_back(draw_.motor_strength);
  put(command_);
  put(a1_);
  put(a2_);
  v.push_back(step_);
  v.push_back(row_);
  v.push_back(level_);
  for (const auto& a : anchors_) put(a);
  v.push_back(episode_.steps);
  v.push_back(episode_.ret);
  v.push_back(episode_.lin_err);
  v.push_back(episode_.ang_err);
  for (double t : episode_.terms) v.push_back(t);
  put(episode_.start);
  v.push_back(episode_.distance);
  v.push_back(heading_target_);
  v.push_back(ranges_.yaw.lo);
  v.push_back(ranges_.yaw.hi);
  v.push_back(ranges_.heading_gain);
  return v;
}

void BipedEnv::load_state(const std::vector<double>& v) {
  std::size_t i = 0;
  auto get = [&](auto& m) {
    for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = v.at(i++);
  };
  auto next = [&]() { return v.at(i++); };
  get(s_.position);
  get(s_.orientation.coeffs());
  get(s_.lin_vel);
  get(s_.ang_vel);
  get(s_.q);
  get(s_.qd);
  get(s_.tau);
  for (int f = 0; f < dims::kFeet; ++f) {
    const auto fi = static_cast<std::size_t>(f);
    get(s_.foot_position[fi]);
    get(s_.foot_velocity[fi]);
    get(s_.foot_force[fi]);
    air_time_[fi] = next();
    last_contact_[fi] = next() != 0.0;
  }
  s_.phase = next();
  draw_.link_mass_scale = next();
  draw_.payload_kg = next();
  get(draw_.com_offset_cm);
  draw_.friction = next();
  draw_.restitution = next();
  draw_.kp_scale = next();
  draw_.kd_scale = next();
  draw_.motor_strength = next();
  get(command_);
  get(a1_);
  get(a2_);
  step_ = static_cast<int>(next());
  row_ = static_cast<int>(next());
  level_ = static_cast<int>(next());
  for (auto& a : anchors_) get(a);
  episode_.steps = static_cast<int>(next());
  episode_.ret = next();
  episode_.lin_err = next();
  episode_.ang_err = next();
  for (double& t : episode_.terms) t = next();
  get(episode_.start);
  episode_.distance = next();
  heading_target_ = next();
  ranges_.yaw.lo = next();
  ranges_.yaw.hi = next();
  ranges_.heading_gain = next();
  ranges_.heading = !std::isnan(heading_target_);
  if (i != v.size()) throw ConfigError("environment snapshot has the wrong length");
}

std::string BipedEnv::rng_state() const {
  std::ostringstream os;
  os << rng_;
  return os.str();
}

void BipedEnv::set_rng_state(const std::string& s) {
  std::istringstream is(s);
  is >> rng_;
  if (!is) throw ConfigError("malformed generator state in checkpoint");
}

}  // namespace barlowwalk
