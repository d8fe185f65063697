#include "barlowwalk/config.hpp"

#include <fstream>
#include <sstream>

namespace barlowwalk {

using nlohmann::json;

namespace {

// One field list per section, shared by the writer and the reader.

struct Writer {
  json& j;

  template <typename T>
  void operator()(const char* key, const T& v) {
    j[key] = encode(v);
  }
  template <typename F>
  void section(const char* key, F&& f) {
    json& sub = j[key];
    sub = json::object();
    Writer w{sub};
    f(w);
  }

  template <typename T>
  static json encode(const T& v) {
    if constexpr (std::is_same_v<T, Interval>) {
      return json::array({v.lo, v.hi});
    } else if constexpr (requires { v.rows(); }) {
      json a = json::array();
      for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
      return a;
    } else {
      return json(v);
    }
  }
};

struct Reader {
  const json& j;
  std::string path;

  template <typename T>
  void operator()(const char* key, T& v) {
    const std::string full = path + key;
    if (!j.contains(key)) return;
    try {
      decode(j.at(key), v);
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + full + "' has the wrong type: " + e.what());
    }
  }
  template <typename F>
  void section(const char* key, F&& f) {
    if (!j.contains(key)) return;
    Reader r{j.at(key), path + key + "."};
    f(r);
  }

  template <typename T>
  void decode(const json& src, T& v) {
    if constexpr (std::is_same_v<T, Interval>) {
      if (!src.is_array() || src.size() != 2) throw ConfigError(path + " interval needs [lo, hi]");
      v.lo = src.at(0).get<double>();
      v.hi = src.at(1).get<double>();
    } else if constexpr (requires { v.rows(); }) {
      if (!src.is_array() || static_cast<Eigen::Index>(src.size()) != v.size()) {
        throw json::type_error::create(302, "expected an array of " + std::to_string(v.size()),
                                       &src);
      }
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = src.at(static_cast<std::size_t>(i)).get<double>();
    } else {
      v = src.get<T>();
    }
  }
};

template <typename V>
void visit(PpoConfig& c, V& v) {
  v("clip_range", c.clip_range);
  v("epochs", c.epochs);
  v("gamma", c.gamma);
  v("gae_lambda", c.gae_lambda);
  v("entropy_coef", c.entropy_coef);
  v("desired_kl", c.desired_kl);
  v("value_coef", c.value_coef);
  v("num_mini_batches", c.num_mini_batches);
  v("learning_rate", c.learning_rate);
  v("lr_min", c.lr_min);
  v("lr_max", c.lr_max);
  v("adaptive_lr", c.adaptive_lr);
  v("max_grad_norm", c.max_grad_norm);
  v("adam_beta1", c.adam_beta1);
  v("adam_beta2", c.adam_beta2);
  v("adam_eps", c.adam_eps);
}

template <typename V>
void visit(BarlowConfig& c, V& v) {
  v("enabled", c.enabled);
  v("lambda", c.lambda);
  v("center", c.center);
}

template <typename V>
void visit(EnvConfig& c, V& v) {
  v("base_mass", c.base_mass);
  v("base_inertia", c.base_inertia);
  v("gravity", c.gravity);
  v("hip_spacing", c.hip_spacing);
  v("hip_drop", c.hip_drop);
  v("abad_length", c.abad_length);
  v("thigh", c.thigh);
  v("shank", c.shank);
  v("foot_drop", c.foot_drop);
  v("toe", c.toe);
  v("heel", c.heel);
  v("foot_half_width", c.foot_half_width);
  v("default_pose", c.default_pose);
  v("kp", c.kp);
  v("kd", c.kd);
  v("torque_limit", c.torque_limit);
  v("joint_inertia", c.joint_inertia);
  v("ground_load", c.ground_load);
  v("joint_lower", c.joint_lower);
  v("joint_upper", c.joint_upper);
  v("contact_stiffness", c.contact_stiffness);
  v("contact_damping", c.contact_damping);
  v("tangential_stiffness", c.tangential_stiffness);
  v("tangential_damping", c.tangential_damping);
  v("action_scale", c.action_scale);
  v("action_clip", c.action_clip);
  v("sim_dt", c.sim_dt);
  v("decimation", c.decimation);
  v("gait_frequency", c.gait_frequency);
  v("phase_offset", c.phase_offset);
  v("fall_height", c.fall_height);
  v("fall_tilt", c.fall_tilt);
  v("max_episode_steps", c.max_episode_steps);
  v("spawn_jitter", c.spawn_jitter);
  v("scan_forward_offset", c.scan_forward_offset);
  v("noise_enabled", c.noise_enabled);
  v.section("noise", [&](auto& s) {
    s("lin_vel", c.noise.lin_vel);
    s("ang_vel", c.noise.ang_vel);
    s("gravity", c.noise.gravity);
    s("joint_pos", c.noise.joint_pos);
    s("joint_vel", c.noise.joint_vel);
    s("action", c.noise.action);
  });
  v.section("obs_scales", [&](auto& s) {
    s("lin_vel", c.scales.lin_vel);
    s("ang_vel", c.scales.ang_vel);
    s("gravity", c.scales.gravity);
    s("command", c.scales.command);
    s("joint_pos", c.scales.joint_pos);
    s("joint_vel", c.scales.joint_vel);
    s("action", c.scales.action);
  });
}

template <typename V>
void visit(TerrainConfig& c, V& v) {
  v("families", c.families);
  v("seed", c.seed);
  TerrainSchedule& s = c.schedule;
  v("cell_size", s.cell_size);
  v("rough_amplitude", s.rough_amplitude);
  v("rough_amplitude_per_level", s.rough_amplitude_per_level);
  v("slope_grade", s.slope_grade);
  v("slope_grade_per_level", s.slope_grade_per_level);
  v("stair_rise", s.stair_rise);
  v("stair_rise_per_level", s.stair_rise_per_level);
  v("stair_tread", s.stair_tread);
  v("obstacle_height", s.obstacle_height);
  v("obstacle_height_per_level", s.obstacle_height_per_level);
  v("obstacle_density_min", s.obstacle_density_min);
  v("obstacle_density_max", s.obstacle_density_max);
  v("friction", s.friction);
  v("restitution", s.restitution);
}

template <typename V>
void visit(RewardConfig& c, V& v) {
  v.section("weights", [&](auto& s) {
    for (int i = 0; i < kNumRewardTerms; ++i) {
      s(reward_name(reward_term(i)), c.weights[static_cast<std::size_t>(i)]);
    }
  });
  v("tracking_sigma", c.tracking_sigma);
  v("base_height_target", c.base_height_target);
  v("foot_height_target", c.foot_height_target);
  v("max_contact_force", c.max_contact_force);
  v("contact_threshold", c.contact_threshold);
  v("contact_number_threshold", c.contact_number_threshold);
  v("stance_fraction", c.stance_fraction);
  v("air_time_target", c.air_time_target);
  v("air_time_command_threshold", c.air_time_command_threshold);
  v("tracking_enabled", c.tracking_enabled);
  v("action_enabled", c.action_enabled);
  v("constraint_enabled", c.constraint_enabled);
  v("literal_smoothness", c.literal_smoothness);
  v("literal_xor", c.literal_xor);
  v("literal_contact_force", c.literal_contact_force);
}

template <typename V>
void visit(RandomizationConfig& c, V& v) {
  v("enabled", c.enabled);
  v("link_mass_scale", c.link_mass_scale);
  v("payload_kg", c.payload_kg);
  v("com_x_cm", c.com_x_cm);
  v("com_y_cm", c.com_y_cm);
  v("com_z_cm", c.com_z_cm);
  v("friction", c.friction);
  v("restitution", c.restitution);
  v("kp_scale", c.kp_scale);
  v("kd_scale", c.kd_scale);
  v("motor_strength", c.motor_strength);
  v("push_enabled", c.push_enabled);
  v("push_interval_s", c.push_interval_s);
  v("push_velocity", c.push_velocity);
}

template <typename V>
void visit(CurriculumConfig& c, V& v) {
  v("terrain_enabled", c.terrain_enabled);
  v("command_enabled", c.command_enabled);
  v("initial_level", c.initial_level);
  v("promote_fraction", c.promote_fraction);
  v("demote_fraction", c.demote_fraction);
  v("lin_x_start", c.lin_x_start);
  v("lin_x_end", c.lin_x_end);
  v("lin_y", c.lin_y);
  v("yaw", c.yaw);
  v("heading_command", c.heading_command);
  v("heading_gain", c.heading_gain);
}

template <typename V>
void visit(TrainConfig& c, V& v) {
  v("seed", c.seed);
  v("num_envs", c.num_envs);
  v("horizon", c.horizon);
  v("iterations", c.iterations);
  v("checkpoint_every", c.checkpoint_every);
  v("workers", c.workers);
  v("baseline2", c.baseline2);
  v("init_log_std", c.init_log_std);
  v("bootstrap_timeouts", c.bootstrap_timeouts);
  v("max_nonfinite_updates", c.max_nonfinite_updates);
  v.section("ppo", [&](auto& s) { visit(c.ppo, s); });
  v.section("barlow", [&](auto& s) { visit(c.barlow, s); });
  v.section("env", [&](auto& s) { visit(c.env, s); });
  v.section("terrain", [&](auto& s) { visit(c.terrain, s); });
  v.section("rewards", [&](auto& s) { visit(c.rewards, s); });
  v.section("randomization", [&](auto& s) { visit(c.randomization, s); });
  v.section("curriculum", [&](auto& s) { visit(c.curriculum, s); });
  v.section("eval", [&](auto& s) {
    s("success_traversal", c.eval.success_traversal);
    s("eval_command", c.eval.eval_command);
  });
}

void merge_strict(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) throw ConfigError("config section '" + path + "' must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_strict(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

}  // namespace

json to_json(const TrainConfig& c) {
  json j = json::object();
  Writer w{j};
  visit(const_cast<TrainConfig&>(c), w);
  return j;
}

TrainConfig from_json(const json& j) {
  json tree = to_json(TrainConfig{});
  merge_strict(tree, j, "");
  TrainConfig c;
  Reader r{tree, ""};
  visit(c, r);
  return c;
}

void apply_override(json& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &tree;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!node->is_object() || !node->contains(part)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object()) throw ConfigError("config key '" + key + "' names a section");
  *node = value;
}

TrainConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  json tree = to_json(TrainConfig{});
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    json user = json::object();
    if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
      user = json::parse(text, nullptr, false, true);
      if (user.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
    }
    merge_strict(tree, user, "");
  }
  for (const auto& o : overrides) apply_override(tree, o);
  TrainConfig c = from_json(tree);
  c.validate();
  return c;
}

void TrainConfig::validate() const {
  if (num_envs < 1) throw ConfigError("num_envs must lie in [1, inf)");
  if (horizon < 1) throw ConfigError("horizon must lie in [1, inf)");
  if (iterations < 0) throw ConfigError("iterations must lie in [0, inf)");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must lie in [1, inf)");
  if (workers < 1) throw ConfigError("workers must lie in [1, inf)");
  if (max_nonfinite_updates < 1) throw ConfigError("max_nonfinite_updates must lie in [1, inf)");
  ppo.validate();
  if (num_envs % ppo.num_mini_batches != 0) {
    throw ConfigError("ppo.num_mini_batches must divide num_envs (" + std::to_string(num_envs) +
                      ")");
  }
  if (!(barlow.lambda >= 0)) throw ConfigError("barlow.lambda must lie in [0, inf)");
  env.validate();
  if (terrain.families.empty()) throw ConfigError("terrain.families must not be empty");
  (void)families();
  terrain.schedule.validate();
  rewards.validate();
  randomization.validate();
  curriculum.validate();
  if (!(eval.success_traversal >= 0 && eval.success_traversal <= 1)) {
    throw ConfigError("eval.success_traversal must lie in [0, 1]");
  }
}

LossOptions TrainConfig::loss_options() const {
  LossOptions o;
  o.clip_range = ppo.clip_range;
  o.value_coef = ppo.value_coef;
  o.entropy_coef = ppo.entropy_coef;
  o.barlow_enabled = barlow.enabled && !baseline2;
  o.barlow_lambda = barlow.lambda;
  o.barlow_center = barlow.center;
  return o;
}

std::vector<TerrainFamily> TrainConfig::families() const {
  std::vector<TerrainFamily> out;
  for (const auto& f : terrain.families) out.push_back(parse_family(f));
  return out;
}

}  // namespace barlowwalk
