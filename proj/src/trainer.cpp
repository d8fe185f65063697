#include "barlowwalk/trainer.hpp"

#include "barlowwalk/nn/serialize.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <thread>

namespace barlowwalk {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kRollingEpisodes = 100;
constexpr const char* kOptimFirst = "optim.m.";
constexpr const char* kOptimSecond = "optim.v.";

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 g(seq);
  return g();
}

std::string rng_to_string(const std::mt19937_64& g) {
  std::ostringstream os;
  os << g;
  return os.str();
}

void rng_from_string(std::mt19937_64& g, const std::string& s) {
  std::istringstream is(s);
  is >> g;
  if (!is) throw ConfigError("malformed generator state in checkpoint");
}

json matrix_json(const Matrix<Real>& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.size(); ++i) a.push_back(static_cast<double>(m.data()[i]));
  return a;
}

void matrix_from_json(const json& a, Matrix<Real>& m) {
  if (static_cast<Eigen::Index>(a.size()) != m.size()) {
    throw ConfigError("checkpoint block has a matrix of the wrong size");
  }
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<Real>(a.at(static_cast<std::size_t>(i)).get<double>());
  }
}

std::optional<double> mean_of(const std::deque<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct CheckpointFile {
  nn::ParamSet<Real> entries;
  json block;
};

CheckpointFile read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint '" + path + "'");
  CheckpointFile f;
  f.entries = nn::read_params<Real>(in);
  const std::uint64_t len = nn::io::read_u64(in);
  if (len > (1ull << 34)) throw ConfigError("checkpoint trailing block is implausibly large");
  std::vector<std::uint8_t> bytes(len);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(len))) {
    throw ConfigError("checkpoint trailing block is truncated");
  }
  f.block = json::from_cbor(bytes, true, false);
  if (f.block.is_discarded()) throw ConfigError("checkpoint trailing block is not valid CBOR");
  return f;
}

nn::ParamSet<Real> model_entries(const nn::ParamSet<Real>& all) {
  nn::ParamSet<Real> out;
  for (const auto& e : all.entries()) {
    if (e.name.rfind("optim.", 0) == 0) continue;
    out.add(e.name, e.dims).values = e.values;
  }
  return out;
}

std::unique_ptr<TerrainWorld> make_world(const TrainConfig& cfg,
                                         std::vector<TerrainFamily> families) {
  const std::uint64_t seed = cfg.terrain.seed != 0 ? cfg.terrain.seed : derive_seed(cfg.seed, 7);
  return std::make_unique<TerrainWorld>(std::move(families), seed, cfg.terrain.schedule);
}

}  // namespace

json IterationMetrics::to_json() const {
  json j;
  j["iteration"] = iteration;
  j["mean_reward"] = opt_json(mean_reward);
  j["mean_episode_length"] = opt_json(mean_episode_length);
  j["mean_step_reward"] = mean_step_reward;
  j["mean_terrain_level"] = mean_terrain_level;
  j["lin_tracking_error"] = opt_json(lin_tracking_error);
  j["ang_tracking_error"] = opt_json(ang_tracking_error);
  j["episodes"] = episodes;
  j["falls"] = falls;
  j["lr"] = update.lr;
  j["kl"] = update.kl;
  j["loss_pi"] = update.loss_pi;
  j["loss_v"] = update.loss_v;
  j["loss_bt"] = update.loss_bt;
  j["entropy"] = update.entropy;
  j["C_diag_mean"] = update.c_diag_mean;
  j["C_offdiag_rms"] = update.c_offdiag_rms;
  j["skipped_steps"] = update.skipped_steps;
  json terms = json::object();
  for (int i = 0; i < kNumRewardTerms; ++i) {
    terms[reward_name(reward_term(i))] = opt_json(reward_terms[static_cast<std::size_t>(i)]);
  }
  j["reward_terms"] = terms;
  return j;
}

Trainer::Trainer(TrainConfig cfg)
    : cfg_(std::move(cfg)), net_(NetworkShape::standard(cfg_.baseline2)) {
  cfg_.validate();
  net_.shape().audit();
  world_ = make_world(cfg_, cfg_.families());
  params_ = net_.make_params();
  rng_.seed(derive_seed(cfg_.seed, 1));
  {
    std::mt19937_64 init_rng(derive_seed(cfg_.seed, 2));
    net_.init(params_, init_rng, cfg_.init_log_std);
  }
  opt_.adam = Adam<Real>(cfg_.ppo.adam_beta1, cfg_.ppo.adam_beta2, cfg_.ppo.adam_eps);
  opt_.adam.reset(params_);
  opt_.lr = cfg_.ppo.learning_rate;
  batch_.allocate(cfg_.num_envs, cfg_.horizon, net_.shape());
  curriculum_ = make_curriculum(cfg_.num_envs, cfg_.curriculum);
  actor_hidden_.setZero(cfg_.num_envs, net_.shape().gru_hidden);
  critic_hidden_.setZero(cfg_.num_envs, net_.shape().gru_hidden);
  slots_.resize(static_cast<std::size_t>(cfg_.num_envs));
  for (int e = 0; e < cfg_.num_envs; ++e) {
    auto& s = slots_[static_cast<std::size_t>(e)];
    s.env = std::make_unique<BipedEnv>(*world_, cfg_.env, cfg_.rewards, cfg_.randomization,
                                       derive_seed(cfg_.seed, 1000 + static_cast<std::uint64_t>(e)));
    reset_env(e);
  }
}

void Trainer::reset_env(int e) {
  auto& s = slots_[static_cast<std::size_t>(e)];
  s.env->reset(e % TerrainWorld::kRows, curriculum_.levels[static_cast<std::size_t>(e)],
               curriculum_.commands);
  s.history.clear();
  s.obs = s.env->observe();
  actor_hidden_.row(e).setZero();
  critic_hidden_.row(e).setZero();
}

void Trainer::step_envs(const Matrix<Real>& actions, std::vector<StepResult>& results) {
  const int n = cfg_.num_envs;
  auto work = [&](int begin, int end) {
    for (int e = begin; e < end; ++e) {
      results[static_cast<std::size_t>(e)] =
          slots_[static_cast<std::size_t>(e)].env->step(actions.row(e).transpose().cast<double>());
    }
  };
  const int workers = std::min(cfg_.workers, n);
  if (workers <= 1) {
    work(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (n + workers - 1) / workers;
  for (int w = 1; w < workers; ++w) {
    const int b = w * chunk, end = std::min(n, b + chunk);
    if (b < end) pool.emplace_back(work, b, end);
  }
  work(0, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

void Trainer::finish_episode(int e, const StepResult& r, IterationMetrics& m) {
  auto& env = *slots_[static_cast<std::size_t>(e)].env;
  const EpisodeStats& ep = env.episode();
  const double len = std::max(1, ep.steps);
  EpisodeRecord rec{ep.ret, static_cast<double>(ep.steps), ep.lin_err / len, ep.ang_err / len,
                    ep.terms};
  recent_.push_back(rec);
  if (recent_.size() > kRollingEpisodes) recent_.pop_front();
  ++m.episodes;
  const bool fell = r.fell || r.truncated;
  if (fell) ++m.falls;

  EpisodeResult res;
  res.distance = ep.distance;
  res.commanded_speed = env.command().head<2>().norm();
  res.duration_s = env.config().episode_seconds();
  res.fell = fell;
  update_curriculum(curriculum_, e, res, world_->tile_length(), cfg_.curriculum);
  reset_env(e);
}

void Trainer::collect(IterationMetrics& m) {
  const int n = cfg_.num_envs;
  const auto& shape = net_.shape();
  Matrix<Real> hist_new(n, shape.history_slice()), pobs(n, shape.policy_obs),
      cobs(n, shape.critic_in());
  std::vector<StepResult> results(static_cast<std::size_t>(n));
  std::normal_distribution<double> gauss;
  double reward_sum = 0;

  for (int t = 0; t < cfg_.horizon; ++t) {
    for (int e = 0; e < n; ++e) {
      auto& s = slots_[static_cast<std::size_t>(e)];
      const HistoryBuffer<Real>::Frame frame = s.obs.policy_view().cast<Real>();
      const auto views = twin_views(s.history, frame);
      const auto row = batch_.row(t, e);
      batch_.hist_old.row(row) = views.old_slice.transpose();
      batch_.hist_new.row(row) = views.new_slice.transpose();
      hist_new.row(e) = views.new_slice.transpose();
      pobs.row(e) = frame.transpose();
      if (shape.baseline2) {
        cobs.row(e) = s.env->observe_clean().full.cast<Real>().transpose();
      } else {
        cobs.row(e) = s.env->critic_observe().cast<Real>().transpose();
      }
      s.history.push(frame);
    }
    const auto rows = batch_.row(t, 0);
    batch_.policy_obs.middleRows(rows, n) = pobs;
    batch_.critic_obs.middleRows(rows, n) = cobs;
    batch_.actor_hidden.middleRows(rows, n) = actor_hidden_;
    batch_.critic_hidden.middleRows(rows, n) = critic_hidden_;

    auto act = net_.act(params_, hist_new, pobs, actor_hidden_);
    auto val = net_.evaluate(params_, cobs, critic_hidden_);
    actor_hidden_ = act.hidden;
    critic_hidden_ = val.hidden;
    batch_.log_std = act.log_std;

    Matrix<Real> actions(n, shape.action);
    const RowVector<Real> sigma = act.log_std.array().exp().matrix();
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    for (int e = 0; e < n; ++e) {
      double lp = 0;
      for (int a = 0; a < shape.action; ++a) {
        const double z = gauss(rng_);
        actions(e, a) = static_cast<Real>(act.mean(e, a) + sigma(a) * z);
        // Density of the stored (rounded) action.
        const double zz = (static_cast<double>(actions(e, a)) - act.mean(e, a)) / sigma(a);
        lp += -0.5 * zz * zz - static_cast<double>(act.log_std(a)) - half_log_2pi;
      }
      batch_.log_probs(rows + e) = static_cast<Real>(lp);
    }
    batch_.actions.middleRows(rows, n) = actions;
    batch_.action_mean.middleRows(rows, n) = act.mean;
    batch_.values.segment(rows, n) = val.value;

    step_envs(actions, results);

    for (int e = 0; e < n; ++e) {
      const StepResult& r = results[static_cast<std::size_t>(e)];
      double reward = r.reward;
      if (r.timeout && !r.fell && cfg_.bootstrap_timeouts) {
        reward += cfg_.ppo.gamma * static_cast<double>(val.value(e));
      }
      if (!std::isfinite(reward)) reward = 0.0;
      batch_.rewards(rows + e) = static_cast<Real>(reward);
      batch_.dones[static_cast<std::size_t>(rows + e)] = r.done ? 1 : 0;
      reward_sum += r.reward;
      auto& s = slots_[static_cast<std::size_t>(e)];
      if (r.done) {
        finish_episode(e, r, m);
      } else {
        s.obs = s.env->observe();
      }
    }
  }

  // Bootstrap values of the states after the last step.
  for (int e = 0; e < n; ++e) {
    auto& s = slots_[static_cast<std::size_t>(e)];
    if (shape.baseline2) {
      cobs.row(e) = s.env->observe_clean().full.cast<Real>().transpose();
    } else {
      cobs.row(e) = s.env->critic_observe().cast<Real>().transpose();
    }
  }
  batch_.last_values = net_.evaluate(params_, cobs, critic_hidden_).value;
  batch_.compute_returns(static_cast<Real>(cfg_.ppo.gamma), static_cast<Real>(cfg_.ppo.gae_lambda));
  m.mean_step_reward = reward_sum / (static_cast<double>(n) * cfg_.horizon);
}

IterationMetrics Trainer::run_iteration() {
  using clock = std::chrono::steady_clock;
  IterationMetrics m;
  m.iteration = iteration_;
  const auto t0 = clock::now();
  collect(m);
  const auto t1 = clock::now();
  m.update = update(batch_, net_, params_, opt_, cfg_.ppo, cfg_.loss_options());
  const auto t2 = clock::now();
  m.collect_seconds = std::chrono::duration<double>(t1 - t0).count();
  m.update_seconds = std::chrono::duration<double>(t2 - t1).count();

  const bool bad = m.update.aborted ||
                   (m.update.steps > 0 && m.update.skipped_steps == m.update.steps);
  nonfinite_streak_ = bad ? nonfinite_streak_ + 1 : 0;

  std::deque<double> ret, len, lin, ang;
  std::array<std::deque<double>, kNumRewardTerms> terms;
  for (const auto& r : recent_) {
    ret.push_back(r.ret);
    len.push_back(r.length);
    lin.push_back(r.lin_err);
    ang.push_back(r.ang_err);
    for (int i = 0; i < kNumRewardTerms; ++i) {
      terms[static_cast<std::size_t>(i)].push_back(r.terms[static_cast<std::size_t>(i)]);
    }
  }
  m.mean_reward = mean_of(ret);
  m.mean_episode_length = mean_of(len);
  m.lin_tracking_error = mean_of(lin);
  m.ang_tracking_error = mean_of(ang);
  for (int i = 0; i < kNumRewardTerms; ++i) {
    m.reward_terms[static_cast<std::size_t>(i)] = mean_of(terms[static_cast<std::size_t>(i)]);
  }
  m.mean_terrain_level = curriculum_.mean_level();
  ++iteration_;
  return m;
}

void Trainer::save_checkpoint(const std::string& path) const {
  nn::ParamSet<Real> all;
  for (const auto& e : params_.entries()) all.add(e.name, e.dims).values = e.values;
  const auto& adam = opt_.adam;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto& e = params_.entries()[k];
    all.add(kOptimFirst + e.name, e.dims).values = adam.first_moments()[k];
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto& e = params_.entries()[k];
    all.add(kOptimSecond + e.name, e.dims).values = adam.second_moments()[k];
  }

  json b;
  b["config"] = to_json(cfg_);
  b["iteration"] = iteration_;
  b["lr"] = opt_.lr;
  b["adam_steps"] = adam.steps();
  b["nonfinite_streak"] = nonfinite_streak_;
  b["rng"] = rng_to_string(rng_);
  b["levels"] = curriculum_.levels;
  b["promotions"] = curriculum_.promotions;
  b["demotions"] = curriculum_.demotions;
  b["actor_hidden"] = matrix_json(actor_hidden_);
  b["critic_hidden"] = matrix_json(critic_hidden_);
  json envs = json::array();
  for (const auto& s : slots_) {
    json je;
    je["state"] = s.env->save_state();
    je["rng"] = s.env->rng_state();
    Matrix<Real> frames(dims::kHistoryDepth, dims::kPolicyObs);
    for (int i = 0; i < dims::kHistoryDepth; ++i) frames.row(i) = s.history.frame(i).transpose();
    je["history"] = matrix_json(frames);
    std::vector<double> obs(s.obs.full.data(), s.obs.full.data() + s.obs.full.size());
    je["obs"] = obs;
    envs.push_back(je);
  }
  b["envs"] = envs;
  json recent = json::array();
  for (const auto& r : recent_) {
    recent.push_back({{"ret", r.ret}, {"length", r.length}, {"lin", r.lin_err},
                      {"ang", r.ang_err}, {"terms", r.terms}});
  }
  b["recent"] = recent;

  const std::vector<std::uint8_t> bytes = json::to_cbor(b);
  const fs::path tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write checkpoint '" + path + "'");
    nn::write_params(out, all);
    nn::io::write_u64(out, bytes.size());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("cannot write checkpoint '" + path + "'");
  }
  fs::rename(tmp, path);
}

void Trainer::load_checkpoint(const std::string& path) {
  CheckpointFile f = read_checkpoint(path);
  // The terrain and the environments are rebuilt from the configuration, so
  // whatever shapes them must agree with the run that wrote the file.
  if (f.block.contains("config")) {
    const json mine = to_json(cfg_);
    const json& theirs = f.block.at("config");
    for (const char* key : {"seed", "num_envs", "horizon", "baseline2", "env", "terrain",
                            "randomization", "rewards"}) {
      if (!theirs.contains(key) || theirs.at(key) != mine.at(key)) {
        throw ConfigError(std::string("checkpoint was written with a different '") + key +
                          "' configuration");
      }
    }
  }
  nn::assign_params(params_, model_entries(f.entries));
  auto& adam = opt_.adam;
  adam.reset(params_);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto& name = params_.entries()[k].name;
    adam.first_moments()[k] = f.entries.at(kOptimFirst + name).values;
    adam.second_moments()[k] = f.entries.at(kOptimSecond + name).values;
  }
  const json& b = f.block;
  try {
    adam.set_steps(b.at("adam_steps").get<long long>());
    iteration_ = b.at("iteration").get<int>();
    opt_.lr = b.at("lr").get<double>();
    nonfinite_streak_ = b.at("nonfinite_streak").get<int>();
    rng_from_string(rng_, b.at("rng").get<std::string>());
    curriculum_.levels = b.at("levels").get<std::vector<int>>();
    if (static_cast<int>(curriculum_.levels.size()) != cfg_.num_envs) {
      throw ConfigError("checkpoint was written with a different num_envs");
    }
    curriculum_.promotions = b.at("promotions").get<long>();
    curriculum_.demotions = b.at("demotions").get<long>();
    curriculum_.commands = command_ranges(curriculum_.mean_level(), cfg_.curriculum);
    matrix_from_json(b.at("actor_hidden"), actor_hidden_);
    matrix_from_json(b.at("critic_hidden"), critic_hidden_);
    const json& envs = b.at("envs");
    for (std::size_t e = 0; e < slots_.size(); ++e) {
      auto& s = slots_[e];
      const json& je = envs.at(e);
      s.env->load_state(je.at("state").get<std::vector<double>>());
      s.env->set_rng_state(je.at("rng").get<std::string>());
      Matrix<Real> frames(dims::kHistoryDepth, dims::kPolicyObs);
      matrix_from_json(je.at("history"), frames);
      s.history.clear();
      for (int i = 0; i < dims::kHistoryDepth; ++i) s.history.push(frames.row(i).transpose());
      const auto obs = je.at("obs").get<std::vector<double>>();
      if (obs.size() != static_cast<std::size_t>(dims::kFullObs)) {
        throw ConfigError("checkpoint observation has the wrong size");
      }
      for (int i = 0; i < dims::kFullObs; ++i) s.obs.full(i) = obs[static_cast<std::size_t>(i)];
    }
    recent_.clear();
    for (const auto& r : b.at("recent")) {
      recent_.push_back(EpisodeRecord{r.at("ret").get<double>(), r.at("length").get<double>(),
                                      r.at("lin").get<double>(), r.at("ang").get<double>(),
                                      r.at("terms").get<std::array<double, kNumRewardTerms>>()});
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint trailing block is malformed: ") + e.what());
  }
}

TrainConfig checkpoint_config(const std::string& path) {
  const CheckpointFile f = read_checkpoint(path);
  if (!f.block.contains("config")) throw ConfigError("checkpoint has no configuration block");
  TrainConfig c = from_json(f.block.at("config"));
  c.validate();
  return c;
}

int train(const TrainConfig& cfg, const TrainOptions& opt) {
  fs::create_directories(opt.run_dir);
  const fs::path dir(opt.run_dir);
  Trainer trainer(cfg);
  if (!opt.resume.empty()) trainer.load_checkpoint(opt.resume);
  {
    std::ofstream snap(dir / "config.snapshot");
    snap << std::setw(2) << to_json(trainer.config()) << "\n";
  }
  const auto mode = opt.resume.empty() ? std::ios::trunc : std::ios::app;
  std::ofstream metrics(dir / "metrics.jsonl", std::ios::out | mode);
  std::ofstream timing(dir / "timing.jsonl", std::ios::out | mode);
  if (!metrics || !timing) throw ConfigError("cannot write into run directory " + opt.run_dir);

  auto checkpoint = [&]() {
    trainer.save_checkpoint((dir / ("ckpt_" + std::to_string(trainer.iteration()) + ".bwlk")).string());
  };
  while (trainer.iteration() < cfg.iterations) {
    if (opt.stop && opt.stop->load()) {
      checkpoint();
      if (!opt.quiet) std::fprintf(stderr, "interrupted at iteration %d, checkpoint written\n", trainer.iteration());
      return kExitOk;
    }
    const IterationMetrics m = trainer.run_iteration();
    metrics << m.to_json().dump() << "\n";
    metrics.flush();
    timing << json{{"iteration", m.iteration},
                   {"collect_s", m.collect_seconds},
                   {"update_s", m.update_seconds}}
                  .dump()
           << "\n";
    if (!opt.quiet) {
      std::printf("it %5d  reward %9.2f  level %.2f  lr %.2e  kl %.4f  bt %.3f  %.2fs\n",
                  m.iteration, m.mean_reward.value_or(0.0), m.mean_terrain_level, m.update.lr,
                  m.update.kl, m.update.loss_bt, m.collect_seconds + m.update_seconds);
      std::fflush(stdout);
    }
    if (trainer.nonfinite_streak() >= cfg.max_nonfinite_updates) {
      std::fprintf(stderr, "numerical abort: %d consecutive non-finite updates (%s)\n",
                   trainer.nonfinite_streak(), m.update.diagnostic.c_str());
      return kExitNumerical;
    }
    if (trainer.iteration() % cfg.checkpoint_every == 0) checkpoint();
  }
  if (trainer.iteration() % cfg.checkpoint_every != 0 || cfg.iterations == 0) checkpoint();
  return kExitOk;
}

EvalReport evaluate(const TrainConfig& cfg, const ActorCritic<Real>& net,
                    nn::ParamSet<Real>& params, const EvalOptions& opt) {
  auto world = make_world(cfg, {opt.family});
  BipedEnv env(*world, cfg.env, cfg.rewards, cfg.randomization, derive_seed(opt.seed, 11));
  std::ofstream trace;
  if (!opt.trace_path.empty()) {
    trace.open(opt.trace_path);
    if (!trace) throw ConfigError("cannot write trace '" + opt.trace_path + "'");
    trace << "episode,step,x,y,z,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz";
    for (int j = 0; j < dims::kJoints; ++j) trace << ",q" << j;
    for (int j = 0; j < dims::kJoints; ++j) trace << ",qd" << j;
    for (int j = 0; j < dims::kJoints; ++j) trace << ",tau" << j;
    trace << ",fz_left,fz_right,reward\n";
    trace << std::setprecision(9);
  }
  EvalReport rep;
  const Eigen::Vector3d command(cfg.eval.eval_command, 0.0, 0.0);
  const int row = 0;
  for (int ep = 0; ep < opt.episodes; ++ep) {
    env.reset_with_command(row, opt.level, command);
    HistoryBuffer<Real> hist;
    Matrix<Real> h = Matrix<Real>::Zero(1, net.shape().gru_hidden);
    StepResult r;
    do {
      const HistoryBuffer<Real>::Frame frame = env.observe().policy_view().cast<Real>();
      const auto views = twin_views(hist, frame);
      hist.push(frame);
      auto out = net.act(params, views.new_slice.transpose(), frame.transpose(), h);
      h = out.hidden;
      r = env.step(out.mean.row(0).transpose().cast<double>());
      if (trace.is_open()) {
        const auto& s = env.state();
        trace << ep << "," << env.episode().steps;
        for (double v : {s.position.x(), s.position.y(), s.position.z(), s.orientation.w(),
                         s.orientation.x(), s.orientation.y(), s.orientation.z(), s.lin_vel.x(),
                         s.lin_vel.y(), s.lin_vel.z(), s.ang_vel.x(), s.ang_vel.y(), s.ang_vel.z()}) {
          trace << "," << v;
        }
        for (int j = 0; j < dims::kJoints; ++j) trace << "," << s.q(j);
        for (int j = 0; j < dims::kJoints; ++j) trace << "," << s.qd(j);
        for (int j = 0; j < dims::kJoints; ++j) trace << "," << s.tau(j);
        trace << "," << s.foot_force[0].z() << "," << s.foot_force[1].z() << "," << r.reward << "\n";
      }
    } while (!r.done);
    const EpisodeStats& st = env.episode();
    EpisodeReport e;
    e.ret = st.ret;
    e.steps = st.steps;
    e.lin_err = st.lin_err / std::max(1, st.steps);
    e.ang_err = st.ang_err / std::max(1, st.steps);
    e.distance = st.distance;
    e.fell = r.fell || r.truncated;
    const double commanded = command.head<2>().norm() * cfg.env.episode_seconds();
    e.success = !e.fell && e.distance >= cfg.eval.success_traversal * commanded;
    rep.episodes.push_back(e);
    for (int i = 0; i < kNumRewardTerms; ++i) {
      rep.reward_terms[static_cast<std::size_t>(i)] += st.terms[static_cast<std::size_t>(i)];
    }
  }
  const double n = std::max(1, opt.episodes);
  for (const auto& e : rep.episodes) {
    rep.success_rate += e.success ? 1.0 / n : 0.0;
    rep.mean_return += e.ret / n;
    rep.mean_lin_err += e.lin_err / n;
    rep.mean_ang_err += e.ang_err / n;
  }
  for (double& t : rep.reward_terms) t /= n;
  return rep;
}

namespace {

struct LoadedPolicy {
  TrainConfig cfg;
  ActorCritic<Real> net;
  nn::ParamSet<Real> params;
};

LoadedPolicy load_policy(const std::string& checkpoint) {
  CheckpointFile f = read_checkpoint(checkpoint);
  if (!f.block.contains("config")) throw ConfigError("checkpoint has no configuration block");
  TrainConfig cfg = from_json(f.block.at("config"));
  ActorCritic<Real> net(NetworkShape::standard(cfg.baseline2));
  nn::ParamSet<Real> params = net.make_params();
  nn::assign_params(params, model_entries(f.entries));
  return {std::move(cfg), std::move(net), std::move(params)};
}

}  // namespace

EvalReport evaluate_checkpoint(const std::string& checkpoint, const EvalOptions& opt) {
  LoadedPolicy p = load_policy(checkpoint);
  return evaluate(p.cfg, p.net, p.params, opt);
}

std::vector<int> export_latents(const std::string& checkpoint, const std::string& csv_path,
                                const LatentExportOptions& opt) {
  LoadedPolicy p = load_policy(checkpoint);
  if (!p.net.has_latent_path()) {
    throw ConfigError("export-latents needs a checkpoint with the latent encoder (not baseline2)");
  }
  std::ofstream out(csv_path);
  if (!out) throw ConfigError("cannot write '" + csv_path + "'");
  out << "episode_id,step,terrain_family,terrain_level";
  for (int k = 0; k < dims::kLatent; ++k) out << ",z_" << k;
  out << "\n" << std::setprecision(9);

  std::vector<int> counts;
  int episode = 0;
  for (TerrainFamily fam : opt.families) {
    auto world = make_world(p.cfg, {fam});
    int rows = 0;
    for (int e = 0; e < opt.envs; ++e) {
      BipedEnv env(*world, p.cfg.env, p.cfg.rewards, p.cfg.randomization,
                   derive_seed(opt.seed, 100 + static_cast<std::uint64_t>(e)));
      std::mt19937_64 cmd_rng(derive_seed(opt.seed, 500 + static_cast<std::uint64_t>(e)));
      const CommandRanges ranges = command_ranges(0.0, p.cfg.curriculum);
      env.reset_with_command(e % TerrainWorld::kRows, opt.level, sample_command(cmd_rng, ranges));
      HistoryBuffer<Real> hist;
      Matrix<Real> h = Matrix<Real>::Zero(1, p.net.shape().gru_hidden);
      int step = 0;
      for (int t = 0; t < opt.steps; ++t, ++step) {
        const HistoryBuffer<Real>::Frame frame = env.observe().policy_view().cast<Real>();
        const auto views = twin_views(hist, frame);
        hist.push(frame);
        auto a = p.net.act(p.params, views.new_slice.transpose(), frame.transpose(), h);
        h = a.hidden;
        out << episode << "," << step << "," << family_name(fam) << "," << opt.level;
        for (int k = 0; k < dims::kLatent; ++k) out << "," << a.features(0, k);
        out << "\n";
        ++rows;
        const StepResult r = env.step(a.mean.row(0).transpose().cast<double>());
        if (r.done) {
          env.reset_with_command(e % TerrainWorld::kRows, opt.level,
                                 sample_command(cmd_rng, ranges));
          hist.clear();
          h.setZero();
          ++episode;
          step = -1;
        }
      }
      ++episode;
    }
    counts.push_back(rows);
  }
  return counts;
}

void metrics_to_csv(const std::string& jsonl_path, std::ostream& out) {
  std::ifstream in(jsonl_path);
  if (!in) throw ConfigError("cannot open '" + jsonl_path + "'");
  std::vector<std::string> columns;
  std::string line;
  bool header = false;
  out << std::setprecision(10);
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("malformed metrics line: " + line);
    const json flat = j.flatten();
    if (!header) {
      for (auto it = flat.begin(); it != flat.end(); ++it) columns.push_back(it.key());
      for (std::size_t i = 0; i < columns.size(); ++i) {
        std::string name = columns[i].substr(1);
        for (char& c : name) {
          if (c == '/') c = '.';
        }
        out << (i ? "," : "") << name;
      }
      out << "\n";
      header = true;
    }
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out << ",";
      if (!flat.contains(columns[i])) continue;
      const json& v = flat.at(columns[i]);
      if (v.is_number()) {
        out << v.get<double>();
      } else if (v.is_boolean()) {
        out << (v.get<bool>() ? 1 : 0);
      }
    }
    out << "\n";
  }
}

}  // namespace barlowwalk
