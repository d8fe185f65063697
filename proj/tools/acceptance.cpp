// Acceptance suite: one PASS/FAIL line per criterion. Criteria 7, 8 and 10
// train ten full-length runs and take a couple of hours on one core.
//
//   barlowwalk_acceptance [--work-dir DIR] [--only 1,2,...] [--reuse]

#include "barlowwalk/barlow.hpp"
#include "barlowwalk/config.hpp"
#include "barlowwalk/env.hpp"
#include "barlowwalk/grad_check.hpp"
#include "barlowwalk/ppo.hpp"
#include "barlowwalk/randomization.hpp"
#include "barlowwalk/rewards.hpp"
#include "barlowwalk/trainer.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

using namespace barlowwalk;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Tolerances and thresholds.
constexpr double kGradTol = 1e-4;
constexpr int kGradSeeds = 10;
constexpr double kGradSeconds = 120.0;
constexpr double kOracleTol = 1e-10;
constexpr double kRewardTol = 1e-9;
constexpr int kDraws = 100000;
constexpr double kCoverage = 0.02;
constexpr int kTrainSeeds = 5;
constexpr int kWindow = 100;             // iterations averaged at each end
constexpr double kReturnGain = 3.0;      // final mean vs first mean
constexpr double kLevelTarget = 2.0;
constexpr int kSeedsNeeded7 = 4;
constexpr int kPairsNeeded8 = 3;
constexpr int kLatentRowsPerFamily = 1000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1 -------------------------------------------------------------------------

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = gradcheck::run_suite(kGradSeeds, 1e-6, kGradTol);
  const double elapsed = seconds_since(t0);
  double worst = 0;
  bool ok = !results.empty();
  std::set<std::string> nets, seeds_seen;
  for (const auto& r : results) {
    ok = ok && r.report.passed && r.report.max_rel_error < kGradTol;
    worst = std::max(worst, r.report.max_rel_error);
    nets.insert(r.network);
    seeds_seen.insert(std::to_string(r.seed));
  }
  ok = ok && seeds_seen.size() >= static_cast<std::size_t>(kGradSeeds) && elapsed < kGradSeconds;
  return {ok, fmt("%zu networks x %zu seeds, worst rel err %.2e (< %.0e), %.1f s (< %.0f s)",
                  nets.size(), seeds_seen.size(), worst, kGradTol, elapsed, kGradSeconds)};
}

// 2 -------------------------------------------------------------------------

Outcome barlow_oracle() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  double worst = 0;
  for (int n : {2, 8, 64}) {
    for (int d : {2, 16, 64}) {
      Matrix<double> a(n, d), b(n, d);
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        a(i) = g(rng);
        b(i) = g(rng);
      }
      const Matrix<double> C = cross_corr(a, b).C;
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          double num = 0, na = 0, nb = 0;
          for (int k = 0; k < n; ++k) {
            num += a(k, i) * b(k, j);
            na += a(k, i) * a(k, i);
            nb += b(k, j) * b(k, j);
          }
          worst = std::max(worst, std::abs(C(i, j) - num / (std::sqrt(na) * std::sqrt(nb))));
        }
      }
    }
  }
  const double identity = barlow_loss<double>(Matrix<double>::Identity(16, 16), 5e-3);
  const double ones = barlow_loss<double>(Matrix<double>::Ones(2, 2), 5e-3);
  const bool ok = worst <= kOracleTol && identity == 0.0 && std::abs(ones - 0.01) < 1e-15;
  return {ok, fmt("max |C - naive| %.2e (<= 1e-10), L(I) = %g, L(ones 2x2) = %.17g", worst,
                  identity, ones)};
}

// 3 -------------------------------------------------------------------------

Outcome ppo_mechanics() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ratio_d(0.3, 2.0), adv_d(-2.0, 2.0);
  const int n = 2000;
  const double eps = 0.2;
  Matrix<double> lp_new(n, 1);
  Vector<double> lp_old = Vector<double>::Zero(n), adv(n);
  for (int i = 0; i < n; ++i) {
    lp_new(i, 0) = std::log(ratio_d(rng));
    adv(i) = adv_d(rng);
  }
  nn::Tape<double> t;
  auto x = t.variable(lp_new);
  t.backward(nn::sum(ppo_surrogate(x, lp_old, adv, eps)));
  const Matrix<double>& grad = t.grad(x);
  int clipped = 0;
  bool zero_ok = true, slope_ok = true;
  for (int i = 0; i < n; ++i) {
    const double r = std::exp(lp_new(i, 0));
    const bool in_clip = (adv(i) > 0 && r > 1 + eps) || (adv(i) < 0 && r < 1 - eps);
    if (in_clip) {
      ++clipped;
      zero_ok = zero_ok && grad(i, 0) == 0.0;
    } else {
      slope_ok = slope_ok && std::abs(grad(i, 0) - r * adv(i)) <= 1e-12 * (1 + std::abs(r * adv(i)));
    }
  }

  double gae_err = 0;
  const double gamma = 0.99, lambda = 0.95;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution coin(0.1);
  for (int s = 0; s < 100; ++s) {
    const int T = 20;
    Vector<double> r(T), v(T + 1);
    std::vector<bool> done(T);
    for (int k = 0; k < T; ++k) {
      r(k) = u(rng);
      done[static_cast<std::size_t>(k)] = coin(rng);
    }
    for (int k = 0; k <= T; ++k) v(k) = u(rng);
    const auto got = compute_gae(r, v, done, gamma, lambda);
    for (int k = 0; k < T; ++k) {
      // Brute force: sum over l of (gamma lambda)^l delta_{k+l}, stopping at a done.
      double want = 0, w = 1;
      for (int l = k; l < T; ++l) {
        const double nd = done[static_cast<std::size_t>(l)] ? 0.0 : 1.0;
        want += w * (r(l) + gamma * nd * v(l + 1) - v(l));
        if (done[static_cast<std::size_t>(l)]) break;
        w *= gamma * lambda;
      }
      gae_err = std::max(gae_err, std::abs(got.advantages(k) - want));
    }
  }

  const double lr1 = adapt_lr(1e-3, 0.03, 0.01);
  const double lr2 = adapt_lr(1e-3, 0.004, 0.01);
  const double lr3 = adapt_lr(1e-2, 0.001, 0.01);
  const bool lr_ok = std::abs(lr1 - 6.667e-4) < 1e-7 && std::abs(lr2 - 1.5e-3) < 1e-15 &&
                     lr3 == 1e-2;
  const bool ok = zero_ok && slope_ok && clipped > 100 && gae_err <= kOracleTol && lr_ok;
  return {ok, fmt("%d clipped samples with zero gradient: %s; GAE max err %.2e; lr cases "
                  "%.4e %.4e %.4e",
                  clipped, zero_ok ? "yes" : "no", gae_err, lr1, lr2, lr3)};
}

// 4 -------------------------------------------------------------------------

Outcome dimensions() {
  bool ok = true;
  std::string bad;
  auto expect = [&](const char* what, long got, long want) {
    if (got != want) {
      ok = false;
      bad += fmt(" %s=%ld(want %ld)", what, got, want);
    }
  };
  const NetworkShape s = NetworkShape::standard();
  try {
    s.audit();
  } catch (const ConfigError& e) {
    ok = false;
    bad += std::string(" audit: ") + e.what();
  }
  const TerrainWorld world({TerrainFamily::Rough}, 1);
  BipedEnv env(world, EnvConfig{}, {}, RandomizationConfig{}, 1);
  env.reset(0, 0, CommandRanges{});
  expect("full obs", env.observe().full.size(), 38);
  expect("policy obs", env.observe().policy_view().size(), 35);
  expect("history slice", s.history_slice(), 175);
  expect("policy input", s.policy_in(), 51);
  expect("critic input", env.critic_observe().size(), 225);
  expect("latent", s.latent, 16);
  expect("gru hidden", s.gru_hidden, 64);
  expect("scan", env.critic_observe().size() - env.observe().full.size(), 187);
  return {ok, ok ? "38/35/175/51/225/16/64/187" : bad};
}

// 5 -------------------------------------------------------------------------

Outcome reward_pins() {
  struct Pin {
    RewardTerm term;
    std::function<void(RewardInputs&)> set;
    double want;
  };
  auto fill = [](double v) { return Joint8::Constant(v); };
  const std::vector<Pin> pins = {
      {RewardTerm::TrackingLinVel, [](auto& in) { in.command = {0.6, -0.2, 0}; in.lin_vel = {0.6, -0.2, 0.3}; }, 5.0},
      {RewardTerm::TrackingAngVel, [](auto& in) { in.command = {0, 0, 0.7}; in.ang_vel = {0.4, -0.1, 0.2}; }, 2.5 * std::exp(-1.0)},
      {RewardTerm::ActionSmoothness, [&](auto& in) { in.action = fill(1.0); }, -0.01 * 8.0},
      {RewardTerm::AngVelXY, [](auto& in) { in.ang_vel = {0.3, 0.4, 9.0}; }, -0.05 * 0.25},
      {RewardTerm::BaseHeight, [](auto& in) { in.base_height = 0.7; }, -10.0 * 0.01},
      {RewardTerm::Orientation, [](auto& in) { in.gravity = {0.6, 0.0, -0.8}; }, -1.0 * 0.36},
      {RewardTerm::FeetClearance, [](auto& in) { in.foot_height = {0.05, 0.1}; in.foot_velocity = {Eigen::Vector3d(3, 4, 7), Eigen::Vector3d(3, 4, 0)}; }, 0.0025 * 5.0},
      {RewardTerm::Torques, [&](auto& in) { in.torque = fill(10.0); }, -8e-5 * 800.0},
      {RewardTerm::Powers, [&](auto& in) { in.torque = fill(2.0); in.joint_vel = fill(-3.0); }, -2e-3 * 48.0},
      {RewardTerm::DofVel, [&](auto& in) { in.joint_vel = fill(2.0); }, -1e-3 * 32.0},
      {RewardTerm::DofAcc, [&](auto& in) { in.joint_acc = fill(100.0); }, -2.5e-7 * 80000.0},
      {RewardTerm::FeetSwingHeight, [](auto& in) { in.foot_height = {0.15, 0.0}; in.foot_force = {Eigen::Vector3d::Zero(), Eigen::Vector3d(0, 0, 100)}; }, -0.05},
      {RewardTerm::Contact, [](auto& in) { in.foot_phase = {0.2, 0.7}; in.foot_force = {Eigen::Vector3d(0, 0, 100), Eigen::Vector3d::Zero()}; }, 0.18 * 2.0},
      {RewardTerm::BaseAcc, [](auto& in) { in.base_vel_change = {0.3, 0.4, 0.0}; }, 0.2 * std::exp(-0.5)},
      {RewardTerm::FeetContactForces, [](auto& in) { in.foot_force = {Eigen::Vector3d(0, 0, 400), Eigen::Vector3d(0, 0, 0.5)}; }, -0.002 * 50.0},
      {RewardTerm::FeetAirTime, [](auto& in) { in.command = {0.3, 0.4, 0}; in.air_time = {0.7, 0.9}; in.first_contact = {true, false}; }, 1.0 * 0.2},
      {RewardTerm::FeetContactNumber, [](auto& in) { in.foot_phase = {0.1, 0.6}; in.foot_force = {Eigen::Vector3d(0, 0, 100), Eigen::Vector3d::Zero()}; }, 1.2 * 0.7},
  };
  const RewardConfig cfg;
  int passed = 0;
  double worst = 0;
  std::set<RewardTerm> covered;
  for (const auto& p : pins) {
    RewardInputs in;
    p.set(in);
    const double got = cfg.weight(p.term) * compute_rewards(in, cfg)[p.term];
    worst = std::max(worst, std::abs(got - p.want));
    if (std::abs(got - p.want) < kRewardTol) ++passed;
    covered.insert(p.term);
  }
  const bool ok = passed == kNumRewardTerms && covered.size() == kNumRewardTerms;
  return {ok, fmt("%d/%d rows within 1e-9, worst deviation %.2e", passed, kNumRewardTerms, worst)};
}

// 6 -------------------------------------------------------------------------

Outcome randomization_bounds() {
  const RandomizationConfig cfg;
  struct Row {
    const char* name;
    Interval bounds;
    std::function<double(const RandomizationDraw&)> get;
  };
  const std::vector<Row> rows = {
      {"link mass", cfg.link_mass_scale, [](const auto& d) { return d.link_mass_scale; }},
      {"payload", cfg.payload_kg, [](const auto& d) { return d.payload_kg; }},
      {"com x", cfg.com_x_cm, [](const auto& d) { return d.com_offset_cm.x(); }},
      {"com y", cfg.com_y_cm, [](const auto& d) { return d.com_offset_cm.y(); }},
      {"com z", cfg.com_z_cm, [](const auto& d) { return d.com_offset_cm.z(); }},
      {"friction", cfg.friction, [](const auto& d) { return d.friction; }},
      {"restitution", cfg.restitution, [](const auto& d) { return d.restitution; }},
      {"kp", cfg.kp_scale, [](const auto& d) { return d.kp_scale; }},
      {"kd", cfg.kd_scale, [](const auto& d) { return d.kd_scale; }},
      {"motor strength", cfg.motor_strength, [](const auto& d) { return d.motor_strength; }},
  };
  std::vector<double> lo(rows.size(), std::numeric_limits<double>::infinity());
  std::vector<double> hi(rows.size(), -std::numeric_limits<double>::infinity());
  std::vector<long> outside(rows.size(), 0);
  std::mt19937_64 rng(6);
  for (int n = 0; n < kDraws; ++n) {
    const RandomizationDraw d = sample_randomization(rng, cfg);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double v = rows[k].get(d);
      if (!rows[k].bounds.contains(v)) ++outside[k];
      lo[k] = std::min(lo[k], v);
      hi[k] = std::max(hi[k], v);
    }
  }
  double push_max = 0;
  for (int n = 0; n < kDraws; ++n) {
    push_max = std::max(push_max, sample_push(rng, cfg).head<2>().cwiseAbs().maxCoeff());
  }
  bool ok = push_max <= cfg.push_velocity && push_max >= (1 - kCoverage) * cfg.push_velocity;
  std::string bad;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double w = rows[k].bounds.hi - rows[k].bounds.lo;
    const bool row_ok = outside[k] == 0 && lo[k] - rows[k].bounds.lo <= kCoverage * w &&
                        rows[k].bounds.hi - hi[k] <= kCoverage * w;
    if (!row_ok) bad += std::string(" ") + rows[k].name;
    ok = ok && row_ok;
  }
  return {ok, fmt("%zu rows + push, %d draws each, all inside, extremes within 2%%%s",
                  rows.size(), kDraws, bad.empty() ? "" : (" except:" + bad).c_str())};
}

// 7, 8, 10 ------------------------------------------------------------------

struct RunSummary {
  bool complete = false;
  int iterations = 0;
  double first_return = 0, final_return = 0;
  double final_level = 0;
  double bt_first_quartile = 0, bt_final_quartile = 0;
  std::string checkpoint;
};

std::vector<json> read_metrics(const fs::path& file) {
  std::vector<json> out;
  std::ifstream in(file);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

double mean_of(const std::vector<json>& m, std::size_t begin, std::size_t end, const char* key) {
  double s = 0;
  int n = 0;
  for (std::size_t i = begin; i < end; ++i) {
    if (m[i].at(key).is_number()) {
      s += m[i].at(key).get<double>();
      ++n;
    }
  }
  return n ? s / n : std::numeric_limits<double>::quiet_NaN();
}

RunSummary run_training(const fs::path& dir, std::uint64_t seed, bool barlow, bool reuse) {
  TrainConfig cfg = load_config("");
  cfg.seed = seed;
  cfg.barlow.enabled = barlow;
  RunSummary s;
  const fs::path metrics = dir / "metrics.jsonl";
  const fs::path last = dir / ("ckpt_" + std::to_string(cfg.iterations) + ".bwlk");
  const bool cached = reuse && fs::exists(last) && fs::exists(metrics) &&
                      read_metrics(metrics).size() == static_cast<std::size_t>(cfg.iterations);
  if (!cached) {
    fs::remove_all(dir);
    TrainOptions opt;
    opt.run_dir = dir.string();
    opt.quiet = true;
    const auto t0 = std::chrono::steady_clock::now();
    const int code = train(cfg, opt);
    std::printf("  trained seed %llu barlow %s in %.0f s (exit %d)\n",
                static_cast<unsigned long long>(seed), barlow ? "on" : "off", seconds_since(t0),
                code);
    std::fflush(stdout);
  }
  const auto m = read_metrics(metrics);
  s.iterations = static_cast<int>(m.size());
  s.complete = s.iterations == cfg.iterations && fs::exists(last);
  if (!s.complete || m.size() < 2 * kWindow) return s;
  const std::size_t n = m.size(), q = n / 4;
  s.first_return = mean_of(m, 0, kWindow, "mean_reward");
  s.final_return = mean_of(m, n - kWindow, n, "mean_reward");
  s.final_level = mean_of(m, n - kWindow, n, "mean_terrain_level");
  s.bt_first_quartile = mean_of(m, 0, q, "loss_bt");
  s.bt_final_quartile = mean_of(m, n - q, n, "loss_bt");
  s.checkpoint = last.string();
  return s;
}

// Improvement of at least (gain - 1) times the magnitude of the start; for
// a positive start this is final >= gain * first.
bool gained(double first, double final) {
  return std::isfinite(first) && std::isfinite(final) &&
         final - first >= (kReturnGain - 1.0) * std::abs(first);
}

Outcome training_smoke(const std::vector<RunSummary>& on) {
  int good = 0;
  std::string per;
  for (std::size_t k = 0; k < on.size(); ++k) {
    const auto& r = on[k];
    const bool ok = r.complete && gained(r.first_return, r.final_return) &&
                    r.final_level >= kLevelTarget;
    good += ok ? 1 : 0;
    per += fmt(" [seed %zu: return %.1f -> %.1f, level %.2f%s]", k + 1, r.first_return,
               r.final_return, r.final_level, r.complete ? "" : ", incomplete");
  }
  return {good >= kSeedsNeeded7, fmt("%d/%zu seeds meet return x%.0f and level >= %.0f;%s", good,
                                     on.size(), kReturnGain, kLevelTarget, per.c_str())};
}

Outcome ablation(const std::vector<RunSummary>& on, const std::vector<RunSummary>& off) {
  int wins = 0, decreasing = 0;
  std::string per;
  for (std::size_t k = 0; k < on.size(); ++k) {
    const bool complete = on[k].complete && off[k].complete;
    if (complete && on[k].final_return >= off[k].final_return) ++wins;
    if (on[k].complete && on[k].bt_final_quartile < on[k].bt_first_quartile) ++decreasing;
    per += fmt(" [seed %zu: %.1f vs %.1f, bt %.3f -> %.3f]", k + 1, on[k].final_return,
               off[k].final_return, on[k].bt_first_quartile, on[k].bt_final_quartile);
  }
  const bool ok = wins >= kPairsNeeded8 && decreasing == static_cast<int>(on.size());
  return {ok, fmt("Barlow on >= off in %d/%zu pairs, loss_bt decreasing in %d/%zu;%s", wins,
                  on.size(), decreasing, on.size(), per.c_str())};
}

// 9 -------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

Outcome determinism(const fs::path& root) {
  TrainConfig cfg = load_config("", {"env.noise_enabled=false", "iterations=20",
                                     "checkpoint_every=10", "workers=1"});
  cfg.seed = 11;
  TrainOptions opt;
  opt.quiet = true;
  for (const char* name : {"a", "b", "resumed"}) fs::remove_all(root / name);
  opt.run_dir = (root / "a").string();
  train(cfg, opt);
  opt.run_dir = (root / "b").string();
  train(cfg, opt);
  opt.run_dir = (root / "resumed").string();
  opt.resume = (root / "a" / "ckpt_10.bwlk").string();
  train(cfg, opt);

  const auto a = lines_of(root / "a" / "metrics.jsonl");
  const auto b = lines_of(root / "b" / "metrics.jsonl");
  const auto r = lines_of(root / "resumed" / "metrics.jsonl");
  const bool repeat = a.size() == 20 && a == b &&
                      slurp(root / "a" / "ckpt_20.bwlk") == slurp(root / "b" / "ckpt_20.bwlk");
  const bool resume = r.size() == 10 && a.size() == 20 &&
                      std::equal(r.begin(), r.end(), a.begin() + 10) &&
                      slurp(root / "resumed" / "ckpt_20.bwlk") == slurp(root / "a" / "ckpt_20.bwlk");
  return {repeat && resume, fmt("repeat runs bit-identical: %s; resume from iteration 10 "
                                "matches: %s",
                                repeat ? "yes" : "no", resume ? "yes" : "no")};
}

Outcome latents(const std::string& checkpoint, const fs::path& root) {
  if (checkpoint.empty()) return {false, "no trained checkpoint available"};
  const fs::path csv = root / "latents.csv";
  LatentExportOptions opt;
  const auto counts = export_latents(checkpoint, csv.string(), opt);
  std::ifstream in(csv);
  std::string header, line;
  std::getline(in, header);
  int columns = 0;
  int latent_cols = 0;
  {
    std::stringstream hs(header);
    std::string c;
    while (std::getline(hs, c, ',')) {
      ++columns;
      if (c.rfind("z_", 0) == 0) ++latent_cols;
    }
  }
  std::map<std::string, int> per_family;
  bool well_formed = latent_cols == dims::kLatent;
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != columns) {
      well_formed = false;
      continue;
    }
    for (int k = columns - latent_cols; k < columns; ++k) {
      well_formed = well_formed && std::isfinite(std::stod(cells[static_cast<std::size_t>(k)]));
    }
    ++per_family[cells[2]];
  }
  int min_rows = std::numeric_limits<int>::max();
  for (const auto& [f, n] : per_family) min_rows = std::min(min_rows, n);
  const bool ok = well_formed && per_family.size() == 5 && min_rows >= kLatentRowsPerFamily &&
                  counts.size() == 5;
  return {ok, fmt("%d latent columns, %zu families, min %d rows per family (>= %d)", latent_cols,
                  per_family.size(), per_family.empty() ? 0 : min_rows, kLatentRowsPerFamily)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BarlowWalk acceptance suite"};
  std::string work = "acceptance_runs";
  std::vector<int> only;
  bool reuse = false;
  app.add_option("--work-dir", work, "Directory for training runs")->capture_default_str();
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_flag("--reuse", reuse, "Reuse complete training runs found in the work directory");
  CLI11_PARSE(app, argc, argv);

  const fs::path root = fs::absolute(work);
  fs::create_directories(root);
  auto wanted = [&](int c) { return only.empty() || std::find(only.begin(), only.end(), c) != only.end(); };

  int failures = 0;
  auto report = [&](int c, const char* title, const Outcome& o) {
    std::printf("criterion %2d %s  %s: %s\n", c, o.pass ? "PASS" : "FAIL", title, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };
  auto guarded = [&](int c, const char* title, const std::function<Outcome()>& f) {
    if (!wanted(c)) return;
    try {
      report(c, title, f());
    } catch (const std::exception& e) {
      report(c, title, Outcome{false, std::string("error: ") + e.what()});
    }
  };

  guarded(1, "gradient check", gradients);
  guarded(2, "Barlow oracle", barlow_oracle);
  guarded(3, "PPO mechanics", ppo_mechanics);
  guarded(4, "dimension audit", dimensions);
  guarded(5, "reward pinning", reward_pins);
  guarded(6, "randomization bounds", randomization_bounds);

  std::vector<RunSummary> on, off;
  if (wanted(7) || wanted(8) || wanted(10)) {
    const int seeds = (wanted(7) || wanted(8)) ? kTrainSeeds : 1;
    for (int s = 1; s <= seeds; ++s) {
      on.push_back(run_training(root / ("barlow_on_seed" + std::to_string(s)),
                                static_cast<std::uint64_t>(s), true, reuse));
    }
    if (wanted(8)) {
      for (int s = 1; s <= kTrainSeeds; ++s) {
        off.push_back(run_training(root / ("barlow_off_seed" + std::to_string(s)),
                                   static_cast<std::uint64_t>(s), false, reuse));
      }
    }
  }
  guarded(7, "training smoke", [&] { return training_smoke(on); });
  guarded(8, "Barlow ablation", [&] { return ablation(on, off); });
  guarded(9, "determinism and resume", [&] { return determinism(root / "determinism"); });
  guarded(10, "latent export", [&] { return latents(on.empty() ? "" : on[0].checkpoint, root); });

  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
