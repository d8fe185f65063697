// Command-line front end: train, eval, export-latents, terrain dump,
// check-grads, metrics-to-csv, show-config.

#include "barlowwalk/config.hpp"
#include "barlowwalk/grad_check.hpp"
#include "barlowwalk/terrain.hpp"
#include "barlowwalk/trainer.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace barlowwalk;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

struct ConfigFlags {
  std::string path;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", path, "JSON configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides, "Overrides, e.g. --set ppo.clip_range=0.3 seed=7");
  }
};

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  localtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return os.str();
}

/// BARLOWWALK_RUN_DIR, when set, replaces the --out root.
std::string run_root(const std::string& flag) {
  if (const char* env = std::getenv("BARLOWWALK_RUN_DIR"); env && *env) return env;
  return flag;
}

TerrainFamily family_arg(const std::string& s) { return parse_family(s); }

int cmd_train(const ConfigFlags& cf, std::optional<std::uint64_t> seed, std::optional<int> workers,
              const std::string& resume, const std::string& root, const std::string& run_dir,
              bool quiet) {
  std::vector<std::string> overrides = cf.overrides;
  if (seed) overrides.push_back("seed=" + std::to_string(*seed));
  if (workers) overrides.push_back("workers=" + std::to_string(*workers));
  TrainConfig cfg;
  if (!resume.empty() && cf.path.empty()) {
    // Resume with the checkpoint's own settings unless a file is given.
    nlohmann::json tree = to_json(checkpoint_config(resume));
    for (const auto& o : overrides) apply_override(tree, o);
    cfg = from_json(tree);
    cfg.validate();
  } else {
    cfg = load_config(cf.path, overrides);
  }

  TrainOptions opt;
  if (!run_dir.empty()) {
    opt.run_dir = run_dir;
  } else {
    opt.run_dir = (fs::path(run_root(root)) / (timestamp() + "-seed" + std::to_string(cfg.seed))).string();
  }
  opt.resume = resume;
  opt.stop = &g_stop;
  opt.quiet = quiet;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  if (!quiet) std::printf("run directory: %s\n", opt.run_dir.c_str());
  return train(cfg, opt);
}

void print_report(const EvalReport& r) {
  std::printf("episodes        %zu\n", r.episodes.size());
  std::printf("success_rate    %.4f\n", r.success_rate);
  std::printf("mean_return     %.4f\n", r.mean_return);
  std::printf("lin_track_err   %.4f\n", r.mean_lin_err);
  std::printf("ang_track_err   %.4f\n", r.mean_ang_err);
  for (int i = 0; i < kNumRewardTerms; ++i) {
    std::printf("  %-22s %.6g\n", reward_name(reward_term(i)),
                r.reward_terms[static_cast<std::size_t>(i)]);
  }
}

int cmd_terrain(const std::string& family, int level, std::uint64_t seed, const std::string& out) {
  const TerrainTile tile = generate_tile(family_arg(family), level, seed);
  std::ofstream f;
  std::ostream* os = &std::cout;
  if (!out.empty()) {
    f.open(out);
    if (!f) throw ConfigError("cannot write '" + out + "'");
    os = &f;
  }
  *os << std::setprecision(9);
  for (int i = 0; i < TerrainTile::kLength; ++i) {
    for (int j = 0; j < TerrainTile::kWidth; ++j) *os << (j ? "," : "") << tile.heights(i, j);
    *os << "\n";
  }
  return kExitOk;
}

int cmd_check_grads(int seeds) {
  const auto results = gradcheck::run_suite(seeds);
  std::map<std::string, double> worst;
  std::map<std::string, bool> ok;
  std::vector<std::string> order;
  for (const auto& r : results) {
    if (!ok.count(r.network)) {
      order.push_back(r.network);
      ok[r.network] = true;
      worst[r.network] = 0.0;
    }
    ok[r.network] = ok[r.network] && r.report.passed;
    worst[r.network] = std::max(worst[r.network], r.report.max_rel_error);
  }
  bool all = true;
  for (const auto& n : order) {
    std::printf("%-4s %-28s max rel err %.3e over %d seeds\n", ok[n] ? "PASS" : "FAIL", n.c_str(),
                worst[n], seeds);
    all = all && ok[n];
  }
  return all ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BarlowWalk: PPO with a Barlow Twins history encoder on a surrogate biped"};
  app.require_subcommand(1);

  ConfigFlags train_cfg;
  std::optional<std::uint64_t> train_seed;
  std::optional<int> train_workers;
  std::string resume, out_root = "runs", run_dir;
  bool quiet = false;
  auto* train_cmd = app.add_subcommand("train", "Train a policy");
  train_cfg.attach(train_cmd);
  train_cmd->add_option("--seed", train_seed, "Run seed");
  train_cmd->add_option("--workers", train_workers, "Environment stepping threads");
  train_cmd->add_option("--resume", resume, "Continue from a checkpoint")->check(CLI::ExistingFile);
  train_cmd->add_option("--out", out_root, "Root for timestamped run directories")->capture_default_str();
  train_cmd->add_option("--run-dir", run_dir, "Exact run directory (skips the timestamp)");
  train_cmd->add_flag("--quiet", quiet, "No per-iteration progress");

  std::string ckpt, family = "rough", trace;
  int level = 0, episodes = 10;
  std::uint64_t eval_seed = 1;
  auto* eval_cmd = app.add_subcommand("eval", "Deterministic evaluation of a checkpoint");
  eval_cmd->add_option("checkpoint", ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--family", family, "Terrain family")->capture_default_str();
  eval_cmd->add_option("--level", level, "Difficulty level 0..9")->capture_default_str()->check(CLI::Range(0, kMaxLevel));
  eval_cmd->add_option("--episodes", episodes, "Episodes")->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eval_seed, "Evaluation seed")->capture_default_str();
  eval_cmd->add_option("--trace", trace, "Write a per-step CSV trace");

  std::string latent_ckpt, latent_out;
  LatentExportOptions lopt;
  auto* lat_cmd = app.add_subcommand("export-latents", "Write latent vectors per terrain family");
  lat_cmd->add_option("checkpoint", latent_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  lat_cmd->add_option("--out", latent_out, "CSV path (default: latents.csv next to the checkpoint)");
  lat_cmd->add_option("--envs", lopt.envs, "Environments per family")->capture_default_str()->check(CLI::PositiveNumber);
  lat_cmd->add_option("--steps", lopt.steps, "Steps per environment")->capture_default_str()->check(CLI::PositiveNumber);
  lat_cmd->add_option("--level", lopt.level, "Difficulty level")->capture_default_str()->check(CLI::Range(0, kMaxLevel));
  lat_cmd->add_option("--seed", lopt.seed, "Seed")->capture_default_str();

  std::string t_family = "rough", t_out;
  int t_level = 0;
  std::uint64_t t_seed = 1;
  auto* terrain_cmd = app.add_subcommand("terrain", "Terrain utilities");
  terrain_cmd->require_subcommand(1);
  auto* dump_cmd = terrain_cmd->add_subcommand("dump", "Print one tile's 20x10 heights as CSV");
  dump_cmd->add_option("--family", t_family, "rough, slope_up, slope_down, stairs_up, stairs_down, obstacles")->capture_default_str();
  dump_cmd->add_option("--level", t_level, "Difficulty level")->capture_default_str()->check(CLI::Range(0, kMaxLevel));
  dump_cmd->add_option("--seed", t_seed, "Tile seed")->capture_default_str();
  dump_cmd->add_option("--out", t_out, "Output file (default stdout)");

  int grad_seeds = 10;
  auto* grads_cmd = app.add_subcommand("check-grads", "Finite-difference audit of every network");
  grads_cmd->add_option("--seeds", grad_seeds, "Random seeds")->capture_default_str()->check(CLI::PositiveNumber);

  std::string metrics_in, metrics_out;
  auto* csv_cmd = app.add_subcommand("metrics-to-csv", "Convert metrics.jsonl to CSV");
  csv_cmd->add_option("metrics", metrics_in, "metrics.jsonl")->required()->check(CLI::ExistingFile);
  csv_cmd->add_option("--out", metrics_out, "Output file (default stdout)");

  ConfigFlags show_cfg;
  auto* show_cmd = app.add_subcommand("show-config", "Print the validated configuration");
  show_cfg.attach(show_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*train_cmd) {
      return cmd_train(train_cfg, train_seed, train_workers, resume, out_root, run_dir, quiet);
    }
    if (*eval_cmd) {
      EvalOptions opt;
      opt.family = family_arg(family);
      opt.level = level;
      opt.episodes = episodes;
      opt.seed = eval_seed;
      opt.trace_path = trace;
      print_report(evaluate_checkpoint(ckpt, opt));
      return kExitOk;
    }
    if (*lat_cmd) {
      if (latent_out.empty()) latent_out = (fs::path(latent_ckpt).parent_path() / "latents.csv").string();
      const auto counts = export_latents(latent_ckpt, latent_out, lopt);
      for (std::size_t i = 0; i < counts.size(); ++i) {
        std::printf("%-12s %d rows\n", family_name(lopt.families[i]).c_str(), counts[i]);
      }
      std::printf("wrote %s\n", latent_out.c_str());
      return kExitOk;
    }
    if (*terrain_cmd) return cmd_terrain(t_family, t_level, t_seed, t_out);
    if (*grads_cmd) return cmd_check_grads(grad_seeds);
    if (*csv_cmd) {
      if (metrics_out.empty()) {
        metrics_to_csv(metrics_in, std::cout);
      } else {
        std::ofstream f(metrics_out);
        if (!f) throw ConfigError("cannot write '" + metrics_out + "'");
        metrics_to_csv(metrics_in, f);
      }
      return kExitOk;
    }
    if (*show_cmd) {
      std::cout << std::setw(2) << to_json(load_config(show_cfg.path, show_cfg.overrides)) << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitOk;
}
