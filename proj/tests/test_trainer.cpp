#include "doctest.h"

#include "barlowwalk/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace barlowwalk;
namespace fs = std::filesystem;

namespace {

TrainConfig small(std::uint64_t seed = 3) {
  TrainConfig c = load_config("", {"num_envs=8", "horizon=12", "ppo.epochs=2"});
  c.seed = seed;
  return c;
}

bool same_params(const nn::ParamSet<Real>& a, const nn::ParamSet<Real>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a.entries()[k].name != b.entries()[k].name) return false;
    if (a.entries()[k].values != b.entries()[k].values) return false;
  }
  return true;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("barlowwalk_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("same seed, same training") {
  Trainer a(small()), b(small());
  for (int i = 0; i < 3; ++i) CHECK(a.run_iteration().to_json() == b.run_iteration().to_json());
  CHECK(same_params(a.params(), b.params()));

  Trainer c(small(4));
  c.run_iteration();
  c.run_iteration();
  c.run_iteration();
  CHECK_FALSE(same_params(a.params(), c.params()));
}

TEST_CASE("worker threads do not change the result") {
  TrainConfig threaded = small();
  threaded.workers = 3;
  Trainer a(small()), b(threaded);
  for (int i = 0; i < 2; ++i) CHECK(a.run_iteration().to_json() == b.run_iteration().to_json());
  CHECK(same_params(a.params(), b.params()));
}

TEST_CASE("resuming from a checkpoint matches an uninterrupted run") {
  const fs::path dir = scratch("resume");
  const std::string ckpt = (dir / "ckpt_2.bwlk").string();
  Trainer straight(small());
  std::vector<nlohmann::json> expected;
  for (int i = 0; i < 4; ++i) expected.push_back(straight.run_iteration().to_json());

  Trainer first(small());
  first.run_iteration();
  first.run_iteration();
  first.save_checkpoint(ckpt);
  const auto size = fs::file_size(ckpt);

  Trainer resumed(small());
  resumed.load_checkpoint(ckpt);
  CHECK(resumed.iteration() == 2);
  CHECK(resumed.run_iteration().to_json() == expected[2]);
  CHECK(resumed.run_iteration().to_json() == expected[3]);
  CHECK(same_params(resumed.params(), straight.params()));

  // The checkpoint footprint does not grow with training time.
  resumed.save_checkpoint(ckpt);
  CHECK(fs::file_size(ckpt) == doctest::Approx(static_cast<double>(size)).epsilon(0.02));
  CHECK(checkpoint_config(ckpt).num_envs == 8);

  TrainConfig other = small();
  other.baseline2 = true;
  Trainer mismatch(other);
  CHECK_THROWS_AS(mismatch.load_checkpoint(ckpt), ConfigError);
  Trainer reseeded(small(99));
  CHECK_THROWS_AS(reseeded.load_checkpoint(ckpt), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("the Barlow term is present only when enabled") {
  Trainer on(small());
  const auto m = on.run_iteration();
  CHECK(m.update.loss_bt > 0.0);
  CHECK(m.update.c_diag_mean != 0.0);

  TrainConfig cfg = small();
  cfg.barlow.enabled = false;
  Trainer off(cfg);
  const auto n = off.run_iteration();
  CHECK(n.update.loss_bt == 0.0);
  // The two runs act identically during the first rollout.
  CHECK(on.batch().actions == off.batch().actions);
}

TEST_CASE("the second baseline drops the scan and the latent path") {
  TrainConfig cfg = small();
  cfg.baseline2 = true;
  Trainer t(cfg);
  t.run_iteration();
  CHECK(t.batch().critic_obs.cols() == 38);
  CHECK_FALSE(t.net().has_latent_path());

  const fs::path dir = scratch("baseline2");
  t.save_checkpoint((dir / "c.bwlk").string());
  CHECK_THROWS_AS(export_latents((dir / "c.bwlk").string(), (dir / "z.csv").string(), {}),
                  ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("rollout layout and hidden state resets") {
  TrainConfig cfg = small();
  cfg.horizon = 40;
  Trainer t(cfg);
  t.run_iteration();
  const auto& b = t.batch();
  CHECK(b.policy_obs.rows() == 8 * 40);
  CHECK(b.policy_obs.cols() == 35);
  CHECK(b.hist_new.cols() == 175);
  CHECK(b.critic_obs.cols() == 225);
  CHECK(b.actor_hidden.cols() == 64);
  // Episode starts begin with zero memory; everything else carries state.
  int resets = 0;
  for (int step = 0; step + 1 < 40; ++step) {
    for (int e = 0; e < 8; ++e) {
      const auto r = b.row(step, e), next = b.row(step + 1, e);
      if (b.dones[static_cast<std::size_t>(r)]) {
        ++resets;
        CHECK(b.actor_hidden.row(next).isZero(0));
        CHECK(b.critic_hidden.row(next).isZero(0));
        CHECK(b.hist_old.row(next).isZero(0));
      } else {
        CHECK_FALSE(b.actor_hidden.row(next).isZero(0));
        CHECK(b.hist_old.row(next) == b.hist_new.row(r));
      }
    }
  }
  CHECK(resets > 0);
  CHECK(b.log_std.size() == 8);
}

TEST_CASE("train writes the run directory") {
  const fs::path dir = scratch("run");
  TrainConfig cfg = small();
  cfg.iterations = 3;
  cfg.checkpoint_every = 2;
  TrainOptions opt;
  opt.run_dir = dir.string();
  opt.quiet = true;
  CHECK(train(cfg, opt) == kExitOk);
  CHECK(fs::exists(dir / "config.snapshot"));
  CHECK(fs::exists(dir / "ckpt_2.bwlk"));
  CHECK(fs::exists(dir / "ckpt_3.bwlk"));
  CHECK(load_config((dir / "config.snapshot").string()).iterations == 3);

  std::ifstream in(dir / "metrics.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("iteration") == lines);
    CHECK(j.contains("loss_bt"));
    CHECK(j.contains("mean_terrain_level"));
    CHECK(j.at("reward_terms").size() == static_cast<std::size_t>(kNumRewardTerms));
    ++lines;
  }
  CHECK(lines == 3);

  std::ostringstream csv;
  metrics_to_csv((dir / "metrics.jsonl").string(), csv);
  std::istringstream rows(csv.str());
  std::string header;
  std::getline(rows, header);
  CHECK(header.find("reward_terms.tracking_lin_vel") != std::string::npos);
  int data = 0;
  while (std::getline(rows, line)) ++data;
  CHECK(data == 3);

  // Resume to five iterations from the last checkpoint.
  cfg.iterations = 5;
  opt.resume = (dir / "ckpt_3.bwlk").string();
  CHECK(train(cfg, opt) == kExitOk);
  CHECK(fs::exists(dir / "ckpt_4.bwlk"));
  CHECK(fs::exists(dir / "ckpt_5.bwlk"));

  // A stop request checkpoints and returns cleanly.
  std::atomic<bool> stop{true};
  opt.stop = &stop;
  opt.resume.clear();
  opt.run_dir = (dir / "stopped").string();
  CHECK(train(cfg, opt) == kExitOk);
  CHECK(fs::exists(dir / "stopped" / "ckpt_0.bwlk"));
  fs::remove_all(dir);
}

TEST_CASE("latent export and evaluation") {
  const fs::path dir = scratch("latents");
  Trainer t(small());
  t.run_iteration();
  const std::string ckpt = (dir / "c.bwlk").string();
  t.save_checkpoint(ckpt);

  LatentExportOptions opt;
  opt.envs = 2;
  opt.steps = 30;
  const auto rows = export_latents(ckpt, (dir / "z.csv").string(), opt);
  CHECK(rows.size() == 5);
  for (int r : rows) CHECK(r == 60);
  std::ifstream in(dir / "z.csv");
  std::string header, line;
  std::getline(in, header);
  CHECK(header.rfind("episode_id,step,terrain_family,terrain_level,z_0,", 0) == 0);
  CHECK(header.find("z_15") != std::string::npos);
  CHECK(header.find("z_16") == std::string::npos);
  int n = 0;
  while (std::getline(in, line)) ++n;
  CHECK(n == 300);

  EvalOptions eo;
  eo.episodes = 2;
  const EvalReport a = evaluate_checkpoint(ckpt, eo);
  const EvalReport b = evaluate_checkpoint(ckpt, eo);
  CHECK(a.episodes.size() == 2);
  CHECK(a.mean_return == b.mean_return);
  CHECK(a.success_rate >= 0.0);
  CHECK(a.success_rate <= 1.0);
  fs::remove_all(dir);
}
