#include "doctest.h"

#include "barlowwalk/grad_check.hpp"

#include <random>
#include <set>

using namespace barlowwalk;
using barlowwalk::gradcheck::synthetic_batch;
using barlowwalk::gradcheck::tiny_shape;

namespace {

struct Fixture {
  ActorCritic<double> net;
  nn::ParamSet<double> params;
  RolloutBatch<double> batch;

  explicit Fixture(std::uint64_t seed, bool baseline2 = false, int envs = 4, int steps = 3)
      : net(tiny_shape(baseline2)) {
    std::mt19937_64 rng(seed);
    params = net.make_params();
    net.init(params, rng, -0.2);
    batch = synthetic_batch(net, params, envs, steps, rng);
  }

  MiniBatch<double> all() const {
    Vector<double> adv = batch.advantages;
    normalize_advantages(adv);
    return MiniBatch<double>::gather(batch, adv, 0, batch.num_envs);
  }
};

}  // namespace

TEST_CASE("gradient suite passes on reduced networks") {
  const auto results = gradcheck::run_suite(10);
  std::set<std::string> names;
  for (const auto& r : results) {
    INFO(r.network << " seed " << r.seed << ": " << r.report.diagnostic);
    CHECK(r.report.passed);
    CHECK(r.report.max_rel_error < 1e-4);
    names.insert(r.network);
  }
  CHECK(names.size() == 9);
}

TEST_CASE("disabled Barlow branch leaves exactly the PPO loss") {
  Fixture f(5);
  const auto mb = f.all();
  LossOptions on, off;
  off.barlow_enabled = false;
  nn::Tape<double> t1, t2;
  auto a = build_loss(t1, f.params, f.net, mb, on);
  auto b = build_loss(t2, f.params, f.net, mb, off);
  REQUIRE(a.barlow.has_value());
  CHECK_FALSE(b.barlow.has_value());
  const double ppo_only = b.policy.value()(0, 0) + b.value.value()(0, 0) -
                          0.01 * b.entropy.value()(0, 0);
  CHECK(b.total.value()(0, 0) == ppo_only);
  CHECK(a.total.value()(0, 0) == doctest::Approx(ppo_only + a.barlow->value()(0, 0)).epsilon(1e-14));
}

TEST_CASE("loss vanishes with zero advantages, exact values and no entropy term") {
  Fixture f(6);
  auto mb = f.all();
  mb.advantages.setZero();
  // Targets equal to the critic's own predictions.
  {
    nn::Tape<double> t;
    auto hs = unroll_gru(t, f.params, f.net.critic_gru(), t.constant(mb.critic_obs), mb.critic_h0, mb);
    mb.returns = f.net.critic_head().forward(t, f.params, hs).value().col(0);
  }
  LossOptions opt;
  opt.barlow_enabled = false;
  opt.entropy_coef = 0.0;
  nn::Tape<double> t;
  auto parts = build_loss(t, f.params, f.net, mb, opt);
  CHECK(parts.total.value()(0, 0) == 0.0);
}

TEST_CASE("recurrent replay reproduces the rollout hidden states") {
  Fixture f(7, false, 3, 5);
  const auto mb = f.all();
  nn::Tape<double> t;
  auto feats = f.net.history_features(t, f.params, t.constant(mb.hist_new));
  auto in = nn::hcat(t.constant(mb.policy_obs), feats);
  auto hs = unroll_gru(t, f.params, f.net.actor_gru(), in, mb.actor_h0, mb);
  // Output of step k (masked by done) is the stored input state of step k+1.
  for (int k = 0; k + 1 < mb.horizon; ++k) {
    for (int e = 0; e < mb.envs; ++e) {
      const bool done = mb.dones[static_cast<std::size_t>(k * mb.envs + e)] != 0;
      Vector<double> expect = hs.value().row(k * mb.envs + e).transpose();
      if (done) expect.setZero();
      const Vector<double> stored = f.batch.actor_hidden.row(f.batch.row(k + 1, e)).transpose();
      CHECK((expect - stored).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("gradient flow into the encoders") {
  Fixture f(8);
  const auto mb = f.all();
  {
    f.params.zero_grad();
    nn::Tape<double> t;
    auto parts = build_loss(t, f.params, f.net, mb, LossOptions{});
    t.backward(parts.total);
    CHECK(f.params.at("mlp_enc.0.weight").gradient.norm() > 0.0);
    CHECK(f.params.at("latent_enc.0.weight").gradient.norm() > 0.0);
    CHECK(f.params.at("barlow_enc.1.weight").gradient.norm() > 0.0);
  }
  {
    f.params.zero_grad();
    LossOptions opt;
    opt.barlow_enabled = false;
    opt.detach_latent = true;
    nn::Tape<double> t;
    auto parts = build_loss(t, f.params, f.net, mb, opt);
    t.backward(parts.total);
    for (const char* n : {"barlow_enc.0.weight", "barlow_enc.0.bias", "barlow_enc.1.weight",
                          "barlow_enc.1.bias", "mlp_enc.0.weight", "latent_enc.1.weight"}) {
      CHECK(f.params.at(n).gradient.isZero(0.0));
    }
    CHECK(f.params.at("actor.gru.w_ih").gradient.norm() > 0.0);
  }
}

TEST_CASE("baseline network has no latent path and a scan-free critic") {
  Fixture f(9, true);
  CHECK_FALSE(f.params.contains("latent_enc.0.weight"));
  CHECK_FALSE(f.params.contains("barlow_enc.0.weight"));
  CHECK(f.net.shape().critic_in() == f.net.shape().full_obs);
  nn::Tape<double> t;
  auto parts = build_loss(t, f.params, f.net, f.all(), LossOptions{});
  CHECK_FALSE(parts.barlow.has_value());
}

TEST_CASE("update runs epochs times mini-batches steps and is deterministic") {
  Fixture a(10, false, 8, 4), b(10, false, 8, 4);
  PpoConfig cfg;
  cfg.num_mini_batches = 4;
  cfg.epochs = 5;
  OptimizerState<double> oa, ob;
  const auto sa = update(a.batch, a.net, a.params, oa, cfg, LossOptions{});
  const auto sb = update(b.batch, b.net, b.params, ob, cfg, LossOptions{});
  CHECK(sa.steps == 20);
  CHECK(sa.skipped_steps == 0);
  CHECK_FALSE(sa.aborted);
  CHECK(oa.adam.steps() == 20);
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    CHECK((a.params.entries()[i].values - b.params.entries()[i].values).norm() == 0.0);
  }
  CHECK(sa.kl == sb.kl);
  CHECK(sa.lr == sb.lr);
  CHECK(sa.loss_bt > 0.0);

  cfg.num_mini_batches = 3;
  CHECK_THROWS_AS(update(a.batch, a.net, a.params, oa, cfg, LossOptions{}), ConfigError);
}

TEST_CASE("mini-batches partition the batch by environment") {
  Fixture f(11, false, 8, 3);
  Vector<double> adv = f.batch.advantages;
  std::size_t rows = 0;
  for (int k = 0; k < 4; ++k) {
    const auto mb = MiniBatch<double>::gather(f.batch, adv, 2 * k, 2 * k + 2);
    rows += static_cast<std::size_t>(mb.policy_obs.rows());
    CHECK(mb.policy_obs.rows() == f.batch.size() / 4);
    // Row t * M + m of the mini-batch is row (t, 2k + m) of the batch.
    CHECK((mb.actions.row(1 * 2 + 1) - f.batch.actions.row(f.batch.row(1, 2 * k + 1))).norm() == 0.0);
  }
  CHECK(rows == static_cast<std::size_t>(f.batch.size()));
}

TEST_CASE("disabled Barlow branch reports a zero Barlow loss") {
  Fixture f(12, false, 4, 3);
  LossOptions opt;
  opt.barlow_enabled = false;
  OptimizerState<double> o;
  const auto s = update(f.batch, f.net, f.params, o, PpoConfig{}, opt);
  CHECK(s.loss_bt == 0.0);
  CHECK(s.c_diag_mean == 0.0);
}

TEST_CASE("one small step decreases the surrogate loss on a frozen batch") {
  Fixture f(13, false, 4, 4);
  const auto mb = f.all();
  LossOptions opt;
  opt.barlow_enabled = false;
  opt.entropy_coef = 0.0;
  opt.value_coef = 0.0;
  auto eval = [&]() {
    nn::Tape<double> t;
    return build_loss(t, f.params, f.net, mb, opt).total.value()(0, 0);
  };
  const double before = eval();
  f.params.zero_grad();
  {
    nn::Tape<double> t;
    auto parts = build_loss(t, f.params, f.net, mb, opt);
    t.backward(parts.total);
  }
  for (auto& e : f.params.entries()) e.values -= 1e-4 * e.gradient;
  CHECK(eval() < before);
}

TEST_CASE("rollout storage has a fixed footprint") {
  RolloutBatch<float> b;
  const auto shape = NetworkShape::standard();
  b.allocate(64, 24, shape);
  const auto bytes = b.footprint_bytes();
  const std::size_t per_step = (35 + 175 + 175 + 225 + 8 + 8 + 1 + 1 + 1 + 64 + 64 + 1 + 1) *
                                   sizeof(float) +
                               1;
  CHECK(bytes == 64 * 24 * per_step + (8 + 64) * sizeof(float));
  b.allocate(64, 24, shape);
  CHECK(b.footprint_bytes() == bytes);
}
