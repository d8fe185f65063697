#include "barlowwalk/grad_check.hpp"

namespace barlowwalk::gradcheck {

namespace {

using P = nn::ParamSet<double>;
using T = nn::Tape<double>;

void perturb(P& params, std::mt19937_64& rng, double sd) {
  std::normal_distribution<double> n(0.0, sd);
  for (auto& e : params.entries()) {
    for (Eigen::Index i = 0; i < e.values.size(); ++i) e.values(i) += n(rng);
  }
}

}  // namespace

std::vector<CheckResult> run_suite(int seeds, double h, double tol) {
  std::vector<CheckResult> out;
  for (int k = 0; k < seeds; ++k) {
    const auto seed = static_cast<std::uint64_t>(k);
    auto record = [&](std::string name, const nn::LossBuilder<double>& f, P& params) {
      out.push_back(CheckResult{std::move(name), seed, nn::fd_check(f, params, h, tol)});
    };

    std::mt19937_64 rng(1000 + seed);
    const ActorCritic<double> net(tiny_shape());
    P params = net.make_params();
    net.init(params, rng, -0.2);
    // Random biases and a nonzero head so every path carries gradient.
    perturb(params, rng, 0.2);
    const auto& enc = net.encoders();
    const auto& s = net.shape();
    const int n = 6;
    const Matrix<double> slices = gaussian_matrix<double>(n, s.history_slice(), rng);

    {
      auto& m = enc.mlp_enc;
      P p;
      m.declare(p);
      nn::init_mlp(m, p, 1.0, rng);
      perturb(p, rng, 0.2);
      record("mlp_enc", [&](T& t, P& ps) { return nn::mean(nn::square(m.forward(t, ps, t.constant(slices)))); }, p);
    }
    {
      auto& m = enc.latent_enc;
      P p;
      m.declare(p);
      nn::init_mlp(m, p, 1.0, rng);
      perturb(p, rng, 0.2);
      const Matrix<double> x = gaussian_matrix<double>(n, m.spec.input_size(), rng);
      record("latent_enc", [&](T& t, P& ps) { return nn::mean(nn::square(m.forward(t, ps, t.constant(x)))); }, p);
    }
    {
      auto& m = enc.barlow_enc;
      P p;
      m.declare(p);
      nn::init_mlp(m, p, 1.0, rng);
      perturb(p, rng, 0.2);
      const Matrix<double> x = gaussian_matrix<double>(n, m.spec.input_size(), rng);
      record("barlow_enc", [&](T& t, P& ps) { return nn::mean(nn::square(m.forward(t, ps, t.constant(x)))); }, p);
    }

    auto batch = synthetic_batch(net, params, 4, 3, rng);
    Vector<double> adv = batch.advantages;
    normalize_advantages(adv);
    const auto mb = MiniBatch<double>::gather(batch, adv, 0, batch.num_envs);

    {
      P p = params;
      record("actor", [&](T& t, P& ps) {
        auto feats = net.history_features(t, ps, t.constant(mb.hist_new));
        auto in = nn::hcat(t.constant(mb.policy_obs), feats);
        auto hs = unroll_gru(t, ps, net.actor_gru(), in, mb.actor_h0, mb);
        auto mean = net.actor_head().forward(t, ps, hs);
        auto lp = nn::gaussian_log_prob(mean, net.clamped_log_std(t, ps), mb.actions);
        return nn::mean(lp);
      }, p);
    }
    {
      P p = params;
      record("critic", [&](T& t, P& ps) {
        auto hs = unroll_gru(t, ps, net.critic_gru(), t.constant(mb.critic_obs), mb.critic_h0, mb);
        auto v = net.critic_head().forward(t, ps, hs);
        return nn::mean(nn::square(nn::sub(v, t.constant(Matrix<double>(mb.returns)))));
      }, p);
    }
    {
      P p;
      p.add("u_old", {8, 4}).values = gaussian_matrix<double>(8, 4, rng);
      p.add("u_new", {8, 4}).values = gaussian_matrix<double>(8, 4, rng);
      record("barlow_loss", [](T& t, P& ps) {
        return barlow_loss(cross_corr(t.parameter(ps, "u_old"), t.parameter(ps, "u_new")), 5e-3);
      }, p);
    }
    for (bool barlow : {true, false}) {
      P p = params;
      LossOptions opt;
      opt.barlow_enabled = barlow;
      record(barlow ? "total_loss" : "total_loss_no_barlow",
             [&, opt](T& t, P& ps) { return build_loss(t, ps, net, mb, opt).total; }, p);
    }
    {
      std::mt19937_64 r2(2000 + seed);
      const ActorCritic<double> base(tiny_shape(true));
      P p = base.make_params();
      base.init(p, r2, -0.2);
      perturb(p, r2, 0.2);
      auto b2 = synthetic_batch(base, p, 4, 3, r2);
      Vector<double> a2 = b2.advantages;
      normalize_advantages(a2);
      const auto m2 = MiniBatch<double>::gather(b2, a2, 0, b2.num_envs);
      record("total_loss_baseline2",
             [&](T& t, P& ps) { return build_loss(t, ps, base, m2, LossOptions{}).total; }, p);
    }
  }
  return out;
}

}  // namespace barlowwalk::gradcheck
