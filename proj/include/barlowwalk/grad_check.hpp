#pragma once

// Finite-difference audit of every network and of the composite loss on
// reduced-width copies, in double precision.

#include "barlowwalk/ppo_update.hpp"

#include "barlowwalk/nn/fd_check.hpp"

#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace barlowwalk::gradcheck {

inline NetworkShape tiny_shape(bool baseline2 = false) {
  NetworkShape s;
  s.policy_obs = 5;
  s.full_obs = 7;
  s.scan = 4;
  s.action = 2;
  s.history_window = 2;
  s.gru_hidden = 4;
  s.head_hidden = 3;
  s.mlp_enc_hidden = {6};
  s.mlp_enc_out = 5;
  s.latent_hidden = {4};
  s.latent = 3;
  s.barlow_hidden = {3};
  s.barlow = 4;
  s.baseline2 = baseline2;
  return s;
}

template <typename Scalar>
Matrix<Scalar> gaussian_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng,
                               double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Matrix<Scalar> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = static_cast<Scalar>(n(rng));
  return m;
}

/// Random but self-consistent batch: behaviour statistics come from the
/// current network so ratios start near one, perturbed by `drift`.
template <typename Scalar>
RolloutBatch<Scalar> synthetic_batch(const ActorCritic<Scalar>& net, nn::ParamSet<Scalar>& params,
                                     int envs, int steps, std::mt19937_64& rng,
                                     double drift = 0.1) {
  const auto& s = net.shape();
  RolloutBatch<Scalar> b;
  b.allocate(envs, steps, s);
  b.policy_obs = gaussian_matrix<Scalar>(b.size(), s.policy_obs, rng);
  b.hist_old = gaussian_matrix<Scalar>(b.size(), s.history_slice(), rng);
  b.hist_new = gaussian_matrix<Scalar>(b.size(), s.history_slice(), rng);
  b.critic_obs = gaussian_matrix<Scalar>(b.size(), s.critic_in(), rng);
  b.actions = gaussian_matrix<Scalar>(b.size(), s.action, rng);
  b.rewards = gaussian_matrix<Scalar>(b.size(), 1, rng).col(0);
  b.actor_hidden = gaussian_matrix<Scalar>(b.size(), s.gru_hidden, rng, 0.3);
  b.critic_hidden = gaussian_matrix<Scalar>(b.size(), s.gru_hidden, rng, 0.3);
  b.last_values = gaussian_matrix<Scalar>(envs, 1, rng).col(0);
  std::bernoulli_distribution coin(0.15);
  for (auto& d : b.dones) d = coin(rng) ? 1 : 0;

  // Behaviour policy: replay the network with a small perturbation.
  Matrix<Scalar> h = b.actor_hidden.topRows(envs);
  Matrix<Scalar> hc = b.critic_hidden.topRows(envs);
  for (int t = 0; t < steps; ++t) {
    const auto rows = b.row(t, 0);
    b.actor_hidden.middleRows(rows, envs) = h;
    b.critic_hidden.middleRows(rows, envs) = hc;
    auto out = net.act(params, b.hist_new.middleRows(rows, envs),
                       b.policy_obs.middleRows(rows, envs), h);
    auto val = net.evaluate(params, b.critic_obs.middleRows(rows, envs), hc);
    b.action_mean.middleRows(rows, envs) =
        out.mean + gaussian_matrix<Scalar>(envs, s.action, rng, drift);
    b.log_std = out.log_std;
    b.values.segment(rows, envs) = val.value;
    h = out.hidden;
    hc = val.hidden;
    for (int e = 0; e < envs; ++e) {
      if (b.dones[static_cast<std::size_t>(b.row(t, e))]) {
        h.row(e).setZero();
        hc.row(e).setZero();
      }
    }
  }
  for (Eigen::Index r = 0; r < b.size(); ++r) {
    Scalar lp = 0;
    for (int a = 0; a < s.action; ++a) {
      const Scalar z = (b.actions(r, a) - b.action_mean(r, a)) * std::exp(-b.log_std(a));
      lp += Scalar(-0.5) * z * z - b.log_std(a) -
            Scalar(0.5 * std::log(2.0 * std::numbers::pi));
    }
    b.log_probs(r) = lp;
  }
  b.compute_returns(Scalar(0.99), Scalar(0.95));
  return b;
}

struct CheckResult {
  std::string network;
  std::uint64_t seed = 0;
  nn::FdReport report;
};

/// One report per (network, seed). Networks: the three encoders, the
/// actor and critic paths, the Barlow loss, and the composite objective
/// with and without the Barlow term plus the history-only baseline.
std::vector<CheckResult> run_suite(int seeds, double h = 1e-6, double tol = 1e-4);

}  // namespace barlowwalk::gradcheck
