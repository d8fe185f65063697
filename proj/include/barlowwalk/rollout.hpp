#pragma once

#include "barlowwalk/policy.hpp"
#include "barlowwalk/ppo.hpp"
#include "barlowwalk/types.hpp"

#include <cstdint>
#include <vector>

namespace barlowwalk {

/// Fixed-horizon trajectories of every environment. Row t * num_envs + e
/// holds step t of environment e.
template <typename Scalar>
struct RolloutBatch {
  int num_envs = 0;
  int horizon = 0;

  Matrix<Scalar> policy_obs;     // normalized proprioceptive frame
  Matrix<Scalar> hist_old;       // history slice before the push
  Matrix<Scalar> hist_new;       // history slice after the push
  Matrix<Scalar> critic_obs;     // normalized full obs (+ scan)
  Matrix<Scalar> actions;
  Matrix<Scalar> action_mean;    // behaviour policy mean
  RowVector<Scalar> log_std;     // behaviour policy log std (state independent)
  Vector<Scalar> log_probs;
  Vector<Scalar> values;
  Vector<Scalar> rewards;
  std::vector<std::uint8_t> dones;
  Matrix<Scalar> actor_hidden;   // hidden state fed into step t
  Matrix<Scalar> critic_hidden;
  Vector<Scalar> last_values;    // bootstrap value after the final step

  Vector<Scalar> advantages;
  Vector<Scalar> returns;

  void allocate(int envs, int steps, const NetworkShape& shape) {
    num_envs = envs;
    horizon = steps;
    const Eigen::Index n = static_cast<Eigen::Index>(envs) * steps;
    policy_obs.setZero(n, shape.policy_obs);
    hist_old.setZero(n, shape.history_slice());
    hist_new.setZero(n, shape.history_slice());
    critic_obs.setZero(n, shape.critic_in());
    actions.setZero(n, shape.action);
    action_mean.setZero(n, shape.action);
    log_std.setZero(shape.action);
    log_probs.setZero(n);
    values.setZero(n);
    rewards.setZero(n);
    dones.assign(static_cast<std::size_t>(n), 0);
    actor_hidden.setZero(n, shape.gru_hidden);
    critic_hidden.setZero(n, shape.gru_hidden);
    last_values.setZero(envs);
    advantages.setZero(n);
    returns.setZero(n);
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(num_envs) * horizon; }
  Eigen::Index row(int t, int e) const {
    return static_cast<Eigen::Index>(t) * num_envs + e;
  }

  /// Bytes held by the per-step storage (constant across iterations).
  std::size_t footprint_bytes() const {
    auto m = [](const auto& x) { return static_cast<std::size_t>(x.size()) * sizeof(Scalar); };
    return m(policy_obs) + m(hist_old) + m(hist_new) + m(critic_obs) + m(actions) +
           m(action_mean) + m(log_std) + m(log_probs) + m(values) + m(rewards) + dones.size() +
           m(actor_hidden) + m(critic_hidden) + m(last_values) + m(advantages) + m(returns);
  }

  /// Per-environment GAE using the stored values and bootstrap.
  void compute_returns(Scalar gamma, Scalar lambda);
};

template <typename Scalar>
void RolloutBatch<Scalar>::compute_returns(Scalar gamma, Scalar lambda) {
  Vector<Scalar> r(horizon), v(horizon + 1);
  std::vector<bool> d(static_cast<std::size_t>(horizon));
  for (int e = 0; e < num_envs; ++e) {
    for (int t = 0; t < horizon; ++t) {
      r(t) = rewards(row(t, e));
      v(t) = values(row(t, e));
      d[static_cast<std::size_t>(t)] = dones[static_cast<std::size_t>(row(t, e))] != 0;
    }
    v(horizon) = last_values(e);
    const auto gae = compute_gae(r, v, d, gamma, lambda);
    for (int t = 0; t < horizon; ++t) {
      advantages(row(t, e)) = gae.advantages(t);
      returns(row(t, e)) = gae.returns(t);
    }
  }
}

}  // namespace barlowwalk
