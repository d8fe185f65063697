#pragma once

// Combined objective and the PPO update loop.
//
//   L_total = -mean(surrogate) + value_coef * mean((V - R)^2)
//             - entropy_coef * entropy + L_BT
//
// Mini-batches are whole-environment sequences so the recurrent state can
// be replayed from the stored snapshot at the start of the window.

#include "barlowwalk/barlow.hpp"
#include "barlowwalk/policy.hpp"
#include "barlowwalk/ppo.hpp"
#include "barlowwalk/rollout.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace barlowwalk {

struct LossOptions {
  double clip_range = 0.2;
  double value_coef = 1.0;
  double entropy_coef = 0.01;
  bool barlow_enabled = true;
  double barlow_lambda = 5e-3;
  bool barlow_center = false;
  bool detach_latent = false;
};

template <typename Scalar>
struct LossParts {
  nn::Var<Scalar> total;
  nn::Var<Scalar> policy;
  nn::Var<Scalar> value;
  nn::Var<Scalar> entropy;
  std::optional<nn::Var<Scalar>> barlow;
  std::optional<nn::Var<Scalar>> cross_corr;
  bool barlow_guarded = false;
  nn::Var<Scalar> mean;     // action means, (T * M) x A
  nn::Var<Scalar> log_std;  // 1 x A
};

/// Mini-batch drawn from environments [env_begin, env_end), rows ordered
/// t * M + m.
template <typename Scalar>
struct MiniBatch {
  int horizon = 0;
  int envs = 0;
  Matrix<Scalar> policy_obs, hist_old, hist_new, critic_obs, actions, action_mean;
  Vector<Scalar> log_probs, advantages, returns;
  std::vector<std::uint8_t> dones;
  Matrix<Scalar> actor_h0, critic_h0;

  static MiniBatch gather(const RolloutBatch<Scalar>& b, const Vector<Scalar>& advantages,
                          int env_begin, int env_end) {
    MiniBatch mb;
    mb.horizon = b.horizon;
    mb.envs = env_end - env_begin;
    const Eigen::Index n = static_cast<Eigen::Index>(mb.horizon) * mb.envs;
    auto rows_of = [&](const Matrix<Scalar>& src) {
      Matrix<Scalar> out(n, src.cols());
      for (int t = 0; t < mb.horizon; ++t) {
        out.middleRows(static_cast<Eigen::Index>(t) * mb.envs, mb.envs) =
            src.middleRows(b.row(t, env_begin), mb.envs);
      }
      return out;
    };
    auto vec_of = [&](const Vector<Scalar>& src) {
      Vector<Scalar> out(n);
      for (int t = 0; t < mb.horizon; ++t) {
        out.segment(static_cast<Eigen::Index>(t) * mb.envs, mb.envs) =
            src.segment(b.row(t, env_begin), mb.envs);
      }
      return out;
    };
    mb.policy_obs = rows_of(b.policy_obs);
    mb.hist_old = rows_of(b.hist_old);
    mb.hist_new = rows_of(b.hist_new);
    mb.critic_obs = rows_of(b.critic_obs);
    mb.actions = rows_of(b.actions);
    mb.action_mean = rows_of(b.action_mean);
    mb.log_probs = vec_of(b.log_probs);
    mb.advantages = vec_of(advantages);
    mb.returns = vec_of(b.returns);
    mb.dones.resize(static_cast<std::size_t>(n));
    for (int t = 0; t < mb.horizon; ++t) {
      for (int m = 0; m < mb.envs; ++m) {
        mb.dones[static_cast<std::size_t>(t * mb.envs + m)] =
            b.dones[static_cast<std::size_t>(b.row(t, env_begin + m))];
      }
    }
    mb.actor_h0 = b.actor_hidden.middleRows(b.row(0, env_begin), mb.envs);
    mb.critic_h0 = b.critic_hidden.middleRows(b.row(0, env_begin), mb.envs);
    return mb;
  }

  /// 1 - done of step t for every environment in the mini-batch.
  Vector<Scalar> continue_mask(int t) const {
    Vector<Scalar> m(envs);
    for (int k = 0; k < envs; ++k) {
      m(k) = dones[static_cast<std::size_t>(t * envs + k)] ? Scalar(0) : Scalar(1);
    }
    return m;
  }
};

/// Unrolls a GRU over the mini-batch window from the stored initial state,
/// resetting rows whose step ended an episode. Returns (T * M) x H.
template <typename Scalar>
nn::Var<Scalar> unroll_gru(nn::Tape<Scalar>& tape, nn::ParamSet<Scalar>& params,
                           const nn::Gru& gru, nn::Var<Scalar> inputs,
                           const Matrix<Scalar>& h0, const MiniBatch<Scalar>& mb) {
  auto gates = gru.input_gates(tape, params, inputs);
  auto h = tape.constant(h0);
  std::vector<nn::Var<Scalar>> outs;
  outs.reserve(static_cast<std::size_t>(mb.horizon));
  for (int t = 0; t < mb.horizon; ++t) {
    auto g = nn::row_slice(gates, static_cast<Eigen::Index>(t) * mb.envs, mb.envs);
    h = gru.step_from_gates(tape, params, g, h);
    outs.push_back(h);
    if (t + 1 < mb.horizon) h = nn::scale_rows(h, mb.continue_mask(t));
  }
  return nn::vcat(outs);
}

template <typename Scalar>
LossParts<Scalar> build_loss(nn::Tape<Scalar>& tape, nn::ParamSet<Scalar>& params,
                             const ActorCritic<Scalar>& net, const MiniBatch<Scalar>& mb,
                             const LossOptions& opt) {
  LossParts<Scalar> parts;
  const auto& enc = net.encoders();

  auto feats = net.history_features(tape, params, tape.constant(mb.hist_new));
  if (opt.barlow_enabled && net.has_latent_path()) {
    auto z_old = enc.encode(tape, params, tape.constant(mb.hist_old));
    auto u_old = enc.project(tape, params, z_old);
    auto u_new = enc.project(tape, params, feats);
    auto C = cross_corr(u_old, u_new, opt.barlow_center, &parts.barlow_guarded);
    parts.cross_corr = C;
    parts.barlow = barlow_loss(C, static_cast<Scalar>(opt.barlow_lambda));
  }

  auto actor_feats = opt.detach_latent ? nn::detach(feats) : feats;
  auto actor_in = nn::hcat(tape.constant(mb.policy_obs), actor_feats);
  auto actor_h = unroll_gru(tape, params, net.actor_gru(), actor_in, mb.actor_h0, mb);
  parts.mean = net.actor_head().forward(tape, params, actor_h);
  parts.log_std = net.clamped_log_std(tape, params);
  auto logp = nn::gaussian_log_prob(parts.mean, parts.log_std, mb.actions);
  auto surr = ppo_surrogate(logp, mb.log_probs, mb.advantages,
                            static_cast<Scalar>(opt.clip_range));
  parts.policy = nn::scale(nn::mean(surr), Scalar(-1));
  parts.entropy = nn::gaussian_entropy(parts.log_std);

  auto critic_h =
      unroll_gru(tape, params, net.critic_gru(), tape.constant(mb.critic_obs), mb.critic_h0, mb);
  auto values = net.critic_head().forward(tape, params, critic_h);
  parts.value = nn::mean(nn::square(nn::sub(values, tape.constant(Matrix<Scalar>(mb.returns)))));

  auto total = nn::add(parts.policy, nn::scale(parts.value, static_cast<Scalar>(opt.value_coef)));
  total = nn::sub(total, nn::scale(parts.entropy, static_cast<Scalar>(opt.entropy_coef)));
  if (parts.barlow) total = nn::add(total, *parts.barlow);
  parts.total = total;
  return parts;
}

struct UpdateStats {
  double loss_pi = 0;
  double loss_v = 0;
  double loss_bt = 0;
  double entropy = 0;
  double kl = 0;
  double lr = 0;
  double c_diag_mean = 0;
  double c_offdiag_rms = 0;
  int steps = 0;
  int skipped_steps = 0;
  bool barlow_guarded = false;
  bool aborted = false;
  std::string diagnostic;
};

/// Mutable optimizer state carried across updates.
template <typename Scalar>
struct OptimizerState {
  Adam<Scalar> adam;
  double lr = 1e-3;
};

template <typename Scalar>
UpdateStats update(RolloutBatch<Scalar>& batch, const ActorCritic<Scalar>& net,
                   nn::ParamSet<Scalar>& params, OptimizerState<Scalar>& opt_state,
                   const PpoConfig& cfg, const LossOptions& loss_opt) {
  UpdateStats stats;
  if (batch.num_envs % cfg.num_mini_batches != 0) {
    throw ConfigError("update: num_envs (" + std::to_string(batch.num_envs) +
                      ") must be divisible by the mini-batch count (" +
                      std::to_string(cfg.num_mini_batches) + ")");
  }
  Vector<Scalar> adv = batch.advantages;
  normalize_advantages(adv);

  const int per_mb = batch.num_envs / cfg.num_mini_batches;
  int passes = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int k = 0; k < cfg.num_mini_batches; ++k) {
      const auto mb = MiniBatch<Scalar>::gather(batch, adv, k * per_mb, (k + 1) * per_mb);
      nn::Tape<Scalar> tape;
      auto parts = build_loss(tape, params, net, mb, loss_opt);
      const double total = static_cast<double>(parts.total.value()(0, 0));
      if (!std::isfinite(total)) {
        stats.aborted = true;
        stats.diagnostic = "non-finite loss in epoch " + std::to_string(epoch) +
                           ", mini-batch " + std::to_string(k);
        stats.lr = opt_state.lr;
        return stats;
      }
      const double kl = static_cast<double>(gaussian_kl<Scalar>(
          mb.action_mean, batch.log_std, parts.mean.value(), parts.log_std.value().row(0)));
      if (cfg.adaptive_lr && std::isfinite(kl)) {
        opt_state.lr = adapt_lr(opt_state.lr, kl, cfg.desired_kl, cfg.lr_min, cfg.lr_max);
      }
      params.zero_grad();
      tape.backward(parts.total);
      if (!params.grads_finite()) {
        ++stats.skipped_steps;
      } else {
        clip_grad_norm(params, cfg.max_grad_norm);
        opt_state.adam.step(params, opt_state.lr);
        ++stats.steps;
      }
      stats.loss_pi += static_cast<double>(parts.policy.value()(0, 0));
      stats.loss_v += static_cast<double>(parts.value.value()(0, 0));
      stats.entropy += static_cast<double>(parts.entropy.value()(0, 0));
      stats.kl += kl;
      if (parts.barlow) {
        stats.loss_bt += static_cast<double>(parts.barlow->value()(0, 0));
        const auto d = diagnostics<Scalar>(parts.cross_corr->value());
        stats.c_diag_mean += static_cast<double>(d.diag_mean);
        stats.c_offdiag_rms += static_cast<double>(d.offdiag_rms);
        stats.barlow_guarded = stats.barlow_guarded || parts.barlow_guarded;
      }
      ++passes;
    }
  }
  params.zero_grad();
  if (passes > 0) {
    const double inv = 1.0 / passes;
    stats.loss_pi *= inv;
    stats.loss_v *= inv;
    stats.loss_bt *= inv;
    stats.entropy *= inv;
    stats.kl *= inv;
    stats.c_diag_mean *= inv;
    stats.c_offdiag_rms *= inv;
  }
  stats.lr = opt_state.lr;
  return stats;
}

}  // namespace barlowwalk
