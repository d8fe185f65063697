#pragma once

// PPO building blocks: advantage estimation, the clipped surrogate, the
// KL-driven learning-rate rule and the Adam optimizer.

#include "barlowwalk/nn/param_set.hpp"
#include "barlowwalk/nn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace barlowwalk {

struct PpoConfig {
  double clip_range = 0.2;
  int epochs = 5;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double entropy_coef = 0.01;
  double desired_kl = 0.01;
  double value_coef = 1.0;
  int num_mini_batches = 4;
  double learning_rate = 1e-3;
  double lr_min = 1e-5;
  double lr_max = 1e-2;
  bool adaptive_lr = true;
  double max_grad_norm = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

template <typename Scalar>
struct Advantages {
  Vector<Scalar> advantages;
  Vector<Scalar> returns;
};

/// GAE over one trajectory of length T. values has T + 1 entries (the last
/// one bootstraps). A done at t stops both the bootstrap and the
/// recursion at t.
template <typename Scalar>
Advantages<Scalar> compute_gae(const Vector<Scalar>& rewards, const Vector<Scalar>& values,
                               const std::vector<bool>& dones, Scalar gamma, Scalar lambda) {
  const Eigen::Index T = rewards.size();
  if (values.size() != T + 1 || static_cast<Eigen::Index>(dones.size()) != T) {
    throw ConfigError("compute_gae: expects T rewards, T dones and T+1 values");
  }
  Advantages<Scalar> out{Vector<Scalar>::Zero(T), Vector<Scalar>::Zero(T)};
  Scalar next_adv = 0;
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const Scalar not_done = dones[static_cast<std::size_t>(t)] ? Scalar(0) : Scalar(1);
    const Scalar delta = rewards(t) + gamma * not_done * values(t + 1) - values(t);
    next_adv = delta + gamma * lambda * not_done * next_adv;
    out.advantages(t) = next_adv;
  }
  out.returns = out.advantages + values.head(T);
  return out;
}

/// min(r A, clip(r, 1 - eps, 1 + eps) A) with r = exp(new - old).
template <typename Scalar>
Scalar ppo_surrogate(Scalar log_prob_new, Scalar log_prob_old, Scalar advantage, Scalar eps) {
  const Scalar ratio = std::exp(log_prob_new - log_prob_old);
  const Scalar clipped = std::clamp(ratio, Scalar(1) - eps, Scalar(1) + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

/// Batched surrogate (N x 1) on a log-prob node. The gradient is exactly
/// zero wherever the clipped branch is selected.
template <typename Scalar>
nn::Var<Scalar> ppo_surrogate(nn::Var<Scalar> log_prob_new, const Vector<Scalar>& log_prob_old,
                              const Vector<Scalar>& advantages, Scalar eps) {
  const Eigen::Index n = log_prob_new.rows();
  if (log_prob_new.cols() != 1 || log_prob_old.size() != n || advantages.size() != n) {
    throw ConfigError("ppo_surrogate: shape mismatch");
  }
  Matrix<Scalar> out(n, 1);
  Vector<Scalar> slope(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar ratio = std::exp(log_prob_new.value()(i, 0) - log_prob_old(i));
    const Scalar unclipped = ratio * advantages(i);
    const Scalar clipped =
        std::clamp(ratio, Scalar(1) - eps, Scalar(1) + eps) * advantages(i);
    if (unclipped <= clipped) {
      out(i, 0) = unclipped;
      slope(i) = unclipped;  // d(r A)/d log_prob = r A
    } else {
      out(i, 0) = clipped;
      // Inside the clip interval both branches coincide.
      const bool inside = ratio > Scalar(1) - eps && ratio < Scalar(1) + eps;
      slope(i) = inside ? unclipped : Scalar(0);
    }
  }
  nn::Tape<Scalar>& t = *log_prob_new.tape;
  const int il = log_prob_new.id;
  return t.record(std::move(out), nn::detail::any_grad({log_prob_new}),
                  [il, slope](nn::Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    t.accumulate(il, g.cwiseProduct(slope));
                  });
}

/// Halve-or-grow rule: kl > 2 desired -> lr / 1.5; 0 < kl < desired / 2 ->
/// lr * 1.5; result clamped to [lr_min, lr_max].
inline double adapt_lr(double current_lr, double observed_kl, double desired_kl,
                       double lr_min = 1e-5, double lr_max = 1e-2) {
  if (!(current_lr > 0)) throw ConfigError("adapt_lr: learning rate must be positive");
  double lr = current_lr;
  if (observed_kl > 2.0 * desired_kl) {
    lr = current_lr / 1.5;
  } else if (observed_kl < desired_kl / 2.0 && observed_kl > 0.0) {
    lr = current_lr * 1.5;
  }
  return std::clamp(lr, lr_min, lr_max);
}

/// Closed-form KL(old || new) of diagonal Gaussians, summed over action
/// dimensions, averaged over rows.
template <typename Scalar>
Scalar gaussian_kl(const Matrix<Scalar>& mean_old, const RowVector<Scalar>& log_std_old,
                   const Matrix<Scalar>& mean_new, const RowVector<Scalar>& log_std_new) {
  const auto var_old = (Scalar(2) * log_std_old.array()).exp();
  const auto var_new = (Scalar(2) * log_std_new.array()).exp();
  Scalar total = 0;
  for (Eigen::Index r = 0; r < mean_old.rows(); ++r) {
    const auto diff = (mean_old.row(r) - mean_new.row(r)).array();
    total += (log_std_new.array() - log_std_old.array() +
              (var_old + diff.square()) / (Scalar(2) * var_new) - Scalar(0.5))
                 .sum();
  }
  return mean_old.rows() > 0 ? total / Scalar(mean_old.rows()) : Scalar(0);
}

/// In-place standardization to zero mean and unit (population) std.
template <typename Scalar>
void normalize_advantages(Vector<Scalar>& adv) {
  if (adv.size() == 0) return;
  // Accumulate in double so float batches still meet the 1e-6 contract.
  const Eigen::VectorXd a = adv.template cast<double>();
  const double mu = a.mean();
  const double var = (a.array() - mu).square().mean();
  const double sd = std::sqrt(var) + 1e-8;
  adv = ((a.array() - mu) / sd).matrix().template cast<Scalar>();
}

/// Adam with bias correction, one moment pair per ParamSet entry.
template <typename Scalar>
class Adam {
 public:
  Adam() = default;
  Adam(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void reset(const nn::ParamSet<Scalar>& params) {
    m_.clear();
    v_.clear();
    for (const auto& e : params.entries()) {
      m_.push_back(Matrix<Scalar>::Zero(e.values.rows(), e.values.cols()));
      v_.push_back(Matrix<Scalar>::Zero(e.values.rows(), e.values.cols()));
    }
    steps_ = 0;
  }

  void step(nn::ParamSet<Scalar>& params, double lr) {
    if (m_.size() != params.size()) reset(params);
    ++steps_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
    const Scalar b1 = static_cast<Scalar>(beta1_), b2 = static_cast<Scalar>(beta2_);
    const Scalar step_size = static_cast<Scalar>(lr / bc1);
    const Scalar inv_sqrt_bc2 = static_cast<Scalar>(1.0 / std::sqrt(bc2));
    const Scalar eps = static_cast<Scalar>(eps_);
    for (std::size_t k = 0; k < m_.size(); ++k) {
      auto& e = params.entries()[k];
      m_[k] = b1 * m_[k] + (Scalar(1) - b1) * e.gradient;
      v_[k] = b2 * v_[k] + (Scalar(1) - b2) * e.gradient.cwiseAbs2();
      e.values.array() -=
          step_size * m_[k].array() / ((v_[k].array().sqrt() * inv_sqrt_bc2) + eps);
    }
  }

  std::vector<Matrix<Scalar>>& first_moments() { return m_; }
  std::vector<Matrix<Scalar>>& second_moments() { return v_; }
  const std::vector<Matrix<Scalar>>& first_moments() const { return m_; }
  const std::vector<Matrix<Scalar>>& second_moments() const { return v_; }
  long long steps() const { return steps_; }
  void set_steps(long long s) { steps_ = s; }

 private:
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::vector<Matrix<Scalar>> m_;
  std::vector<Matrix<Scalar>> v_;
  long long steps_ = 0;
};

/// Scales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
template <typename Scalar>
double clip_grad_norm(nn::ParamSet<Scalar>& params, double max_norm) {
  double sq = 0;
  for (const auto& e : params.entries()) sq += e.gradient.template cast<double>().squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const Scalar s = static_cast<Scalar>(max_norm / (norm + 1e-6));
    for (auto& e : params.entries()) e.gradient *= s;
  }
  return norm;
}

}  // namespace barlowwalk
