#pragma once

#include "barlowwalk/nn/param_set.hpp"
#include "barlowwalk/nn/tape.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace barlowwalk::nn {

enum class Activation { ELU, Tanh, Identity };

/// Layer sizes (input, hidden..., output) and one activation per layer.
struct MlpSpec {
  std::vector<int> layer_sizes;
  std::vector<Activation> activations;

  /// ELU on hidden layers, linear output.
  static MlpSpec elu_hidden(std::vector<int> sizes) {
    MlpSpec s;
    s.layer_sizes = std::move(sizes);
    const std::size_t layers = s.layer_sizes.size() > 1 ? s.layer_sizes.size() - 1 : 0;
    s.activations.assign(layers, Activation::ELU);
    if (layers > 0) s.activations.back() = Activation::Identity;
    return s;
  }

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return layer_sizes.size() - 1; }

  void validate() const {
    if (layer_sizes.size() < 2) {
      throw ConfigError("MlpSpec needs at least an input and an output size");
    }
    for (int s : layer_sizes) {
      if (s <= 0) throw ConfigError("MlpSpec layer sizes must be positive");
    }
    if (activations.size() != num_layers()) {
      throw ConfigError("MlpSpec needs exactly one activation per layer");
    }
  }
};

/// A multi-layer perceptron whose weights live in a ParamSet under
/// "<prefix>.<layer>.weight" (in x out) and "<prefix>.<layer>.bias".
struct Mlp {
  MlpSpec spec;
  std::string prefix;

  std::string weight_name(std::size_t layer) const {
    return prefix + "." + std::to_string(layer) + ".weight";
  }
  std::string bias_name(std::size_t layer) const {
    return prefix + "." + std::to_string(layer) + ".bias";
  }

  template <typename Scalar>
  void declare(ParamSet<Scalar>& params) const {
    spec.validate();
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
      const auto in = static_cast<std::uint32_t>(spec.layer_sizes[l]);
      const auto out = static_cast<std::uint32_t>(spec.layer_sizes[l + 1]);
      params.add(weight_name(l), {in, out});
      params.add(bias_name(l), {out});
    }
  }

  template <typename Scalar>
  Var<Scalar> forward(Tape<Scalar>& tape, ParamSet<Scalar>& params, Var<Scalar> x,
                      bool trainable = true) const {
    if (x.cols() != spec.input_size()) {
      throw ConfigError(prefix + ": input width " + std::to_string(x.cols()) +
                        " does not match " + std::to_string(spec.input_size()));
    }
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
      auto w = tape.parameter(params, weight_name(l), trainable);
      auto b = tape.parameter(params, bias_name(l), trainable);
      x = add_row(matmul(x, w), b);
      switch (spec.activations[l]) {
        case Activation::ELU: x = elu(x); break;
        case Activation::Tanh: x = nn::tanh(x); break;
        case Activation::Identity: break;
      }
    }
    return x;
  }
};

/// Single-layer GRU cell with gates ordered (reset, update, candidate):
///   r = s(x Wir + bir + h Whr + bhr)
///   z = s(x Wiz + biz + h Whz + bhz)
///   n = tanh(x Win + bin + r * (h Whn + bhn))
///   h' = (1 - z) * n + z * h
struct Gru {
  int input_size = 0;
  int hidden_size = dims::kGruHidden;
  std::string prefix;

  std::string name(const char* part) const { return prefix + "." + part; }

  template <typename Scalar>
  void declare(ParamSet<Scalar>& params) const {
    if (input_size <= 0 || hidden_size <= 0) {
      throw ConfigError(prefix + ": GRU sizes must be positive");
    }
    const auto in = static_cast<std::uint32_t>(input_size);
    const auto h = static_cast<std::uint32_t>(hidden_size);
    params.add(name("w_ih"), {in, 3 * h});
    params.add(name("w_hh"), {h, 3 * h});
    params.add(name("b_ih"), {3 * h});
    params.add(name("b_hh"), {3 * h});
  }

  /// Input-side gate pre-activations x Wih + bih for any number of rows.
  /// Computing these for a whole sequence at once is the expensive part.
  template <typename Scalar>
  Var<Scalar> input_gates(Tape<Scalar>& tape, ParamSet<Scalar>& params, Var<Scalar> x,
                          bool trainable = true) const {
    if (x.cols() != input_size) {
      throw ConfigError(prefix + ": input width " + std::to_string(x.cols()) +
                        " does not match " + std::to_string(input_size));
    }
    auto w = tape.parameter(params, name("w_ih"), trainable);
    auto b = tape.parameter(params, name("b_ih"), trainable);
    return add_row(matmul(x, w), b);
  }

  /// One recurrence step given precomputed input gates.
  template <typename Scalar>
  Var<Scalar> step_from_gates(Tape<Scalar>& tape, ParamSet<Scalar>& params,
                              Var<Scalar> gates_in, Var<Scalar> h,
                              bool trainable = true) const {
    if (h.cols() != hidden_size || h.rows() != gates_in.rows()) {
      throw ConfigError(prefix + ": hidden state has shape " +
                        std::to_string(h.rows()) + "x" + std::to_string(h.cols()) +
                        ", expected " + std::to_string(gates_in.rows()) + "x" +
                        std::to_string(hidden_size));
    }
    const Eigen::Index H = hidden_size;
    auto whh = tape.parameter(params, name("w_hh"), trainable);
    auto bhh = tape.parameter(params, name("b_hh"), trainable);
    auto gh = add_row(matmul(h, whh), bhh);
    auto r = sigmoid(add(col_slice(gates_in, 0, H), col_slice(gh, 0, H)));
    auto z = sigmoid(add(col_slice(gates_in, H, H), col_slice(gh, H, H)));
    auto n = nn::tanh(add(col_slice(gates_in, 2 * H, H), mul(r, col_slice(gh, 2 * H, H))));
    // h' = n + z * (h - n)
    return add(n, mul(z, sub(h, n)));
  }

  template <typename Scalar>
  Var<Scalar> step(Tape<Scalar>& tape, ParamSet<Scalar>& params, Var<Scalar> x,
                   Var<Scalar> h, bool trainable = true) const {
    return step_from_gates(tape, params, input_gates(tape, params, x, trainable), h,
                           trainable);
  }
};

/// Orthogonal initialization (rows x cols) scaled by gain.
template <typename Scalar, typename Rng>
Matrix<Scalar> orthogonal(Eigen::Index rows, Eigen::Index cols, double gain, Rng& rng) {
  const Eigen::Index n = std::max(rows, cols);
  const Eigen::Index k = std::min(rows, cols);
  Eigen::MatrixXd a(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      a(i, j) = std::normal_distribution<double>(0.0, 1.0)(rng);
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
  // Sign correction makes the draw uniform over orthogonal matrices.
  const Eigen::MatrixXd r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  Eigen::MatrixXd w = rows >= cols ? q : Eigen::MatrixXd(q.transpose());
  return (gain * w).template cast<Scalar>();
}

/// Orthogonal hidden layers with gain sqrt(2), output layer with
/// output_gain, zero biases.
template <typename Scalar, typename Rng>
void init_mlp(const Mlp& mlp, ParamSet<Scalar>& params, double output_gain, Rng& rng) {
  for (std::size_t l = 0; l < mlp.spec.num_layers(); ++l) {
    auto& w = params.at(mlp.weight_name(l));
    const double gain = l + 1 == mlp.spec.num_layers() ? output_gain : std::sqrt(2.0);
    w.values = orthogonal<Scalar>(w.values.rows(), w.values.cols(), gain, rng);
    params.at(mlp.bias_name(l)).values.setZero();
  }
}

/// Uniform(-1/sqrt(H), 1/sqrt(H)) for every GRU weight and bias.
template <typename Scalar, typename Rng>
void init_gru(const Gru& gru, ParamSet<Scalar>& params, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(gru.hidden_size));
  for (const char* part : {"w_ih", "w_hh", "b_ih", "b_hh"}) {
    auto& e = params.at(gru.name(part));
    for (Eigen::Index i = 0; i < e.values.size(); ++i) {
      e.values(i) =
          static_cast<Scalar>(std::uniform_real_distribution<double>(-bound, bound)(rng));
    }
  }
}

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

template <typename Scalar>
struct GaussianStats {
  Scalar log_prob;
  Scalar entropy;
};

/// Diagonal Gaussian log-density of action and the distribution entropy.
/// log_std is clamped to [-20, 2].
template <typename Scalar>
GaussianStats<Scalar> gaussian_head(const Vector<Scalar>& mean, const Vector<Scalar>& log_std,
                                    const Vector<Scalar>& action) {
  if (mean.size() != log_std.size() || mean.size() != action.size()) {
    throw ConfigError("gaussian_head: size mismatch");
  }
  const Scalar half_log_2pi = Scalar(0.5 * std::log(2.0 * std::numbers::pi));
  GaussianStats<Scalar> s{Scalar(0), Scalar(0)};
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const Scalar ls = std::clamp(log_std(i), Scalar(kLogStdMin), Scalar(kLogStdMax));
    const Scalar zi = (action(i) - mean(i)) * std::exp(-ls);
    s.log_prob += Scalar(-0.5) * zi * zi - ls - half_log_2pi;
    s.entropy += ls + half_log_2pi + Scalar(0.5);
  }
  return s;
}

/// Batched log-density: mean (N x A), log_std (1 x A, already clamped),
/// constant actions (N x A) -> (N x 1).
template <typename Scalar>
Var<Scalar> gaussian_log_prob(Var<Scalar> mean, Var<Scalar> log_std,
                              const Matrix<Scalar>& actions) {
  if (mean.cols() != log_std.cols() || log_std.rows() != 1 ||
      actions.rows() != mean.rows() || actions.cols() != mean.cols()) {
    throw ConfigError("gaussian_log_prob: shape mismatch");
  }
  Tape<Scalar>& t = *mean.tape;
  const Scalar half_log_2pi = Scalar(0.5 * std::log(2.0 * std::numbers::pi));
  const RowVector<Scalar> inv_std = (-log_std.value().row(0).array()).exp().matrix();
  Matrix<Scalar> z = (actions - mean.value()).array().rowwise() * inv_std.array();
  Vector<Scalar> out = (Scalar(-0.5) * z.array().square()).rowwise().sum().matrix();
  out.array() -= log_std.value().sum() + half_log_2pi * Scalar(mean.cols());
  const int im = mean.id, is = log_std.id;
  return t.record(Matrix<Scalar>(out), detail::any_grad({mean, log_std}),
                  [im, is, z, inv_std](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    // d/dmean = z / sigma, d/dlog_std = z^2 - 1
                    const Var<Scalar> vm{&t, im}, vs{&t, is};
                    if (t.requires_grad(vm)) {
                      Matrix<Scalar> dm = z.array().rowwise() * inv_std.array();
                      t.accumulate(im, g.col(0).asDiagonal() * dm);
                    }
                    if (t.requires_grad(vs)) {
                      Matrix<Scalar> ds = z.array().square() - Scalar(1);
                      t.accumulate(is, g.col(0).transpose() * ds);
                    }
                  });
}

/// Entropy of the diagonal Gaussian given log_std (1 x A) -> (1 x 1).
template <typename Scalar>
Var<Scalar> gaussian_entropy(Var<Scalar> log_std) {
  const Scalar c = Scalar(0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e));
  return add_scalar(sum(log_std), c * Scalar(log_std.cols()));
}

}  // namespace barlowwalk::nn
