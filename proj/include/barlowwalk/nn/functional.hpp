#pragma once

// Single-sample convenience entry points over the tape-based layers.

#include "barlowwalk/nn/layers.hpp"

#include <type_traits>
#include <utility>

namespace barlowwalk::nn {

template <typename Scalar>
Vector<Scalar> mlp_forward(const Mlp& mlp, ParamSet<Scalar>& params,
                           const std::type_identity_t<Vector<Scalar>>& input) {
  if (input.size() != mlp.spec.input_size()) {
    throw ConfigError(mlp.prefix + ": input length " + std::to_string(input.size()) +
                      " does not match " + std::to_string(mlp.spec.input_size()));
  }
  Tape<Scalar> tape;
  auto x = tape.constant(input.transpose());
  auto y = mlp.forward(tape, params, x, /*trainable=*/false);
  return y.value().row(0).transpose();
}

template <typename Scalar>
struct GruState {
  Vector<Scalar> hidden;

  static GruState zeros(int hidden_size = dims::kGruHidden) {
    return GruState{Vector<Scalar>::Zero(hidden_size)};
  }
};

/// Output equals the new hidden state.
template <typename Scalar>
std::pair<Vector<Scalar>, GruState<Scalar>> gru_step(const Gru& gru, ParamSet<Scalar>& params,
                                                     const std::type_identity_t<Vector<Scalar>>& input,
                                                     const GruState<Scalar>& state) {
  if (state.hidden.size() != gru.hidden_size) {
    throw ConfigError(gru.prefix + ": state length " + std::to_string(state.hidden.size()) +
                      " does not match hidden size " + std::to_string(gru.hidden_size));
  }
  if (input.size() != gru.input_size) {
    throw ConfigError(gru.prefix + ": input length " + std::to_string(input.size()) +
                      " does not match " + std::to_string(gru.input_size));
  }
  Tape<Scalar> tape;
  auto x = tape.constant(input.transpose());
  auto h = tape.constant(state.hidden.transpose());
  auto out = gru.step(tape, params, x, h, /*trainable=*/false);
  Vector<Scalar> hv = out.value().row(0).transpose();
  return {hv, GruState<Scalar>{hv}};
}

}  // namespace barlowwalk::nn
