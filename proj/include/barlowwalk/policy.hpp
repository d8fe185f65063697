#pragma once

// Asymmetric recurrent actor-critic over the encoder stack.
//
//   actor : [proprio (35) | z (16)] -> GRU(64) -> MLP 64-32-8 -> Gaussian mean
//   critic: [full obs (38) | height scan (187)] -> GRU(64) -> MLP 64-32-1
//
// In the history-only baseline the actor consumes [proprio | MLP-encoder
// features (64)] and the critic the 38-dim observation without the scan.

#include "barlowwalk/encoders.hpp"
#include "barlowwalk/nn/layers.hpp"

#include <string>
#include <vector>

namespace barlowwalk {

struct NetworkShape {
  int policy_obs = dims::kPolicyObs;
  int full_obs = dims::kFullObs;
  int scan = dims::kScan;
  int action = dims::kAction;
  int history_window = dims::kHistoryWindow;
  int gru_hidden = dims::kGruHidden;
  int head_hidden = dims::kHeadHidden;
  std::vector<int> mlp_enc_hidden{128};
  int mlp_enc_out = dims::kMlpEncOut;
  std::vector<int> latent_hidden{32};
  int latent = dims::kLatent;
  std::vector<int> barlow_hidden{16};
  int barlow = dims::kBarlow;
  bool baseline2 = false;

  static NetworkShape standard(bool baseline2 = false) {
    NetworkShape s;
    s.baseline2 = baseline2;
    return s;
  }

  int history_slice() const { return history_window * policy_obs; }
  int policy_in() const { return policy_obs + (baseline2 ? mlp_enc_out : latent); }
  int critic_in() const { return baseline2 ? full_obs : full_obs + scan; }

  /// Throws unless the wiring is the standard one (38/35/175/51/225/16/64).
  void audit() const;
};

template <typename Scalar>
class ActorCritic {
 public:
  explicit ActorCritic(NetworkShape shape = NetworkShape::standard()) : shape_(std::move(shape)) {
    auto sizes = [](int in, const std::vector<int>& hidden, int out) {
      std::vector<int> s{in};
      s.insert(s.end(), hidden.begin(), hidden.end());
      s.push_back(out);
      return s;
    };
    enc_ = EncoderStack::with_sizes(sizes(shape_.history_slice(), shape_.mlp_enc_hidden,
                                          shape_.mlp_enc_out),
                                    sizes(shape_.mlp_enc_out, shape_.latent_hidden, shape_.latent),
                                    sizes(shape_.latent, shape_.barlow_hidden, shape_.barlow));
    actor_gru_ = nn::Gru{shape_.policy_in(), shape_.gru_hidden, "actor.gru"};
    actor_head_ = nn::Mlp{nn::MlpSpec::elu_hidden({shape_.gru_hidden, shape_.head_hidden,
                                                   shape_.action}),
                          "actor.head"};
    critic_gru_ = nn::Gru{shape_.critic_in(), shape_.gru_hidden, "critic.gru"};
    critic_head_ = nn::Mlp{nn::MlpSpec::elu_hidden({shape_.gru_hidden, shape_.head_hidden, 1}),
                           "critic.head"};
  }

  const NetworkShape& shape() const { return shape_; }
  const EncoderStack& encoders() const { return enc_; }
  const nn::Gru& actor_gru() const { return actor_gru_; }
  const nn::Mlp& actor_head() const { return actor_head_; }
  const nn::Gru& critic_gru() const { return critic_gru_; }
  const nn::Mlp& critic_head() const { return critic_head_; }
  bool has_latent_path() const { return !shape_.baseline2; }
  static constexpr const char* kLogStd = "actor.log_std";

  void declare(nn::ParamSet<Scalar>& params) const {
    enc_.declare(params, has_latent_path());
    actor_gru_.declare(params);
    actor_head_.declare(params);
    params.add(kLogStd, {static_cast<std::uint32_t>(shape_.action)});
    critic_gru_.declare(params);
    critic_head_.declare(params);
  }

  template <typename Rng>
  void init(nn::ParamSet<Scalar>& params, Rng& rng, double init_log_std = 0.0) const {
    enc_.init(params, rng, has_latent_path());
    nn::init_gru(actor_gru_, params, rng);
    nn::init_mlp(actor_head_, params, 0.01, rng);
    params.at(kLogStd).values.setConstant(static_cast<Scalar>(init_log_std));
    nn::init_gru(critic_gru_, params, rng);
    nn::init_mlp(critic_head_, params, 1.0, rng);
  }

  nn::ParamSet<Scalar> make_params() const {
    nn::ParamSet<Scalar> p;
    declare(p);
    return p;
  }

  /// Actor-side features appended to the proprioceptive observation:
  /// z (N x 16), or the MLP-encoder output in the baseline.
  nn::Var<Scalar> history_features(nn::Tape<Scalar>& tape, nn::ParamSet<Scalar>& params,
                                   nn::Var<Scalar> slices, bool trainable = true) const {
    if (shape_.baseline2) return enc_.mlp_enc.forward(tape, params, slices, trainable);
    return enc_.encode(tape, params, slices, trainable);
  }

  nn::Var<Scalar> clamped_log_std(nn::Tape<Scalar>& tape, nn::ParamSet<Scalar>& params,
                                  bool trainable = true) const {
    return nn::clamp(tape.parameter(params, kLogStd, trainable), Scalar(nn::kLogStdMin),
                     Scalar(nn::kLogStdMax));
  }

  struct ActOutput {
    Matrix<Scalar> mean;        // N x action
    RowVector<Scalar> log_std;  // 1 x action, clamped
    Matrix<Scalar> hidden;      // N x gru_hidden
    Matrix<Scalar> features;    // z (or encoder features in the baseline)
  };

  /// One batched inference step of the actor (no gradient).
  ActOutput act(nn::ParamSet<Scalar>& params, const Matrix<Scalar>& history_slices,
                const Matrix<Scalar>& policy_obs, const Matrix<Scalar>& hidden) const {
    nn::Tape<Scalar> tape;
    auto feats = history_features(tape, params, tape.constant(history_slices), false);
    auto x = nn::hcat(tape.constant(policy_obs), feats);
    auto h = actor_gru_.step(tape, params, x, tape.constant(hidden), false);
    auto mean = actor_head_.forward(tape, params, h, false);
    auto ls = clamped_log_std(tape, params, false);
    return ActOutput{mean.value(), ls.value().row(0), h.value(), feats.value()};
  }

  struct ValueOutput {
    Vector<Scalar> value;
    Matrix<Scalar> hidden;
  };

  ValueOutput evaluate(nn::ParamSet<Scalar>& params, const Matrix<Scalar>& critic_obs,
                       const Matrix<Scalar>& hidden) const {
    nn::Tape<Scalar> tape;
    auto h = critic_gru_.step(tape, params, tape.constant(critic_obs), tape.constant(hidden),
                              false);
    auto v = critic_head_.forward(tape, params, h, false);
    return ValueOutput{v.value().col(0), h.value()};
  }

 private:
  NetworkShape shape_;
  EncoderStack enc_;
  nn::Gru actor_gru_;
  nn::Mlp actor_head_;
  nn::Gru critic_gru_;
  nn::Mlp critic_head_;
};

inline void NetworkShape::audit() const {
  auto expect = [](const char* what, int got, int want) {
    if (got != want) {
      throw ConfigError(std::string("dimension audit: ") + what + " is " + std::to_string(got) +
                        ", expected " + std::to_string(want));
    }
  };
  expect("full observation", full_obs, dims::kFullObs);
  expect("proprioceptive observation", policy_obs, dims::kPolicyObs);
  expect("history slice", history_slice(), dims::kHistorySlice);
  expect("MLP encoder output", mlp_enc_out, dims::kMlpEncOut);
  expect("latent", latent, dims::kLatent);
  expect("Barlow projection", barlow, dims::kBarlow);
  expect("action", action, dims::kAction);
  expect("height scan", scan, dims::kScan);
  expect("GRU hidden", gru_hidden, dims::kGruHidden);
  if (baseline2) {
    expect("policy input", policy_in(), dims::kPolicyObs + dims::kMlpEncOut);
    expect("critic input", critic_in(), dims::kFullObs);
  } else {
    expect("policy input", policy_in(), dims::kPolicyIn);
    expect("critic input", critic_in(), dims::kCriticIn);
  }
}

}  // namespace barlowwalk
