#pragma once

// Proprioceptive history bookkeeping and the encoder chain
//   history slice (175) -> MLP encoder (64) -> latent encoder (16)
//   latent (16) -> Barlow projector (64)

#include "barlowwalk/nn/functional.hpp"
#include "barlowwalk/types.hpp"

#include <array>
#include <type_traits>

namespace barlowwalk {

/// Ring buffer of the last ten 35-dim proprioceptive frames, zero-padded.
template <typename Scalar>
class HistoryBuffer {
 public:
  using Frame = Eigen::Matrix<Scalar, dims::kPolicyObs, 1>;

  HistoryBuffer() { clear(); }

  void clear() {
    for (auto& f : frames_) f.setZero();
    head_ = 0;
  }

  void push(const Frame& frame) {
    frames_[head_] = frame;
    head_ = (head_ + 1) % dims::kHistoryDepth;
  }

  /// i = 0 is the oldest frame, i = 9 the newest.
  const Frame& frame(int i) const {
    return frames_[static_cast<std::size_t>((head_ + i) % dims::kHistoryDepth)];
  }

  static constexpr int capacity() { return dims::kHistoryDepth; }
  int write_index() const { return head_; }

  /// Concatenation of the newest `window` frames, oldest first.
  Vector<Scalar> newest(int window = dims::kHistoryWindow) const {
    Vector<Scalar> out(window * dims::kPolicyObs);
    for (int k = 0; k < window; ++k) {
      out.segment(k * dims::kPolicyObs, dims::kPolicyObs) =
          frame(dims::kHistoryDepth - window + k);
    }
    return out;
  }

 private:
  std::array<Frame, dims::kHistoryDepth> frames_;
  int head_ = 0;
};

template <typename Scalar>
struct TwinViews {
  Vector<Scalar> old_slice;  // newest five frames before the update
  Vector<Scalar> new_slice;  // newest five frames after appending latest
};

/// The two consecutive-time-step views of the history. Does not mutate
/// the buffer; call push() afterwards to advance it.
template <typename Scalar>
TwinViews<Scalar> twin_views(const HistoryBuffer<Scalar>& before,
                             const typename HistoryBuffer<Scalar>::Frame& latest) {
  TwinViews<Scalar> v;
  v.old_slice = before.newest();
  v.new_slice.resize(dims::kHistorySlice);
  const int tail = (dims::kHistoryWindow - 1) * dims::kPolicyObs;
  v.new_slice.head(tail) = v.old_slice.tail(tail);
  v.new_slice.tail(dims::kPolicyObs) = latest;
  return v;
}

/// The MLP, latent and Barlow encoders sharing one ParamSet.
struct EncoderStack {
  nn::Mlp mlp_enc;
  nn::Mlp latent_enc;
  nn::Mlp barlow_enc;

  /// 175 -> 128 -> 64, 64 -> 32 -> 16, 16 -> 16 -> 64.
  static EncoderStack standard() {
    return with_sizes({dims::kHistorySlice, 128, dims::kMlpEncOut},
                      {dims::kMlpEncOut, 32, dims::kLatent}, {dims::kLatent, 16, dims::kBarlow});
  }

  static EncoderStack with_sizes(std::vector<int> mlp, std::vector<int> latent,
                                 std::vector<int> barlow) {
    EncoderStack s;
    s.mlp_enc = nn::Mlp{nn::MlpSpec::elu_hidden(std::move(mlp)), "mlp_enc"};
    s.latent_enc = nn::Mlp{nn::MlpSpec::elu_hidden(std::move(latent)), "latent_enc"};
    s.barlow_enc = nn::Mlp{nn::MlpSpec::elu_hidden(std::move(barlow)), "barlow_enc"};
    if (s.mlp_enc.spec.output_size() != s.latent_enc.spec.input_size() ||
        s.latent_enc.spec.output_size() != s.barlow_enc.spec.input_size()) {
      throw ConfigError("encoder chain widths do not line up");
    }
    return s;
  }

  int latent_size() const { return latent_enc.spec.output_size(); }

  template <typename Scalar>
  void declare(nn::ParamSet<Scalar>& params, bool with_latent = true) const {
    mlp_enc.declare(params);
    if (with_latent) {
      latent_enc.declare(params);
      barlow_enc.declare(params);
    }
  }

  template <typename Scalar, typename Rng>
  void init(nn::ParamSet<Scalar>& params, Rng& rng, bool with_latent = true) const {
    nn::init_mlp(mlp_enc, params, 1.0, rng);
    if (with_latent) {
      nn::init_mlp(latent_enc, params, 1.0, rng);
      nn::init_mlp(barlow_enc, params, 1.0, rng);
    }
  }

  /// Batched: slices (N x 175) -> z (N x 16).
  template <typename Scalar>
  nn::Var<Scalar> encode(nn::Tape<Scalar>& tape, nn::ParamSet<Scalar>& params,
                         nn::Var<Scalar> slices, bool trainable = true) const {
    return latent_enc.forward(tape, params, mlp_enc.forward(tape, params, slices, trainable),
                              trainable);
  }

  template <typename Scalar>
  nn::Var<Scalar> project(nn::Tape<Scalar>& tape, nn::ParamSet<Scalar>& params,
                          nn::Var<Scalar> z, bool trainable = true) const {
    return barlow_enc.forward(tape, params, z, trainable);
  }
};

/// z = latent_enc(mlp_enc(slice)).
template <typename Scalar>
Vector<Scalar> encode_latent(const EncoderStack& enc, nn::ParamSet<Scalar>& params,
                             const std::type_identity_t<Vector<Scalar>>& history_slice) {
  if (history_slice.size() != enc.mlp_enc.spec.input_size()) {
    throw ConfigError("encode_latent: slice length " + std::to_string(history_slice.size()) +
                      " does not match " + std::to_string(enc.mlp_enc.spec.input_size()));
  }
  return nn::mlp_forward(enc.latent_enc, params,
                         nn::mlp_forward(enc.mlp_enc, params, history_slice));
}

/// u = barlow_enc(z).
template <typename Scalar>
Vector<Scalar> project_barlow(const EncoderStack& enc, nn::ParamSet<Scalar>& params,
                              const std::type_identity_t<Vector<Scalar>>& z) {
  return nn::mlp_forward(enc.barlow_enc, params, z);
}

}  // namespace barlowwalk
