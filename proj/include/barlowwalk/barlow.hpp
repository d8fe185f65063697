#pragma once

// Cross-correlation of the two projected views and the redundancy-reduction
// loss built on it.
//
//   C_ij = sum_b u'_bi u''_bj / (||u'_:i|| ||u''_:j||)
//   L    = sum_i (C_ii - 1)^2 + lambda sum_{i != j} C_ij^2
//
// Columns are L2-normalized without mean-centering unless `center` is set,
// in which case each column is centered first (the batch-standardized
// variant).

#include "barlowwalk/nn/tape.hpp"

#include <cmath>

namespace barlowwalk {

inline constexpr double kCrossCorrEps = 1e-12;

template <typename Scalar>
struct CrossCorr {
  Matrix<Scalar> C;
  bool zero_norm_guarded = false;  // some column norm product fell below eps
};

template <typename Scalar>
struct CrossCorrDiagnostics {
  Scalar diag_mean = 0;
  Scalar offdiag_rms = 0;
};

namespace detail {

template <typename Scalar>
struct CrossCorrParts {
  Matrix<Scalar> a_centered;
  Matrix<Scalar> b_centered;
  RowVector<Scalar> a_norm;
  RowVector<Scalar> b_norm;
  Matrix<Scalar> denom;
  Matrix<Scalar> C;
  bool guarded = false;
};

template <typename Scalar>
CrossCorrParts<Scalar> cross_corr_parts(const Matrix<Scalar>& u_old, const Matrix<Scalar>& u_new,
                                        bool center) {
  if (u_old.rows() != u_new.rows() || u_old.cols() != u_new.cols()) {
    throw ConfigError("cross_corr: both views must have the same shape");
  }
  if (u_old.rows() < 2) throw ConfigError("cross_corr: needs at least two samples");
  CrossCorrParts<Scalar> p;
  p.a_centered = u_old;
  p.b_centered = u_new;
  if (center) {
    p.a_centered.rowwise() -= u_old.colwise().mean();
    p.b_centered.rowwise() -= u_new.colwise().mean();
  }
  p.a_norm = p.a_centered.colwise().norm();
  p.b_norm = p.b_centered.colwise().norm();
  p.denom = p.a_norm.transpose() * p.b_norm;
  const Scalar eps = static_cast<Scalar>(kCrossCorrEps);
  for (Eigen::Index i = 0; i < p.denom.size(); ++i) {
    if (p.denom(i) < eps) {
      p.denom(i) = eps;
      p.guarded = true;
    }
  }
  p.C = (p.a_centered.transpose() * p.b_centered).cwiseQuotient(p.denom);
  return p;
}

}  // namespace detail

/// U_old, U_new: (N x d), N >= 2.
template <typename Scalar>
CrossCorr<Scalar> cross_corr(const Matrix<Scalar>& u_old, const Matrix<Scalar>& u_new,
                             bool center = false) {
  auto p = detail::cross_corr_parts(u_old, u_new, center);
  return CrossCorr<Scalar>{std::move(p.C), p.guarded};
}

template <typename Scalar>
Scalar barlow_loss(const Matrix<Scalar>& C, Scalar lambda) {
  if (C.rows() != C.cols()) throw ConfigError("barlow_loss: C must be square");
  Scalar on = 0, off = 0;
  for (Eigen::Index j = 0; j < C.cols(); ++j) {
    for (Eigen::Index i = 0; i < C.rows(); ++i) {
      if (i == j) {
        on += (C(i, i) - Scalar(1)) * (C(i, i) - Scalar(1));
      } else {
        off += C(i, j) * C(i, j);
      }
    }
  }
  return on + lambda * off;
}

template <typename Scalar>
Scalar barlow_loss(const CrossCorr<Scalar>& c, Scalar lambda) {
  return barlow_loss(c.C, lambda);
}

template <typename Scalar>
CrossCorrDiagnostics<Scalar> diagnostics(const Matrix<Scalar>& C) {
  CrossCorrDiagnostics<Scalar> d;
  const Eigen::Index n = C.rows();
  d.diag_mean = C.diagonal().mean();
  if (n > 1) {
    const Scalar off_sq = C.squaredNorm() - C.diagonal().squaredNorm();
    d.offdiag_rms = std::sqrt(std::max(Scalar(0), off_sq) / Scalar(n * (n - 1)));
  }
  return d;
}

/// Differentiable cross-correlation. `guarded` (optional) reports whether
/// the epsilon guard was used.
template <typename Scalar>
nn::Var<Scalar> cross_corr(nn::Var<Scalar> u_old, nn::Var<Scalar> u_new, bool center = false,
                           bool* guarded = nullptr) {
  auto p = detail::cross_corr_parts(u_old.value(), u_new.value(), center);
  if (guarded) *guarded = p.guarded;
  nn::Tape<Scalar>& t = *u_old.tape;
  const int ia = u_old.id, ib = u_new.id;
  Matrix<Scalar> C = p.C;
  return t.record(
      std::move(C), nn::detail::any_grad({u_old, u_new}),
      [ia, ib, p = std::move(p), center](nn::Tape<Scalar>& t, const Matrix<Scalar>& G) {
        const Scalar eps = static_cast<Scalar>(kCrossCorrEps);
        // C = S / (a b^T) with S = A^T B.
        const Matrix<Scalar> H = G.cwiseQuotient(p.denom);
        const Matrix<Scalar> GC = G.cwiseProduct(p.C);
        // dL/da_i = -sum_j G_ij C_ij / a_i, similarly for b. Guarded
        // denominators are treated as constants.
        RowVector<Scalar> ka(p.a_norm.size()), kb(p.b_norm.size());
        for (Eigen::Index i = 0; i < ka.size(); ++i) {
          ka(i) = 0;
          if (p.a_norm(i) > Scalar(0)) {
            Scalar acc = 0;
            for (Eigen::Index j = 0; j < kb.size(); ++j) {
              if (p.a_norm(i) * p.b_norm(j) >= eps) acc += GC(i, j);
            }
            ka(i) = -acc / (p.a_norm(i) * p.a_norm(i));
          }
        }
        for (Eigen::Index j = 0; j < kb.size(); ++j) {
          kb(j) = 0;
          if (p.b_norm(j) > Scalar(0)) {
            Scalar acc = 0;
            for (Eigen::Index i = 0; i < ka.size(); ++i) {
              if (p.a_norm(i) * p.b_norm(j) >= eps) acc += GC(i, j);
            }
            kb(j) = -acc / (p.b_norm(j) * p.b_norm(j));
          }
        }
        // d a_i / d A_bi = A_bi / a_i, hence the division by a_i^2 above.
        Matrix<Scalar> dA = p.b_centered * H.transpose();
        dA += (p.a_centered.array().rowwise() * ka.array()).matrix();
        Matrix<Scalar> dB = p.a_centered * H;
        dB += (p.b_centered.array().rowwise() * kb.array()).matrix();
        if (center) {
          dA.rowwise() -= dA.colwise().mean();
          dB.rowwise() -= dB.colwise().mean();
        }
        t.accumulate(ia, dA);
        t.accumulate(ib, dB);
      });
}

/// Differentiable loss on a (d x d) correlation node -> (1 x 1).
template <typename Scalar>
nn::Var<Scalar> barlow_loss(nn::Var<Scalar> C, Scalar lambda) {
  nn::Tape<Scalar>& t = *C.tape;
  Matrix<Scalar> out(1, 1);
  out(0, 0) = barlow_loss(C.value(), lambda);
  const int ic = C.id;
  return t.record(std::move(out), nn::detail::any_grad({C}),
                  [ic, lambda](nn::Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    const Matrix<Scalar>& c = t.value(nn::Var<Scalar>{&t, ic});
                    Matrix<Scalar> d = Scalar(2) * lambda * c;
                    d.diagonal() = Scalar(2) * (c.diagonal().array() - Scalar(1));
                    t.accumulate(ic, g(0, 0) * d);
                  });
}

}  // namespace barlowwalk
