#pragma once

// Minimal reverse-mode differentiation over dense Eigen matrices.
//
// Every value is a 2-D matrix laid out as (batch rows x feature columns).
// Operations record their result together with a closure that pushes the
// upstream gradient to their inputs. Parameters bound with
// Tape::parameter() receive their gradient in the owning ParamSet when
// backward() runs, which accumulates (never overwrites).

#include "barlowwalk/nn/param_set.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace barlowwalk::nn {

template <typename Scalar>
class Tape;

template <typename Scalar>
struct Var {
  Tape<Scalar>* tape = nullptr;
  int id = -1;

  const Matrix<Scalar>& value() const { return tape->value(*this); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool valid() const { return tape != nullptr && id >= 0; }
};

template <typename Scalar>
class Tape {
 public:
  using Mat = Matrix<Scalar>;
  using BackwardFn = std::function<void(Tape&, const Mat&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Scalar> constant(Mat value) {
    return record(std::move(value), false, nullptr);
  }

  /// Leaf whose gradient is kept on the tape (see grad()).
  Var<Scalar> variable(Mat value) {
    return record(std::move(value), true, nullptr);
  }

  /// Leaf bound to a ParamSet entry. When trainable is false the entry's
  /// current values are used as a constant.
  Var<Scalar> parameter(ParamSet<Scalar>& set, std::string_view name,
                        bool trainable = true) {
    auto& entry = set.at(name);
    Var<Scalar> v = record(entry.values, trainable, nullptr);
    if (trainable) bound_.push_back({v.id, &entry});
    return v;
  }

  Var<Scalar> record(Mat value, bool requires_grad, BackwardFn fn) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var<Scalar>{this, static_cast<int>(nodes_.size()) - 1};
  }

  const Mat& value(Var<Scalar> v) const { return node(v).value; }
  bool requires_grad(Var<Scalar> v) const { return node(v).requires_grad; }

  /// Gradient of the last backward() with respect to v; empty if v did not
  /// take part in the loss.
  const Mat& grad(Var<Scalar> v) const { return node(v).grad; }

  template <typename Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  /// Back-propagates from a 1x1 loss. Node gradients are recomputed from
  /// scratch; parameter gradients accumulate into their ParamSet entries.
  void backward(Var<Scalar> loss) {
    if (nodes_.empty() || loss.tape != this || loss.id < 0 ||
        loss.id >= static_cast<int>(nodes_.size())) {
      throw UsageError("backward() called without a recorded forward pass");
    }
    if (value(loss).rows() != 1 || value(loss).cols() != 1) {
      throw UsageError("backward() requires a scalar (1x1) loss");
    }
    for (auto& n : nodes_) n.grad.resize(0, 0);
    if (!nodes_[loss.id].requires_grad) return;
    nodes_[loss.id].grad = Mat::Ones(1, 1);
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.backward && n.grad.size() != 0) {
        // Copy: the closure may push into lower ids only, but keep the
        // upstream gradient independent of vector growth.
        const Mat g = n.grad;
        n.backward(*this, g);
      }
    }
    for (auto& [id, entry] : bound_) {
      const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
      if (g.size() != 0) entry->gradient += g;
    }
  }

  std::size_t size() const { return nodes_.size(); }

  void clear() {
    nodes_.clear();
    bound_.clear();
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  const Node& node(Var<Scalar> v) const {
    if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
      throw UsageError("variable does not belong to this tape");
    }
    return nodes_[static_cast<std::size_t>(v.id)];
  }

  std::vector<Node> nodes_;
  std::vector<std::pair<int, ParamEntry<Scalar>*>> bound_;
};

namespace detail {
template <typename Scalar>
bool any_grad(std::initializer_list<Var<Scalar>> vs) {
  for (const auto& v : vs) {
    if (v.tape->requires_grad(v)) return true;
  }
  return false;
}

template <typename Scalar>
void check_same_shape(Var<Scalar> a, Var<Scalar> b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError(std::string(op) + ": shape mismatch (" +
                      std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                      " vs " + std::to_string(b.rows()) + "x" +
                      std::to_string(b.cols()) + ")");
  }
}
}  // namespace detail

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  if (a.cols() != b.rows()) {
    throw ConfigError("matmul: inner dimension mismatch (" +
                      std::to_string(a.cols()) + " vs " +
                      std::to_string(b.rows()) + ")");
  }
  Tape<Scalar>& t = *a.tape;
  const int ia = a.id, ib = b.id;
  Matrix<Scalar> out = a.value() * b.value();
  return t.record(std::move(out), detail::any_grad({a, b}),
                  [ia, ib](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    const Var<Scalar> va{&t, ia}, vb{&t, ib};
                    if (t.requires_grad(va)) {
                      t.accumulate(ia, g * vb.value().transpose());
                    }
                    if (t.requires_grad(vb)) {
                      t.accumulate(ib, va.value().transpose() * g);
                    }
                  });
}

/// x (N x M) + b (1 x M) broadcast over rows.
template <typename Scalar>
Var<Scalar> add_row(Var<Scalar> x, Var<Scalar> b) {
  if (b.rows() != 1 || b.cols() != x.cols()) {
    throw ConfigError("add_row: bias must be 1x" + std::to_string(x.cols()));
  }
  Tape<Scalar>& t = *x.tape;
  const int ix = x.id, ib = b.id;
  Matrix<Scalar> out = x.value().rowwise() + b.value().row(0);
  return t.record(std::move(out), detail::any_grad({x, b}),
                  [ix, ib](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    t.accumulate(ix, g);
                    t.accumulate(ib, g.colwise().sum());
                  });
}

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  detail::check_same_shape(a, b, "add");
  Tape<Scalar>& t = *a.tape;
  const int ia = a.id, ib = b.id;
  Matrix<Scalar> out = a.value() + b.value();
  return t.record(std::move(out), detail::any_grad({a, b}),
                  [ia, ib](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    t.accumulate(ia, g);
                    t.accumulate(ib, g);
                  });
}

template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) {
  detail::check_same_shape(a, b, "sub");
  Tape<Scalar>& t = *a.tape;
  const int ia = a.id, ib = b.id;
  Matrix<Scalar> out = a.value() - b.value();
  return t.record(std::move(out), detail::any_grad({a, b}),
                  [ia, ib](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    t.accumulate(ia, g);
                    t.accumulate(ib, -g);
                  });
}

/// Element-wise product.
template <typename Scalar>
Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) {
  detail::check_same_shape(a, b, "mul");
  Tape<Scalar>& t = *a.tape;
  const int ia = a.id, ib = b.id;
  Matrix<Scalar> out = a.value().cwiseProduct(b.value());
  return t.record(std::move(out), detail::any_grad({a, b}),
                  [ia, ib](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    const Var<Scalar> va{&t, ia}, vb{&t, ib};
                    if (t.requires_grad(va)) {
                      t.accumulate(ia, g.cwiseProduct(vb.value()));
                    }
                    if (t.requires_grad(vb)) {
                      t.accumulate(ib, g.cwiseProduct(va.value()));
                    }
                  });
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> x, Scalar s) {
  Tape<Scalar>& t = *x.tape;
  const int ix = x.id;
  Matrix<Scalar> out = x.value() * s;
  return t.record(std::move(out), detail::any_grad({x}),
                  [ix, s](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    t.accumulate(ix, g * s);
                  });
}

template <typename Scalar>
Var<Scalar> add_scalar(Var<Scalar> x, Scalar s) {
  Tape<Scalar>& t = *x.tape;
  const int ix = x.id;
  Matrix<Scalar> out = x.value().array() + s;
  return t.record(std::move(out), detail::any_grad({x}),
                  [ix](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    t.accumulate(ix, g);
                  });
}

template <typename Scalar>
Var<Scalar> elu(Var<Scalar> x) {
  Tape<Scalar>& t = *x.tape;
  const int ix = x.id;
  Matrix<Scalar> out = x.value().unaryExpr([](Scalar v) {
    return v > Scalar(0) ? v : std::expm1(v);
  });
  return t.record(std::move(out), detail::any_grad({x}),
                  [ix](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    const Matrix<Scalar>& xv = t.value(Var<Scalar>{&t, ix});
                    Matrix<Scalar> d = xv.unaryExpr([](Scalar v) {
                      return v > Scalar(0) ? Scalar(1) : std::exp(v);
                    });
                    t.accumulate(ix, g.cwiseProduct(d));
                  });
}

template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> x) {
  Tape<Scalar>& t = *x.tape;
  const int ix = x.id;
  Matrix<Scalar> out = x.value().array().tanh();
  const int iy = static_cast<int>(t.size());
  return t.record(std::move(out), detail::any_grad({x}),
                  [ix, iy](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    const Matrix<Scalar>& y = t.value(Var<Scalar>{&t, iy});
                    t.accumulate(ix, (g.array() * (Scalar(1) - y.array().square()))
                                         .matrix());
                  });
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> x) {
  Tape<Scalar>& t = *x.tape;
  const int ix = x.id;
  Matrix<Scalar> out = x.value().unaryExpr(
      [](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
  const int iy = static_cast<int>(t.size());
  return t.record(std::move(out), detail::any_grad({x}),
                  [ix, iy](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    const Matrix<Scalar>& y = t.value(Var<Scalar>{&t, iy});
                    t.accumulate(ix, (g.array() * y.array() * (Scalar(1) - y.array()))
                                         .matrix());
                  });
}

template <typename Scalar>
Var<Scalar> exp(Var<Scalar> x) {
  Tape<Scalar>& t = *x.tape;
  const int ix = x.id;
  Matrix<Scalar> out = x.value().array().exp();
  const int iy = static_cast<int>(t.size());
  return t.record(std::move(out), detail::any_grad({x}),
                  [ix, iy](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    const Matrix<Scalar>& y = t.value(Var<Scalar>{&t, iy});
                    t.accumulate(ix, g.cwiseProduct(y));
                  });
}

template <typename Scalar>
Var<Scalar> square(Var<Scalar> x) {
  Tape<Scalar>& t = *x.tape;
  const int ix = x.id;
  Matrix<Scalar> out = x.value().array().square();
  return t.record(std::move(out), detail::any_grad({x}),
                  [ix](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    const Matrix<Scalar>& xv = t.value(Var<Scalar>{&t, ix});
                    t.accumulate(ix, (g.array() * xv.array() * Scalar(2)).matrix());
                  });
}

/// Gradient passes only where lo < x < hi.
template <typename Scalar>
Var<Scalar> clamp(Var<Scalar> x, Scalar lo, Scalar hi) {
  Tape<Scalar>& t = *x.tape;
  const int ix = x.id;
  Matrix<Scalar> out = x.value().cwiseMax(lo).cwiseMin(hi);
  return t.record(std::move(out), detail::any_grad({x}),
                  [ix, lo, hi](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    const Matrix<Scalar>& xv = t.value(Var<Scalar>{&t, ix});
                    Matrix<Scalar> m = g;
                    for (Eigen::Index i = 0; i < m.size(); ++i) {
                      if (!(xv(i) > lo && xv(i) < hi)) m(i) = Scalar(0);
                    }
                    t.accumulate(ix, m);
                  });
}

template <typename Scalar>
Var<Scalar> sum(Var<Scalar> x) {
  Tape<Scalar>& t = *x.tape;
  const int ix = x.id;
  Matrix<Scalar> out(1, 1);
  out(0, 0) = x.value().sum();
  const Eigen::Index r = x.rows(), c = x.cols();
  return t.record(std::move(out), detail::any_grad({x}),
                  [ix, r, c](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    t.accumulate(ix, Matrix<Scalar>::Constant(r, c, g(0, 0)));
                  });
}

template <typename Scalar>
Var<Scalar> mean(Var<Scalar> x) {
  const auto n = static_cast<Scalar>(x.value().size());
  return scale(sum(x), Scalar(1) / n);
}

/// Columns [start, start + count).
template <typename Scalar>
Var<Scalar> col_slice(Var<Scalar> x, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > x.cols()) {
    throw ConfigError("col_slice out of range");
  }
  Tape<Scalar>& t = *x.tape;
  const int ix = x.id;
  const Eigen::Index r = x.rows(), c = x.cols();
  Matrix<Scalar> out = x.value().middleCols(start, count);
  return t.record(std::move(out), detail::any_grad({x}),
                  [ix, r, c, start, count](Tape<Scalar>& t,
                                           const Matrix<Scalar>& g) {
                    Matrix<Scalar> full = Matrix<Scalar>::Zero(r, c);
                    full.middleCols(start, count) = g;
                    t.accumulate(ix, full);
                  });
}

/// Rows [start, start + count).
template <typename Scalar>
Var<Scalar> row_slice(Var<Scalar> x, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > x.rows()) {
    throw ConfigError("row_slice out of range");
  }
  Tape<Scalar>& t = *x.tape;
  const int ix = x.id;
  const Eigen::Index r = x.rows(), c = x.cols();
  Matrix<Scalar> out = x.value().middleRows(start, count);
  return t.record(std::move(out), detail::any_grad({x}),
                  [ix, r, c, start, count](Tape<Scalar>& t,
                                           const Matrix<Scalar>& g) {
                    Matrix<Scalar> full = Matrix<Scalar>::Zero(r, c);
                    full.middleRows(start, count) = g;
                    t.accumulate(ix, full);
                  });
}

/// Column-wise concatenation [a | b].
template <typename Scalar>
Var<Scalar> hcat(Var<Scalar> a, Var<Scalar> b) {
  if (a.rows() != b.rows()) throw ConfigError("hcat: row count mismatch");
  Tape<Scalar>& t = *a.tape;
  const int ia = a.id, ib = b.id;
  const Eigen::Index ca = a.cols(), cb = b.cols();
  Matrix<Scalar> out(a.rows(), ca + cb);
  out << a.value(), b.value();
  return t.record(std::move(out), detail::any_grad({a, b}),
                  [ia, ib, ca, cb](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    t.accumulate(ia, g.leftCols(ca));
                    t.accumulate(ib, g.rightCols(cb));
                  });
}

/// Row-wise concatenation of equally wide blocks.
template <typename Scalar>
Var<Scalar> vcat(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw ConfigError("vcat: no inputs");
  Tape<Scalar>& t = *parts.front().tape;
  const Eigen::Index c = parts.front().cols();
  Eigen::Index r = 0;
  bool needs = false;
  std::vector<std::pair<int, Eigen::Index>> spans;
  for (const auto& p : parts) {
    if (p.cols() != c) throw ConfigError("vcat: column count mismatch");
    spans.push_back({p.id, p.rows()});
    r += p.rows();
    needs = needs || t.requires_grad(p);
  }
  Matrix<Scalar> out(r, c);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return t.record(std::move(out), needs,
                  [spans](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    Eigen::Index at = 0;
                    for (const auto& [id, n] : spans) {
                      t.accumulate(id, g.middleRows(at, n));
                      at += n;
                    }
                  });
}

/// Multiplies row i of x by the constant weights(i).
template <typename Scalar>
Var<Scalar> scale_rows(Var<Scalar> x, const Vector<Scalar>& weights) {
  if (weights.size() != x.rows()) throw ConfigError("scale_rows: size mismatch");
  Tape<Scalar>& t = *x.tape;
  const int ix = x.id;
  Matrix<Scalar> out = weights.asDiagonal() * x.value();
  return t.record(std::move(out), detail::any_grad({x}),
                  [ix, weights](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    t.accumulate(ix, weights.asDiagonal() * g);
                  });
}

/// Repeats a 1 x M row n times.
template <typename Scalar>
Var<Scalar> broadcast_rows(Var<Scalar> row, Eigen::Index n) {
  if (row.rows() != 1) throw ConfigError("broadcast_rows: expects a single row");
  Tape<Scalar>& t = *row.tape;
  const int ir = row.id;
  Matrix<Scalar> out = row.value().replicate(n, 1);
  return t.record(std::move(out), detail::any_grad({row}),
                  [ir](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                    t.accumulate(ir, g.colwise().sum());
                  });
}

/// Same value, no gradient path.
template <typename Scalar>
Var<Scalar> detach(Var<Scalar> x) {
  return x.tape->constant(x.value());
}

}  // namespace barlowwalk::nn
