#pragma once

#include "barlowwalk/types.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace barlowwalk::nn {

/// One named parameter array with co-located gradient storage.
///
/// Rank-1 arrays of length n are stored as 1 x n rows so that biases
/// broadcast over batch rows without reshaping.
template <typename Scalar>
struct ParamEntry {
  std::string name;
  std::vector<std::uint32_t> dims;
  Matrix<Scalar> values;
  Matrix<Scalar> gradient;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

template <typename Scalar>
class ParamSet {
 public:
  using Entry = ParamEntry<Scalar>;

  /// Adds a zero-initialized entry. dims must have rank 1 or 2.
  Entry& add(std::string name, std::vector<std::uint32_t> dims) {
    if (dims.empty() || dims.size() > 2) {
      throw ConfigError("parameter '" + name + "' must have rank 1 or 2");
    }
    if (index_.count(name) != 0) {
      throw ConfigError("duplicate parameter name '" + name + "'");
    }
    const Eigen::Index rows = dims.size() == 1 ? 1 : dims[0];
    const Eigen::Index cols = dims.size() == 1 ? dims[0] : dims[1];
    Entry e;
    e.name = name;
    e.dims = std::move(dims);
    e.values = Matrix<Scalar>::Zero(rows, cols);
    e.gradient = Matrix<Scalar>::Zero(rows, cols);
    index_.emplace(name, entries_.size());
    entries_.push_back(std::move(e));
    return entries_.back();
  }

  bool contains(std::string_view name) const {
    return index_.count(std::string(name)) != 0;
  }

  Entry& at(std::string_view name) { return entries_[index_of(name)]; }
  const Entry& at(std::string_view name) const {
    return entries_[index_of(name)];
  }

  std::size_t index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) {
      throw ConfigError("unknown parameter '" + std::string(name) + "'");
    }
    return it->second;
  }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::size_t total_values() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.size();
    return n;
  }

  void zero_grad() {
    for (auto& e : entries_) e.gradient.setZero();
  }

  Scalar grad_norm() const {
    Scalar sq = 0;
    for (const auto& e : entries_) sq += e.gradient.squaredNorm();
    return std::sqrt(sq);
  }

  bool grads_finite() const {
    for (const auto& e : entries_) {
      if (!e.gradient.allFinite()) return false;
    }
    return true;
  }

  /// Same names and shapes in the same order.
  bool same_layout(const ParamSet& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].name != other.entries_[i].name ||
          entries_[i].dims != other.entries_[i].dims) {
        return false;
      }
    }
    return true;
  }

  template <typename Other>
  ParamSet<Other> cast() const {
    ParamSet<Other> out;
    for (const auto& e : entries_) {
      auto& o = out.add(e.name, e.dims);
      o.values = e.values.template cast<Other>();
    }
    return out;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace barlowwalk::nn
