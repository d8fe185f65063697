#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace barlowwalk {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

// Wiring of the observation / network pipeline.
namespace dims {
inline constexpr int kFullObs = 38;      // 3+3+3+3+8+8+8+2
inline constexpr int kPolicyObs = 35;    // full minus base linear velocity
inline constexpr int kHistoryDepth = 10;
inline constexpr int kHistoryWindow = 5;
inline constexpr int kHistorySlice = kHistoryWindow * kPolicyObs;  // 175
inline constexpr int kMlpEncOut = 64;
inline constexpr int kLatent = 16;
inline constexpr int kBarlow = 64;
inline constexpr int kPolicyIn = kPolicyObs + kLatent;  // 51
inline constexpr int kAction = 8;
inline constexpr int kScan = 187;  // 11 x 17
inline constexpr int kCriticIn = kFullObs + kScan;  // 225
inline constexpr int kGruHidden = 64;
inline constexpr int kHeadHidden = 32;
inline constexpr int kJoints = 8;
inline constexpr int kFeet = 2;

static_assert(3 + 3 + 3 + 3 + 8 + 8 + 8 + 2 == kFullObs);
static_assert(kHistorySlice == 175);
static_assert(kPolicyIn == 51);
static_assert(kCriticIn == 225);
}  // namespace dims

/// Invalid configuration, dimension mismatch or malformed input file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// API misuse (e.g. backward on an empty tape).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Non-finite loss/state that cannot be recovered locally.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace barlowwalk
