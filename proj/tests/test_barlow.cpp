#include "doctest.h"

#include "barlowwalk/barlow.hpp"
#include "barlowwalk/nn/fd_check.hpp"

#include <cmath>
#include <random>

using namespace barlowwalk;

using Md = Matrix<double>;

namespace {

Md random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Md m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

// Naive double loop over the defining sums.
Md naive_cross_corr(const Md& a, const Md& b) {
  const Eigen::Index n = a.rows(), d = a.cols();
  Md c(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      double s = 0, na = 0, nb = 0;
      for (Eigen::Index k = 0; k < n; ++k) {
        s += a(k, i) * b(k, j);
        na += a(k, i) * a(k, i);
        nb += b(k, j) * b(k, j);
      }
      c(i, j) = s / (std::sqrt(na) * std::sqrt(nb));
    }
  }
  return c;
}

double naive_loss(const Md& c, double lambda) {
  double l = 0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      l += i == j ? (c(i, j) - 1) * (c(i, j) - 1) : lambda * c(i, j) * c(i, j);
    }
  }
  return l;
}

}  // namespace

TEST_CASE("orthonormal batch gives the identity") {
  const Md u = Md::Identity(2, 2);
  const auto c = cross_corr<double>(u, u);
  CHECK((c.C - Md::Identity(2, 2)).norm() == 0.0);
  CHECK_FALSE(c.zero_norm_guarded);
}

TEST_CASE("rank-one batch gives the all-ones matrix") {
  Md u(2, 2);
  u << 1, 1, -1, -1;
  const auto c = cross_corr<double>(u, u);
  CHECK((c.C - Md::Ones(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(barlow_loss<double>(c, 5e-3) == doctest::Approx(0.01).epsilon(1e-14));
}

TEST_CASE("cross_corr matches the naive oracle") {
  std::mt19937_64 rng(42);
  for (int n : {2, 8, 64}) {
    for (int d : {2, 16, 64}) {
      for (int rep = 0; rep < 3; ++rep) {
        const Md a = random_matrix(n, d, rng);
        const Md b = random_matrix(n, d, rng);
        const auto c = cross_corr<double>(a, b);
        const Md ref = naive_cross_corr(a, b);
        CHECK((c.C - ref).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(c.C.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
        CHECK(barlow_loss<double>(c, 5e-3) == doctest::Approx(naive_loss(ref, 5e-3)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("loss values on hand-built matrices") {
  CHECK(barlow_loss<double>(Md::Identity(64, 64), 5e-3) == 0.0);
  Md c = Md::Identity(2, 2);
  c(0, 0) = 0;
  CHECK(barlow_loss<double>(c, 5e-3) == 1.0);
  Md ones = Md::Ones(2, 2);
  CHECK(barlow_loss<double>(ones, 5e-3) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(barlow_loss<double>(ones, 0.0) == 0.0);
}

TEST_CASE("loss is zero only at the identity") {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 20; ++k) {
    Md c = Md::Identity(4, 4) + 1e-3 * random_matrix(4, 4, rng);
    CHECK(barlow_loss<double>(c, 5e-3) > 0.0);
  }
}

TEST_CASE("permuting features permutes C and keeps the loss") {
  std::mt19937_64 rng(3);
  const Md a = random_matrix(16, 6, rng);
  const Md b = random_matrix(16, 6, rng);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
  perm.indices() << 3, 0, 5, 1, 4, 2;
  const auto c = cross_corr<double>(a, b);
  const auto cp = cross_corr<double>(a * perm, b * perm);
  CHECK((cp.C - perm.transpose() * c.C * perm).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(barlow_loss<double>(cp, 5e-3) == doctest::Approx(barlow_loss<double>(c, 5e-3)));
}

TEST_CASE("positive column scaling leaves C unchanged") {
  std::mt19937_64 rng(4);
  const Md a = random_matrix(10, 5, rng);
  const Md b = random_matrix(10, 5, rng);
  Eigen::VectorXd s(5);
  s << 0.1, 2.0, 7.5, 1.0, 3.3;
  const auto c = cross_corr<double>(a, b);
  const auto cs = cross_corr<double>(a * s.asDiagonal(), b * s.asDiagonal());
  CHECK((cs.C - c.C).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero-norm column is guarded and flagged") {
  Md a(3, 2);
  a << 1, 0, 2, 0, 3, 0;
  const auto c = cross_corr<double>(a, a);
  CHECK(c.zero_norm_guarded);
  CHECK(c.C.allFinite());
  CHECK(c.C(1, 1) == 0.0);
  CHECK_THROWS_AS(cross_corr<double>(Md::Ones(1, 3), Md::Ones(1, 3)), ConfigError);
  CHECK_THROWS_AS(cross_corr<double>(Md::Ones(3, 3), Md::Ones(3, 2)), ConfigError);
}

TEST_CASE("centered variant matches the Pearson correlation") {
  std::mt19937_64 rng(6);
  const Md a = random_matrix(12, 3, rng).array() + 2.0;
  const Md b = random_matrix(12, 3, rng).array() - 1.0;
  const auto c = cross_corr<double>(a, b, true);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const Eigen::ArrayXd x = a.col(i).array() - a.col(i).mean();
      const Eigen::ArrayXd y = b.col(j).array() - b.col(j).mean();
      const double r = (x * y).sum() / std::sqrt((x * x).sum() * (y * y).sum());
      CHECK(c.C(i, j) == doctest::Approx(r).epsilon(1e-12));
    }
  }
}

TEST_CASE("diagnostics of C") {
  Md c(2, 2);
  c << 0.5, 0.3, -0.4, 1.0;
  const auto d = diagnostics<double>(c);
  CHECK(d.diag_mean == doctest::Approx(0.75));
  CHECK(d.offdiag_rms == doctest::Approx(std::sqrt((0.09 + 0.16) / 2.0)));
}

TEST_CASE("loss gradient through cross_corr matches central differences") {
  for (bool center : {false, true}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      std::mt19937_64 rng(seed);
      nn::ParamSet<double> p;
      p.add("u_old", {7, 4}).values = random_matrix(7, 4, rng);
      p.add("u_new", {7, 4}).values = random_matrix(7, 4, rng);
      nn::LossBuilder<double> f = [center](nn::Tape<double>& t, nn::ParamSet<double>& ps) {
        auto c = cross_corr(t.parameter(ps, "u_old"), t.parameter(ps, "u_new"), center);
        return barlow_loss(c, 0.3);  // larger lambda exercises the off-diagonal path
      };
      const auto r = nn::fd_check(f, p, 1e-6, 1e-6);
      INFO("center=" << center << " seed=" << seed << " " << r.diagnostic);
      CHECK(r.passed);
    }
  }
}

TEST_CASE("tape cross_corr agrees with the plain version") {
  std::mt19937_64 rng(10);
  const Md a = random_matrix(9, 5, rng);
  const Md b = random_matrix(9, 5, rng);
  nn::Tape<double> t;
  bool guarded = true;
  auto c = cross_corr(t.constant(a), t.constant(b), false, &guarded);
  CHECK_FALSE(guarded);
  CHECK((c.value() - cross_corr<double>(a, b).C).norm() == 0.0);
}
