#include "doctest.h"

#include "barlowwalk/ppo.hpp"

#include <cmath>
#include <random>

using namespace barlowwalk;

using Vd = Vector<double>;
using Md = Matrix<double>;

namespace {

// Direct sum over future residuals, truncated at the first done.
Vd brute_force_gae(const Vd& r, const Vd& v, const std::vector<bool>& done, double g, double l) {
  const Eigen::Index T = r.size();
  Vd out(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    double acc = 0, w = 1;
    for (Eigen::Index k = t; k < T; ++k) {
      const double nd = done[static_cast<std::size_t>(k)] ? 0.0 : 1.0;
      const double delta = r(k) + g * nd * v(k + 1) - v(k);
      acc += w * delta;
      if (done[static_cast<std::size_t>(k)]) break;
      w *= g * l;
    }
    out(t) = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("GAE hand example") {
  Vd r(2), v(3);
  r << 1, 1;
  v << 0, 0, 0;
  const auto a = compute_gae<double>(r, v, {false, false}, 0.99, 0.95);
  CHECK(a.advantages(0) == doctest::Approx(1.0 + 0.99 * 0.95).epsilon(1e-15));
  CHECK(a.advantages(0) == doctest::Approx(1.9405));
  CHECK(a.advantages(1) == 1.0);
}

TEST_CASE("GAE degenerate discount and termination") {
  Vd r(3), v(4);
  r << 0.5, -1.0, 2.0;
  v << 0.2, 0.4, -0.3, 9.0;
  const auto a = compute_gae<double>(r, v, {false, false, false}, 0.0, 0.95);
  CHECK((a.advantages - (r - v.head(3))).norm() == 0.0);
  CHECK((a.returns - r).cwiseAbs().maxCoeff() < 1e-15);

  const auto b = compute_gae<double>(r, v, {true, false, false}, 0.99, 0.95);
  CHECK(b.advantages(0) == r(0) - v(0));
  CHECK_THROWS_AS(compute_gae<double>(r, v.head(3), {false, false, false}, 0.9, 0.9),
                  ConfigError);
}

TEST_CASE("GAE matches the brute-force sum on random sequences") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n;
  std::bernoulli_distribution coin(0.1);
  for (int rep = 0; rep < 100; ++rep) {
    Vd r(20), v(21);
    std::vector<bool> d(20);
    for (int t = 0; t < 20; ++t) {
      r(t) = n(rng);
      d[static_cast<std::size_t>(t)] = coin(rng);
    }
    for (int t = 0; t < 21; ++t) v(t) = n(rng);
    const auto a = compute_gae<double>(r, v, d, 0.99, 0.95);
    const Vd ref = brute_force_gae(r, v, d, 0.99, 0.95);
    CHECK((a.advantages - ref).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((a.returns - (ref + v.head(20))).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("clipped surrogate arithmetic") {
  CHECK(ppo_surrogate(0.0, 0.0, 2.0, 0.2) == 2.0);
  CHECK(ppo_surrogate(std::log(1.5), 0.0, 1.0, 0.2) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(ppo_surrogate(std::log(0.5), 0.0, -1.0, 0.2) == doctest::Approx(-0.8).epsilon(1e-15));
}

TEST_CASE("gradient is exactly zero in the clipped region") {
  // Rows: (ratio, advantage) in and out of the clipped region.
  const std::vector<std::pair<double, double>> cases = {
      {1.5, 1.0}, {0.5, -1.0}, {1.3, 2.0},  // clipped
      {1.1, 1.0}, {0.5, 1.0},  {1.5, -1.0}, {0.9, -0.5}};
  const std::vector<bool> clipped = {true, true, true, false, false, false, false};
  Vd lp_old = Vd::Zero(7), adv(7);
  Md lp_new(7, 1);
  for (int i = 0; i < 7; ++i) {
    lp_new(i, 0) = std::log(cases[static_cast<std::size_t>(i)].first);
    adv(i) = cases[static_cast<std::size_t>(i)].second;
  }
  nn::Tape<double> t;
  auto x = t.variable(lp_new);
  auto s = ppo_surrogate(x, lp_old, adv, 0.2);
  t.backward(nn::sum(s));
  const Md& g = t.grad(x);
  for (int i = 0; i < 7; ++i) {
    const double ratio = cases[static_cast<std::size_t>(i)].first;
    CHECK(s.value()(i, 0) ==
          doctest::Approx(ppo_surrogate(lp_new(i, 0), 0.0, adv(i), 0.2)).epsilon(1e-15));
    if (clipped[static_cast<std::size_t>(i)]) {
      CHECK(g(i, 0) == 0.0);
    } else {
      CHECK(g(i, 0) == doctest::Approx(ratio * adv(i)).epsilon(1e-14));
    }
  }
}

TEST_CASE("adaptive learning-rate rule") {
  CHECK(adapt_lr(1e-3, 0.03, 0.01) == doctest::Approx(1e-3 / 1.5).epsilon(1e-15));
  CHECK(adapt_lr(1e-3, 0.03, 0.01) == doctest::Approx(6.667e-4).epsilon(1e-4));
  CHECK(adapt_lr(1e-3, 0.004, 0.01) == doctest::Approx(1.5e-3).epsilon(1e-15));
  CHECK(adapt_lr(1e-2, 0.001, 0.01) == 1e-2);
  CHECK(adapt_lr(1e-3, 0.01, 0.01) == 1e-3);
  CHECK(adapt_lr(1e-3, 0.0, 0.01) == 1e-3);
  CHECK(adapt_lr(1.2e-5, 1.0, 0.01) == 1e-5);
  CHECK_THROWS_AS(adapt_lr(0.0, 0.1, 0.01), ConfigError);
}

TEST_CASE("closed-form KL of diagonal Gaussians") {
  Md m0(2, 2), m1(2, 2);
  m0 << 0, 0, 1, 1;
  m1 << 0, 0, 1, 1;
  RowVector<double> ls(2);
  ls << 0.1, -0.3;
  CHECK(gaussian_kl<double>(m0, ls, m1, ls) == 0.0);
  // One dimension, unit variances, mean shift 1: KL = 0.5.
  Md a(1, 1), b(1, 1);
  a << 0.0;
  b << 1.0;
  RowVector<double> z = RowVector<double>::Zero(1);
  CHECK(gaussian_kl<double>(a, z, b, z) == doctest::Approx(0.5));
  // Variance change only: log(s1/s0) + s0^2/(2 s1^2) - 1/2.
  RowVector<double> l1(1);
  l1 << std::log(2.0);
  CHECK(gaussian_kl<double>(a, z, a, l1) == doctest::Approx(std::log(2.0) + 0.125 - 0.5));
}

TEST_CASE("advantage normalization") {
  std::mt19937_64 rng(12);
  std::normal_distribution<float> n(3.0f, 5.0f);
  Vector<float> adv(1536);
  for (Eigen::Index i = 0; i < adv.size(); ++i) adv(i) = n(rng);
  normalize_advantages(adv);
  const Eigen::VectorXd a = adv.cast<double>();
  const double mu = a.mean();
  const double sd = std::sqrt((a.array() - mu).square().mean());
  CHECK(std::abs(mu) < 1e-6);
  CHECK(std::abs(sd - 1.0) < 1e-6);
}

TEST_CASE("Adam leaves parameters unchanged for a zero gradient") {
  nn::ParamSet<double> p;
  p.add("w", {3}).values << 1, 2, 3;
  Adam<double> opt;
  opt.step(p, 1e-3);
  CHECK(p.at("w").values(0, 2) == 3.0);
  CHECK(opt.steps() == 1);
}

TEST_CASE("Adam first step moves by lr against the gradient sign") {
  nn::ParamSet<double> p;
  auto& w = p.add("w", {2});
  w.values << 1.0, -1.0;
  w.gradient << 0.5, -4.0;
  Adam<double> opt;
  opt.step(p, 0.01);
  // Bias-corrected first step is lr * g / (|g| + eps').
  CHECK(p.at("w").values(0, 0) == doctest::Approx(0.99).epsilon(1e-9));
  CHECK(p.at("w").values(0, 1) == doctest::Approx(-0.99).epsilon(1e-9));
}

TEST_CASE("gradient clipping scales to the requested norm") {
  nn::ParamSet<double> p;
  p.add("a", {2}).gradient << 3.0, 0.0;
  p.add("b", {1}).gradient << 4.0;
  const double before = clip_grad_norm(p, 1.0);
  CHECK(before == doctest::Approx(5.0));
  CHECK(p.grad_norm() == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(clip_grad_norm(p, 10.0) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("config validation cites the interval") {
  PpoConfig c;
  CHECK_NOTHROW(c.validate());
  c.gamma = 1.5;
  try {
    c.validate();
    FAIL("expected rejection");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("[0, 1]") != std::string::npos);
  }
}
