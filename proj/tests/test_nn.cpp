#include "doctest.h"

#include "barlowwalk/nn/fd_check.hpp"
#include "barlowwalk/nn/functional.hpp"
#include "barlowwalk/nn/serialize.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <cstring>
#include <sstream>

using namespace barlowwalk;
using namespace barlowwalk::nn;

using Md = Matrix<double>;
using Vd = Vector<double>;

namespace {

void fill_random(ParamSet<double>& p, std::mt19937_64& rng, double scale = 0.5) {
  std::normal_distribution<double> n(0.0, scale);
  for (auto& e : p.entries()) {
    for (Eigen::Index i = 0; i < e.values.size(); ++i) e.values(i) = n(rng);
  }
}

Md random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Md m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

}  // namespace

TEST_CASE("mlp_forward with zero parameters returns zeros") {
  Mlp mlp{MlpSpec::elu_hidden({6, 5, 3}), "m"};
  ParamSet<double> p;
  mlp.declare(p);
  const Vd out = mlp_forward(mlp, p, Vd::Constant(6, 3.0));
  CHECK(out.size() == 3);
  CHECK(out.isZero(0.0));
}

TEST_CASE("mlp_forward output width follows the last layer") {
  Mlp mlp{MlpSpec::elu_hidden({175, 128, 64}), "enc"};
  ParamSet<double> p;
  mlp.declare(p);
  std::mt19937_64 rng(3);
  init_mlp(mlp, p, 1.0, rng);
  const Vd out = mlp_forward(mlp, p, Vd::Ones(175));
  CHECK(out.size() == 64);
  CHECK_THROWS_AS(mlp_forward(mlp, p, Vd::Ones(174)), ConfigError);
}

TEST_CASE("single identity layer passes input through") {
  Mlp mlp{MlpSpec{{4, 4}, {Activation::Identity}}, "id"};
  ParamSet<double> p;
  mlp.declare(p);
  p.at(mlp.weight_name(0)).values = Md::Identity(4, 4);
  Vd v(4);
  v << 1.5, -2.0, 0.25, 7.0;
  CHECK((mlp_forward(mlp, p, v) - v).norm() == 0.0);
}

TEST_CASE("MlpSpec validation") {
  CHECK_THROWS_AS((MlpSpec{{4}, {}}.validate()), ConfigError);
  CHECK_THROWS_AS((MlpSpec{{4, 0}, {Activation::ELU}}.validate()), ConfigError);
}

TEST_CASE("gru_step with zero parameters keeps a zero state") {
  Gru gru{7, 64, "g"};
  ParamSet<double> p;
  gru.declare(p);
  auto [out, st] = gru_step(gru, p, Vd::Constant(7, 2.0), GruState<double>::zeros());
  CHECK(out.size() == 64);
  CHECK(out.isZero(0.0));
  CHECK(st.hidden.isZero(0.0));
}

TEST_CASE("gru_step is deterministic and matches a hand-written cell") {
  Gru gru{51, 64, "actor.gru"};
  ParamSet<double> p;
  gru.declare(p);
  std::mt19937_64 rng(11);
  init_gru(gru, p, rng);
  const Vd x = random_matrix(51, 1, rng).col(0);
  const Vd h = 0.3 * random_matrix(64, 1, rng).col(0);

  auto [a, sa] = gru_step(gru, p, x, GruState<double>{h});
  auto [b, sb] = gru_step(gru, p, x, GruState<double>{h});
  CHECK(a.size() == 64);
  CHECK((a - b).norm() == 0.0);

  // Independent reference in column-vector form.
  const Md wih = p.at("actor.gru.w_ih").values.transpose();
  const Md whh = p.at("actor.gru.w_hh").values.transpose();
  const Vd bih = p.at("actor.gru.b_ih").values.row(0).transpose();
  const Vd bhh = p.at("actor.gru.b_hh").values.row(0).transpose();
  const Vd gi = wih * x + bih;
  const Vd gh = whh * h + bhh;
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  Vd ref(64);
  for (int i = 0; i < 64; ++i) {
    const double r = sig(gi(i) + gh(i));
    const double z = sig(gi(64 + i) + gh(64 + i));
    const double n = std::tanh(gi(128 + i) + r * gh(128 + i));
    ref(i) = (1 - z) * n + z * h(i);
  }
  CHECK((a - ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gru_step rejects a state of the wrong length") {
  Gru gru{5, 64, "g"};
  ParamSet<double> p;
  gru.declare(p);
  CHECK_THROWS_AS(gru_step(gru, p, Vd::Zero(5), GruState<double>::zeros(32)), ConfigError);
}

TEST_CASE("gaussian_head closed forms") {
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  const Vd mean = Vd::LinSpaced(8, -1.0, 1.0);
  auto s = gaussian_head<double>(mean, Vd::Zero(8), mean);
  CHECK(s.log_prob == doctest::Approx(-8 * 0.5 * log_2pi).epsilon(1e-12));
  CHECK(s.log_prob == doctest::Approx(-7.3515).epsilon(1e-4));
  CHECK(s.entropy == doctest::Approx(8 * 0.5 * (log_2pi + 1.0)).epsilon(1e-12));
  CHECK(s.entropy == doctest::Approx(11.3515).epsilon(1e-4));

  std::mt19937_64 rng(5);
  const Vd a = random_matrix(8, 1, rng).col(0);
  const Vd ls = 0.3 * random_matrix(8, 1, rng).col(0);
  const Vd shift = random_matrix(8, 1, rng).col(0);
  auto s1 = gaussian_head<double>(mean, ls, a);
  auto s2 = gaussian_head<double>(mean + shift, ls, a + shift);
  CHECK(s1.log_prob == doctest::Approx(s2.log_prob).epsilon(1e-12));

  // log_std is clamped at the upper bound.
  auto s3 = gaussian_head<double>(mean, Vd::Constant(8, 5.0), mean);
  CHECK(s3.entropy == doctest::Approx(8 * (2.0 + 0.5 * (log_2pi + 1.0))).epsilon(1e-12));
}

TEST_CASE("batched log-prob agrees with the per-sample head") {
  std::mt19937_64 rng(9);
  const Md mean = random_matrix(6, 8, rng);
  const Md act = random_matrix(6, 8, rng);
  const Md ls = 0.2 * random_matrix(1, 8, rng);
  Tape<double> t;
  auto lp = gaussian_log_prob(t.constant(mean), t.constant(ls), act);
  for (int r = 0; r < 6; ++r) {
    auto s = gaussian_head<double>(mean.row(r).transpose(), ls.row(0).transpose(),
                                   act.row(r).transpose());
    CHECK(lp.value()(r, 0) == doctest::Approx(s.log_prob).epsilon(1e-12));
  }
}

TEST_CASE("backward on a quadratic gives 2w") {
  ParamSet<double> p;
  auto& w = p.add("w", {3, 2});
  w.values << 1, -2, 3, 0.5, -0.25, 4;
  Tape<double> t;
  auto loss = sum(square(t.parameter(p, "w")));
  t.backward(loss);
  CHECK((p.at("w").gradient - 2.0 * p.at("w").values).norm() == 0.0);
}

TEST_CASE("two backwards without zeroing double the gradient") {
  ParamSet<double> p;
  p.add("w", {4}).values << 0.1, 0.2, -0.3, 0.4;
  Tape<double> t;
  auto loss = sum(exp(t.parameter(p, "w")));
  t.backward(loss);
  const Md once = p.at("w").gradient;
  t.backward(loss);
  CHECK((p.at("w").gradient - 2.0 * once).norm() == 0.0);
}

TEST_CASE("backward without a forward pass is a usage error") {
  Tape<double> t;
  CHECK_THROWS_AS(t.backward(Var<double>{&t, 0}), UsageError);
  auto v = t.variable(Md::Ones(2, 2));
  CHECK_THROWS_AS(t.backward(v), UsageError);
}

TEST_CASE("ParamSet rejects duplicate names and bad ranks") {
  ParamSet<double> p;
  p.add("a", {2});
  CHECK_THROWS_AS(p.add("a", {2}), ConfigError);
  CHECK_THROWS_AS(p.add("b", {}), ConfigError);
  CHECK_THROWS_AS(p.add("c", {1, 2, 3}), ConfigError);
  CHECK(p.at("a").gradient.rows() == p.at("a").values.rows());
  CHECK(p.at("a").gradient.cols() == p.at("a").values.cols());
}

TEST_CASE("fd_check on a quadratic is exact to round-off") {
  ParamSet<double> p;
  std::mt19937_64 rng(1);
  p.add("w", {5, 3}).values = random_matrix(5, 3, rng);
  LossBuilder<double> f = [](Tape<double>& t, ParamSet<double>& ps) {
    return scale(sum(square(t.parameter(ps, "w"))), 0.5);
  };
  const auto r = fd_check(f, p, 1e-5, 1e-6);
  CHECK(r.passed);
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("fd_check on a constant loss reports zero error") {
  ParamSet<double> p;
  p.add("w", {3}).values.setConstant(0.7);
  LossBuilder<double> f = [](Tape<double>& t, ParamSet<double>& ps) {
    t.parameter(ps, "w");
    Md one(1, 1);
    one(0, 0) = 2.0;
    return t.constant(one);
  };
  const auto r = fd_check(f, p, 1e-4, 1e-4);
  CHECK(r.passed);
  CHECK(r.max_rel_error == 0.0);
  CHECK(p.at("w").gradient.isZero(0.0));
}

TEST_CASE("fd_check flags a non-finite loss") {
  ParamSet<double> p;
  p.add("w", {2}).values << -1.0, 1.0;
  LossBuilder<double> f = [](Tape<double>& t, ParamSet<double>& ps) {
    auto w = t.parameter(ps, "w");
    Md m = w.value().array().log();  // log of a negative entry
    return sum(t.constant(m));
  };
  const auto r = fd_check(f, p, 1e-4, 1e-4);
  CHECK_FALSE(r.passed);
  CHECK_FALSE(r.finite);
  CHECK_FALSE(r.diagnostic.empty());
}

TEST_CASE("every tape op matches central differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    ParamSet<double> p;
    p.add("a", {4, 3});
    p.add("b", {3, 5});
    p.add("c", {5});
    p.add("d", {4, 5});
    fill_random(p, rng);
    const Vd w = random_matrix(8, 1, rng).col(0);
    LossBuilder<double> f = [&](Tape<double>& t, ParamSet<double>& ps) {
      auto a = t.parameter(ps, "a");
      auto b = t.parameter(ps, "b");
      auto c = t.parameter(ps, "c");
      auto d = t.parameter(ps, "d");
      auto x = add_row(matmul(a, b), c);        // 4x5
      auto y = mul(elu(x), nn::tanh(d));        // 4x5
      auto z = sub(sigmoid(y), scale(d, 0.3));  // 4x5
      auto s = hcat(col_slice(z, 1, 2), exp(col_slice(x, 0, 2)));  // 4x4
      auto v = vcat(std::vector<Var<double>>{row_slice(s, 0, 2), square(row_slice(s, 2, 2)),
                                             col_slice(broadcast_rows(c, 4), 0, 4)});
      auto q = scale_rows(clamp(add_scalar(v, 0.1), -0.8, 1.5), w);
      return add(mean(q), scale(sum(detach(z)), 0.0));
    };
    const auto r = fd_check(f, p, 1e-6, 1e-6);
    INFO("seed " << seed << ": " << r.diagnostic);
    CHECK(r.passed);
  }
}

TEST_CASE("GRU and MLP composite matches central differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(100 + seed);
    Gru gru{6, 5, "g"};
    Mlp head{MlpSpec::elu_hidden({5, 4, 2}), "h"};
    ParamSet<double> p;
    gru.declare(p);
    head.declare(p);
    fill_random(p, rng);
    const Md xs = random_matrix(9, 6, rng);  // 3 steps x 3 rows
    const Md h0 = 0.5 * random_matrix(3, 5, rng);
    LossBuilder<double> f = [&](Tape<double>& t, ParamSet<double>& ps) {
      auto gates = gru.input_gates(t, ps, t.constant(xs));
      auto h = t.constant(h0);
      std::vector<Var<double>> outs;
      for (int k = 0; k < 3; ++k) {
        h = gru.step_from_gates(t, ps, row_slice(gates, 3 * k, 3), h);
        outs.push_back(h);
      }
      return mean(square(head.forward(t, ps, vcat(outs))));
    };
    const auto r = fd_check(f, p, 1e-4, 1e-4);
    INFO("seed " << seed << ": " << r.diagnostic);
    CHECK(r.passed);
  }
}

TEST_CASE("gaussian log-prob and entropy gradients match central differences") {
  std::mt19937_64 rng(21);
  ParamSet<double> p;
  p.add("mean", {5, 3}).values = random_matrix(5, 3, rng);
  p.add("log_std", {3}).values = 0.3 * random_matrix(1, 3, rng);
  const Md act = random_matrix(5, 3, rng);
  LossBuilder<double> f = [&](Tape<double>& t, ParamSet<double>& ps) {
    auto ls = clamp(t.parameter(ps, "log_std"), -20.0, 2.0);
    auto lp = gaussian_log_prob(t.parameter(ps, "mean"), ls, act);
    return add(mean(lp), scale(gaussian_entropy(ls), 0.7));
  };
  const auto r = fd_check(f, p, 1e-5, 1e-6);
  INFO(r.diagnostic);
  CHECK(r.passed);
}

TEST_CASE("orthogonal init has orthonormal columns scaled by gain") {
  std::mt19937_64 rng(2);
  const Md w = orthogonal<double>(10, 4, std::sqrt(2.0), rng);
  CHECK(((w.transpose() * w) - 2.0 * Md::Identity(4, 4)).norm() < 1e-12);
  const Md v = orthogonal<double>(3, 7, 1.0, rng);
  CHECK(((v * v.transpose()) - Md::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("identical seeds give identical initialization") {
  Mlp mlp{MlpSpec::elu_hidden({8, 6, 2}), "m"};
  ParamSet<float> a, b;
  mlp.declare(a);
  mlp.declare(b);
  std::mt19937_64 r1(77), r2(77);
  init_mlp(mlp, a, 0.01, r1);
  init_mlp(mlp, b, 0.01, r2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK((a.entries()[i].values - b.entries()[i].values).norm() == 0.0f);
  }
  CHECK(a.at("m.1.bias").values.isZero(0.0f));
}

TEST_CASE("container round trip is bit exact") {
  ParamSet<float> p;
  p.add("x.weight", {3, 4});
  p.add("x.bias", {4});
  std::mt19937_64 rng(4);
  std::normal_distribution<float> n;
  for (auto& e : p.entries()) {
    for (Eigen::Index i = 0; i < e.values.size(); ++i) e.values(i) = n(rng);
  }
  p.at("x.bias").values(0, 1) = -0.0f;
  std::stringstream ss;
  write_params(ss, p);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "BWLK");
  const auto q = read_params<float>(ss);
  REQUIRE(q.same_layout(p));
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& a = p.entries()[i].values;
    const auto& b = q.entries()[i].values;
    CHECK(std::memcmp(a.data(), b.data(), sizeof(float) * a.size()) == 0);
  }
  CHECK(q.entries()[1].dims.size() == 1);

  // 4 magic + 4 version + 4 count, then per entry 4 + name + 4 + 4*rank + 4*n
  const std::size_t expect = 12 + (4 + 8 + 4 + 8 + 48) + (4 + 6 + 4 + 4 + 16);
  CHECK(bytes.size() == expect);
}

TEST_CASE("container rejects bad magic and mismatched layouts") {
  std::stringstream bad("XXXX");
  CHECK_THROWS_AS(read_params<float>(bad), ConfigError);

  ParamSet<float> a, b;
  a.add("net.0.weight", {3, 4});
  b.add("net.0.weight", {3, 5});
  try {
    assign_params(a, b);
    FAIL("expected a mismatch");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("net.0.weight") != std::string::npos);
  }
}
