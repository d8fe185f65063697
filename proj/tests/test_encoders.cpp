#include "doctest.h"

#include "barlowwalk/encoders.hpp"
#include "barlowwalk/nn/fd_check.hpp"

#include <random>

using namespace barlowwalk;

using Frame = HistoryBuffer<double>::Frame;

namespace {

Frame tagged(double v) { return Frame::Constant(v); }

}  // namespace

TEST_CASE("twin views after ten pushes") {
  HistoryBuffer<double> buf;
  for (int i = 0; i <= 9; ++i) buf.push(tagged(i));
  const auto v = twin_views(buf, tagged(10));
  REQUIRE(v.old_slice.size() == 175);
  REQUIRE(v.new_slice.size() == 175);
  for (int k = 0; k < 5; ++k) {
    CHECK(v.old_slice.segment(35 * k, 35).isConstant(5 + k));
    CHECK(v.new_slice.segment(35 * k, 35).isConstant(6 + k));
  }
  // The buffer itself is untouched until push().
  CHECK(buf.frame(9).isConstant(9));
  buf.push(tagged(10));
  CHECK((buf.newest() - v.new_slice).norm() == 0.0);
}

TEST_CASE("constant history gives identical views") {
  HistoryBuffer<double> buf;
  for (int i = 0; i < 10; ++i) buf.push(tagged(0.7));
  const auto v = twin_views(buf, tagged(0.7));
  CHECK((v.old_slice - v.new_slice).norm() == 0.0);
}

TEST_CASE("fresh episode history is zero padded") {
  HistoryBuffer<double> buf;
  buf.push(tagged(3.0));
  buf.clear();
  Frame o = Frame::LinSpaced(35, 1.0, 35.0);
  const auto v = twin_views(buf, o);
  CHECK(v.old_slice.isZero(0.0));
  CHECK(v.new_slice.head(140).isZero(0.0));
  CHECK((v.new_slice.tail(35) - o).norm() == 0.0);
}

TEST_CASE("twin views differ in exactly one frame") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  HistoryBuffer<double> buf;
  for (int i = 0; i < 13; ++i) {
    Frame f;
    for (int k = 0; k < 35; ++k) f(k) = n(rng);
    buf.push(f);
  }
  Frame latest;
  for (int k = 0; k < 35; ++k) latest(k) = n(rng);
  const auto v = twin_views(buf, latest);
  // new = old shifted by one frame; only the shift boundary is new data.
  CHECK((v.new_slice.head(140) - v.old_slice.tail(140)).norm() == 0.0);
  CHECK(HistoryBuffer<double>::capacity() == 10);
}

TEST_CASE("encoder output widths") {
  const auto enc = EncoderStack::standard();
  nn::ParamSet<double> p;
  enc.declare(p);
  std::mt19937_64 rng(2);
  enc.init(p, rng);
  const Vector<double> z = encode_latent(enc, p, Vector<double>::Ones(175));
  CHECK(z.size() == 16);
  CHECK(project_barlow(enc, p, z).size() == 64);
  CHECK_THROWS_AS(encode_latent(enc, p, Vector<double>::Ones(170)), ConfigError);
  CHECK_THROWS_AS(project_barlow(enc, p, Vector<double>::Ones(15)), ConfigError);
  // Same slice, same latent.
  CHECK((encode_latent(enc, p, Vector<double>::Ones(175)) - z).norm() == 0.0);
}

TEST_CASE("zero encoder parameters give zero outputs") {
  const auto enc = EncoderStack::standard();
  nn::ParamSet<double> p;
  enc.declare(p);
  const Vector<double> z = encode_latent(enc, p, Vector<double>::Constant(175, 2.0));
  CHECK(z.isZero(0.0));
  CHECK(project_barlow(enc, p, Vector<double>::Ones(16)).isZero(0.0));
}

TEST_CASE("a loss on the projection reaches the MLP encoder") {
  const auto enc = EncoderStack::with_sizes({12, 6, 5}, {5, 4, 3}, {3, 3, 4});
  nn::ParamSet<double> p;
  enc.declare(p);
  std::mt19937_64 rng(3);
  enc.init(p, rng);
  std::normal_distribution<double> n;
  Matrix<double> x(6, 12);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = n(rng);
  nn::LossBuilder<double> f = [&](nn::Tape<double>& t, nn::ParamSet<double>& ps) {
    auto u = enc.project(t, ps, enc.encode(t, ps, t.constant(x)));
    return nn::mean(nn::square(u));
  };
  const auto r = nn::fd_check(f, p, 1e-5, 1e-4);
  INFO(r.diagnostic);
  CHECK(r.passed);
  CHECK(p.at("mlp_enc.0.weight").gradient.norm() > 0.0);
  CHECK(p.at("latent_enc.0.weight").gradient.norm() > 0.0);
}
