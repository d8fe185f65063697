#include "doctest.h"

#include "barlowwalk/terrain.hpp"

#include <cmath>

using namespace barlowwalk;

TEST_CASE("tiles are 20 x 10 and reproducible") {
  for (TerrainFamily f : all_families()) {
    for (int level : {0, 4, 9}) {
      const TerrainTile a = generate_tile(f, level, 17);
      const TerrainTile b = generate_tile(f, level, 17);
      CHECK(a.heights.rows() == 20);
      CHECK(a.heights.cols() == 10);
      CHECK(a.heights.allFinite());
      CHECK(a.heights == b.heights);
      CHECK(a.level == level);
      CHECK(a.family == f);
    }
  }
  CHECK(generate_tile(TerrainFamily::Rough, 3, 1).heights !=
        generate_tile(TerrainFamily::Rough, 3, 2).heights);
}

TEST_CASE("rough amplitude bound") {
  const TerrainSchedule s;
  CHECK(s.amplitude(0) == doctest::Approx(0.025));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CHECK(generate_tile(TerrainFamily::Rough, 0, seed).heights.cwiseAbs().maxCoeff() <= 0.025);
    CHECK(generate_tile(TerrainFamily::Rough, 9, seed).heights.cwiseAbs().maxCoeff() <=
          s.amplitude(9));
  }
}

TEST_CASE("stairs are monotone along the path with the scheduled rise") {
  const TerrainSchedule s;
  for (int level = 0; level <= kMaxLevel; ++level) {
    const auto up = generate_tile(TerrainFamily::StairsUp, level, 3);
    const auto down = generate_tile(TerrainFamily::StairsDown, level, 3);
    double max_step = 0;
    for (int i = 1; i < TerrainTile::kLength; ++i) {
      for (int j = 0; j < TerrainTile::kWidth; ++j) {
        CHECK(up.heights(i, j) >= up.heights(i - 1, j));
        CHECK(down.heights(i, j) <= down.heights(i - 1, j));
        max_step = std::max(max_step, up.heights(i, j) - up.heights(i - 1, j));
      }
    }
    CHECK(max_step == doctest::Approx(s.rise(level)).epsilon(1e-12));
  }
  CHECK(s.rise(5) == doctest::Approx(0.05 + 0.012 * 5));
}

TEST_CASE("family names round-trip and unknown names are rejected") {
  for (TerrainFamily f : all_families()) CHECK(parse_family(family_name(f)) == f);
  CHECK(all_families().size() == kNumFamilies);
  CHECK_THROWS_AS(parse_family("lava"), ConfigError);
  CHECK_THROWS_AS(generate_tile(TerrainFamily::Rough, 10, 0), ConfigError);
}

TEST_CASE("height lookup") {
  SUBCASE("flat world is flat everywhere") {
    const TerrainWorld w = TerrainWorld::flat(0.37);
    for (double x : {0.0, 1.13, 40.0, 79.9}) {
      for (double y : {0.0, 2.7, 39.99}) CHECK(w.height_at(x, y) == doctest::Approx(0.37));
    }
  }
  SUBCASE("cell centers are exact and midpoints average") {
    const TerrainWorld w({TerrainFamily::Rough}, 5);
    const auto& t = w.tile(0, 0);
    const double c = w.schedule().cell_size;
    for (int i = 0; i + 1 < TerrainTile::kLength; i += 3) {
      for (int j = 0; j < TerrainTile::kWidth; j += 2) {
        const double x = (i + 0.5) * c, y = (j + 0.5) * c;
        CHECK(std::abs(w.height_at(x, y) - t.heights(i, j)) < 1e-12);
        const double mid = 0.5 * (t.heights(i, j) + t.heights(i + 1, j));
        CHECK(std::abs(w.height_at((i + 1) * c, y) - mid) < 1e-12);
      }
    }
  }
  SUBCASE("out of bounds is clamped and flagged") {
    const TerrainWorld w({TerrainFamily::Rough}, 5);
    bool clamped = false;
    const double inside = w.height_at(0.2, 0.2, &clamped);
    CHECK_FALSE(clamped);
    CHECK(w.height_at(-3.0, -1.0, &clamped) == inside);
    CHECK(clamped);
  }
}

TEST_CASE("consecutive slope tiles join without a step") {
  const TerrainWorld w({TerrainFamily::SlopeUp}, 2);
  const double c = w.schedule().cell_size;
  for (int level = 0; level + 1 < TerrainWorld::kLevels; ++level) {
    const double x_last = (level + 1) * w.tile_length() - 0.5 * c;
    const double step = w.height_at(x_last + c, 2.0) - w.height_at(x_last, 2.0);
    // Neighbouring cells differ by at most one cell of the steeper grade.
    CHECK(std::abs(step) <= w.schedule().grade(level + 1) * c + 1e-12);
  }
}

TEST_CASE("height scan") {
  const ScanGrid grid;
  CHECK(ScanGrid::kPoints == 187);
  CHECK(dims::kCriticIn - dims::kFullObs == 187);

  SUBCASE("flat ground gives a constant scan") {
    const TerrainWorld w = TerrainWorld::flat(0.0);
    const auto s = height_scan(w, {10.0, 10.0, 0.8}, 0.3);
    CHECK(s.size() == 187);
    CHECK((s.array() + 0.8).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("values are clipped") {
    const TerrainWorld w = TerrainWorld::flat(0.0);
    const auto s = height_scan(w, {10.0, 10.0, 5.0}, 0.0);
    CHECK((s.array() + 1.0).abs().maxCoeff() == 0.0);
  }
  SUBCASE("grid spans the documented box ahead of the base") {
    const Eigen::Vector2d first = grid.offset(0), last = grid.offset(186);
    CHECK(first.x() == doctest::Approx(0.3 - 0.8));
    CHECK(last.x() == doctest::Approx(0.3 + 0.8));
    CHECK(first.y() == doctest::Approx(-0.5));
    CHECK(last.y() == doctest::Approx(0.5));
    CHECK(grid.offset(1).y() - grid.offset(0).y() == doctest::Approx(0.1));
  }
  SUBCASE("a half turn reverses a centered scan") {
    const TerrainWorld w({TerrainFamily::Rough, TerrainFamily::Obstacles}, 9);
    ScanGrid centered;
    centered.forward_offset = 0.0;
    const Eigen::Vector3d base(21.3, 13.7, 0.8);
    const auto a = height_scan(w, base, 0.0, centered);
    const auto b = height_scan(w, base, std::numbers::pi, centered);
    for (int k = 0; k < 187; ++k) CHECK(std::abs(b(k) - a(186 - k)) < 1e-9);
  }
}
