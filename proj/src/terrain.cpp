#include "barlowwalk/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace barlowwalk {

namespace {

constexpr const char* kFamilyNames[kNumFamilies] = {"rough",     "slope_up",    "slope_down",
                                                    "stairs_up", "stairs_down", "obstacles"};

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a simple combination
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void check_level(int level) {
  if (level < 0 || level > kMaxLevel) {
    throw ConfigError("terrain level " + std::to_string(level) + " outside [0, 9]");
  }
}

}  // namespace

std::string family_name(TerrainFamily f) { return kFamilyNames[static_cast<int>(f)]; }

TerrainFamily parse_family(const std::string& name) {
  for (int i = 0; i < kNumFamilies; ++i) {
    if (name == kFamilyNames[i]) return static_cast<TerrainFamily>(i);
  }
  throw ConfigError("unknown terrain family '" + name +
                    "' (expected rough, slope_up, slope_down, stairs_up, stairs_down or "
                    "obstacles)");
}

std::vector<TerrainFamily> all_families() {
  std::vector<TerrainFamily> out;
  for (int i = 0; i < kNumFamilies; ++i) out.push_back(static_cast<TerrainFamily>(i));
  return out;
}

void TerrainSchedule::validate() const {
  auto positive = [](double v, const char* key) {
    if (!(v > 0)) throw ConfigError(std::string(key) + " must lie in (0, inf)");
  };
  auto nonneg = [](double v, const char* key) {
    if (!(v >= 0)) throw ConfigError(std::string(key) + " must lie in [0, inf)");
  };
  positive(cell_size, "terrain.cell_size");
  nonneg(rough_amplitude, "terrain.rough_amplitude");
  nonneg(rough_amplitude_per_level, "terrain.rough_amplitude_per_level");
  nonneg(slope_grade, "terrain.slope_grade");
  nonneg(slope_grade_per_level, "terrain.slope_grade_per_level");
  nonneg(stair_rise, "terrain.stair_rise");
  nonneg(stair_rise_per_level, "terrain.stair_rise_per_level");
  positive(stair_tread, "terrain.stair_tread");
  nonneg(obstacle_height, "terrain.obstacle_height");
  nonneg(obstacle_height_per_level, "terrain.obstacle_height_per_level");
  if (!(obstacle_density_min >= 0 && obstacle_density_min <= obstacle_density_max &&
        obstacle_density_max <= 1)) {
    throw ConfigError("terrain.obstacle_density_min/max must satisfy 0 <= min <= max <= 1");
  }
  nonneg(friction, "terrain.friction");
  if (!(restitution >= 0 && restitution <= 1)) {
    throw ConfigError("terrain.restitution must lie in [0, 1]");
  }
}

TerrainTile generate_tile(TerrainFamily family, int level, std::uint64_t seed,
                          const TerrainSchedule& s) {
  check_level(level);
  if (static_cast<int>(family) < 0 || static_cast<int>(family) >= kNumFamilies) {
    throw ConfigError("unknown terrain family");
  }
  TerrainTile t;
  t.family = family;
  t.level = level;
  t.cell_size = s.cell_size;
  t.friction = s.friction;
  t.restitution = s.restitution;
  t.heights.setZero();
  std::mt19937_64 rng(mix(seed, static_cast<std::uint64_t>(family) * 16 + level));
  const double len = t.length_m();

  auto center_x = [&](int i) { return (i + 0.5) * s.cell_size; };
  switch (family) {
    case TerrainFamily::Rough: {
      const double a = s.amplitude(level);
      std::uniform_real_distribution<double> u(-a, a);
      for (int i = 0; i < TerrainTile::kLength; ++i) {
        for (int j = 0; j < TerrainTile::kWidth; ++j) t.heights(i, j) = u(rng);
      }
      break;
    }
    case TerrainFamily::SlopeUp:
    case TerrainFamily::SlopeDown: {
      const double g = s.grade(level) * (family == TerrainFamily::SlopeUp ? 1.0 : -1.0);
      for (int i = 0; i < TerrainTile::kLength; ++i) t.heights.row(i).setConstant(g * center_x(i));
      t.exit_height = g * len;
      break;
    }
    case TerrainFamily::StairsUp:
    case TerrainFamily::StairsDown: {
      // The grid cannot hold a tread shorter than a cell, so treads are
      // rounded up to whole cells and every edge rises by exactly one step.
      const double r = s.rise(level) * (family == TerrainFamily::StairsUp ? 1.0 : -1.0);
      const int tread = std::max(1, static_cast<int>(std::ceil(s.stair_tread / s.cell_size - 1e-9)));
      for (int i = 0; i < TerrainTile::kLength; ++i) t.heights.row(i).setConstant(r * (i / tread));
      t.exit_height = r * (TerrainTile::kLength / tread);
      break;
    }
    case TerrainFamily::Obstacles: {
      const double h = s.block_height(level);
      std::bernoulli_distribution on(s.density(level));
      for (int i = 0; i < TerrainTile::kLength; ++i) {
        for (int j = 0; j < TerrainTile::kWidth; ++j) t.heights(i, j) = on(rng) ? h : 0.0;
      }
      break;
    }
  }
  return t;
}

TerrainWorld::TerrainWorld(std::vector<TerrainFamily> families, std::uint64_t seed,
                           const TerrainSchedule& schedule)
    : families_(std::move(families)), schedule_(schedule), cell_(schedule.cell_size) {
  if (families_.empty()) throw ConfigError("terrain.families must not be empty");
  schedule_.validate();
  for (int r = 0; r < kRows; ++r) {
    for (int l = 0; l < kLevels; ++l) {
      tiles_.push_back(generate_tile(families_[static_cast<std::size_t>(r) % families_.size()], l,
                                     mix(seed, static_cast<std::uint64_t>(r)), schedule_));
    }
  }
  assemble();
}

TerrainWorld TerrainWorld::flat(double height, double cell_size) {
  TerrainWorld w;
  w.families_ = {TerrainFamily::Rough};
  w.schedule_.cell_size = cell_size;
  w.cell_ = cell_size;
  for (int r = 0; r < kRows; ++r) {
    for (int l = 0; l < kLevels; ++l) {
      TerrainTile t;
      t.heights.setConstant(height);
      t.cell_size = cell_size;
      t.level = l;
      w.tiles_.push_back(t);
    }
  }
  w.assemble();
  return w;
}

void TerrainWorld::assemble() {
  const int nx = kLevels * TerrainTile::kLength;
  const int ny = kRows * TerrainTile::kWidth;
  grid_.resize(nx, ny);
  for (int r = 0; r < kRows; ++r) {
    double offset = 0.0;
    for (int l = 0; l < kLevels; ++l) {
      const auto& t = tile(r, l);
      grid_.block(l * TerrainTile::kLength, r * TerrainTile::kWidth, TerrainTile::kLength,
                  TerrainTile::kWidth) = t.heights.array() + offset;
      offset += t.exit_height;
    }
  }
}

const TerrainTile& TerrainWorld::tile(int row, int level) const {
  if (row < 0 || row >= kRows) throw ConfigError("terrain row outside [0, 9]");
  check_level(level);
  return tiles_[static_cast<std::size_t>(row * kLevels + level)];
}

TerrainFamily TerrainWorld::family(int row) const {
  return families_[static_cast<std::size_t>(row) % families_.size()];
}

Eigen::Vector2d TerrainWorld::tile_center(int row, int level) const {
  return {(level + 0.5) * tile_length(), (row + 0.5) * tile_width()};
}

std::pair<int, int> TerrainWorld::locate(double x, double y) const {
  const int level = std::clamp(static_cast<int>(std::floor(x / tile_length())), 0, kLevels - 1);
  const int row = std::clamp(static_cast<int>(std::floor(y / tile_width())), 0, kRows - 1);
  return {row, level};
}

double TerrainWorld::height_at(double x, double y, bool* clamped) const {
  const double xmax = length(), ymax = width();
  bool out = false;
  if (!(x >= 0 && x <= xmax && y >= 0 && y <= ymax)) {
    out = true;
    x = std::clamp(std::isfinite(x) ? x : 0.0, 0.0, xmax);
    y = std::clamp(std::isfinite(y) ? y : 0.0, 0.0, ymax);
  }
  if (clamped) *clamped = out;
  // Continuous cell coordinates relative to cell centers.
  const double u = std::clamp(x / cell_ - 0.5, 0.0, double(grid_.rows() - 1));
  const double v = std::clamp(y / cell_ - 0.5, 0.0, double(grid_.cols() - 1));
  const auto i0 = static_cast<Eigen::Index>(std::floor(u));
  const auto j0 = static_cast<Eigen::Index>(std::floor(v));
  const Eigen::Index i1 = std::min<Eigen::Index>(i0 + 1, grid_.rows() - 1);
  const Eigen::Index j1 = std::min<Eigen::Index>(j0 + 1, grid_.cols() - 1);
  const double fu = u - i0, fv = v - j0;
  const double h0 = grid_(i0, j0) * (1 - fu) + grid_(i1, j0) * fu;
  const double h1 = grid_(i0, j1) * (1 - fu) + grid_(i1, j1) * fu;
  return h0 * (1 - fv) + h1 * fv;
}

Eigen::Vector2d ScanGrid::offset(int index) const {
  const int i = index / kLateral;
  const int j = index % kLateral;
  return {forward_offset + (i - (kLongitudinal - 1) / 2) * spacing,
          (j - (kLateral - 1) / 2) * spacing};
}

Vector<double> height_scan(const TerrainWorld& world, const Eigen::Vector3d& base, double yaw,
                           const ScanGrid& grid) {
  Vector<double> out(ScanGrid::kPoints);
  const double c = std::cos(yaw), s = std::sin(yaw);
  for (int k = 0; k < ScanGrid::kPoints; ++k) {
    const Eigen::Vector2d o = grid.offset(k);
    const double x = base.x() + c * o.x() - s * o.y();
    const double y = base.y() + s * o.x() + c * o.y();
    out(k) = std::clamp(world.height_at(x, y) - base.z(), -grid.clip, grid.clip);
  }
  return out;
}

}  // namespace barlowwalk
