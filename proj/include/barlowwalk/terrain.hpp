#pragma once

// Heightfield tiles, the tiled world of straight paths and the body-frame
// height scan used by the critic.
//
// A tile is 20 cells along the path (x) by 10 cells across (y). Heights
// are sampled at cell centers and interpolated bilinearly between them.

#include "barlowwalk/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace barlowwalk {

enum class TerrainFamily { Rough, SlopeUp, SlopeDown, StairsUp, StairsDown, Obstacles };

inline constexpr int kNumFamilies = 6;
inline constexpr int kMaxLevel = 9;

std::string family_name(TerrainFamily f);
/// Accepts the snake_case names ("rough", "slope_up", ...). Throws
/// ConfigError for anything else.
TerrainFamily parse_family(const std::string& name);
std::vector<TerrainFamily> all_families();

/// Difficulty schedules, linear in level.
struct TerrainSchedule {
  double cell_size = 0.4;
  double rough_amplitude = 0.025;
  double rough_amplitude_per_level = 0.01;
  double slope_grade = 0.05;
  double slope_grade_per_level = 0.03;
  double stair_rise = 0.05;
  double stair_rise_per_level = 0.012;
  double stair_tread = 0.30;
  double obstacle_height = 0.03;
  double obstacle_height_per_level = 0.02;
  double obstacle_density_min = 0.10;
  double obstacle_density_max = 0.30;
  double friction = 1.0;
  double restitution = 0.0;

  double amplitude(int level) const { return rough_amplitude + rough_amplitude_per_level * level; }
  double grade(int level) const { return slope_grade + slope_grade_per_level * level; }
  double rise(int level) const { return stair_rise + stair_rise_per_level * level; }
  double block_height(int level) const {
    return obstacle_height + obstacle_height_per_level * level;
  }
  double density(int level) const {
    return obstacle_density_min +
           (obstacle_density_max - obstacle_density_min) * level / double(kMaxLevel);
  }

  void validate() const;
};

struct TerrainTile {
  static constexpr int kLength = 20;  // cells along the path
  static constexpr int kWidth = 10;   // cells across

  Eigen::Matrix<double, kLength, kWidth> heights;
  double cell_size = 0.4;
  TerrainFamily family = TerrainFamily::Rough;
  int level = 0;
  double friction = 1.0;
  double restitution = 0.0;
  /// Height of the continued profile at the far edge, so consecutive
  /// slope and stair tiles join without a step.
  double exit_height = 0.0;

  double length_m() const { return kLength * cell_size; }
  double width_m() const { return kWidth * cell_size; }
};

/// Deterministic in (family, level, seed).
TerrainTile generate_tile(TerrainFamily family, int level, std::uint64_t seed,
                          const TerrainSchedule& schedule = {});

/// Ten straight paths (rows along y) of ten tiles each (levels 0..9 along
/// x). Row r uses families[r % families.size()]. Immutable once built.
class TerrainWorld {
 public:
  static constexpr int kRows = 10;
  static constexpr int kLevels = kMaxLevel + 1;

  TerrainWorld(std::vector<TerrainFamily> families, std::uint64_t seed,
               const TerrainSchedule& schedule = {});

  /// Bilinear lookup; points outside the world are clamped to the border
  /// and reported through `clamped`.
  double height_at(double x, double y, bool* clamped = nullptr) const;

  const TerrainTile& tile(int row, int level) const;
  TerrainFamily family(int row) const;
  double tile_length() const { return TerrainTile::kLength * cell_; }
  double tile_width() const { return TerrainTile::kWidth * cell_; }
  double length() const { return kLevels * tile_length(); }
  double width() const { return kRows * tile_width(); }
  /// Center of tile (row, level) in world coordinates.
  Eigen::Vector2d tile_center(int row, int level) const;
  /// Row and level whose tile contains (x, y), clamped to the grid.
  std::pair<int, int> locate(double x, double y) const;
  const std::vector<TerrainFamily>& families() const { return families_; }
  const TerrainSchedule& schedule() const { return schedule_; }

  /// Flat world of constant height, used by tests and sanity checks.
  static TerrainWorld flat(double height = 0.0, double cell_size = 0.4);

 private:
  TerrainWorld() = default;
  void assemble();

  std::vector<TerrainFamily> families_;
  TerrainSchedule schedule_;
  double cell_ = 0.4;
  std::vector<TerrainTile> tiles_;  // row-major: row * kLevels + level
  Eigen::MatrixXd grid_;            // (kLevels * 20) x (kRows * 10), x-major
};

/// 11 lateral x 17 longitudinal samples at 0.1 m, yaw-aligned, index
/// i_long * 11 + j_lat. Longitudinal offsets run from
/// forward_offset - 0.8 to forward_offset + 0.8.
struct ScanGrid {
  static constexpr int kLateral = 11;
  static constexpr int kLongitudinal = 17;
  static constexpr int kPoints = kLateral * kLongitudinal;
  double spacing = 0.1;
  double forward_offset = 0.3;
  double clip = 1.0;

  Eigen::Vector2d offset(int index) const;
};

static_assert(ScanGrid::kPoints == dims::kScan);

/// Terrain height minus base height at every scan point, clipped to
/// [-clip, clip].
Vector<double> height_scan(const TerrainWorld& world, const Eigen::Vector3d& base_position,
                           double yaw, const ScanGrid& grid = {});

}  // namespace barlowwalk
