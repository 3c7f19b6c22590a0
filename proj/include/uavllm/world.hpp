#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "uavllm/geometry.hpp"
#include "uavllm/simd/kernels.hpp"

namespace uavllm {

struct WorldExtent {
  double x_min = 0.0;
  double x_max = 20.0;
  double y_min = 0.0;
  double y_max = 20.0;
  double z_ceiling = 20.0;

  bool contains(Vec3 p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max && p.z >= 0.0 &&
           p.z <= z_ceiling;
  }
  bool contains_xy(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

struct Cube {
  Vec3 center;
  Vec3 size;  // full edge lengths
};

struct Sphere {
  Vec3 center;
  double radius = 0.0;
};

struct Obstacle {
  std::string id;
  std::variant<Cube, Sphere> shape;
  double clearance = 0.0;

  bool is_cube() const { return std::holds_alternative<Cube>(shape); }
  bool is_sphere() const { return std::holds_alternative<Sphere>(shape); }
  const Cube& cube() const { return std::get<Cube>(shape); }
  const Sphere& sphere() const { return std::get<Sphere>(shape); }

  /// Highest point of the solid.
  double top() const;
  double bottom() const;
  /// xy bounding rectangle of the solid.
  Rect footprint_bounds() const;
  simd::Footprint footprint() const;
  /// Solid bounding box (cubes only use this for exact tests).
  Box box() const;
};

/// One grid cell. A refined cell holds four children ordered
/// (x-low, y-low), (x-high, y-low), (x-low, y-high), (x-high, y-high).
struct Cell {
  std::uint8_t occupancy = 0;
  double height = 0.0;
  std::vector<Cell> children;

  bool refined() const { return !children.empty(); }
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct CellIndex {
  int ix = 0;
  int iy = 0;
  friend bool operator==(CellIndex, CellIndex) = default;
};

/// Rasterized 2.5D view of a pre-mapped world. Immutable once built; refinement
/// returns a new map.
class GridMap {
 public:
  GridMap() = default;

  const WorldExtent& extent() const { return extent_; }
  double resolution() const { return resolution_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const std::vector<Obstacle>& obstacles() const { return obstacles_; }

  const Cell& cell(CellIndex idx) const;
  bool has_cell(CellIndex idx) const {
    return idx.ix >= 0 && idx.iy >= 0 && idx.ix < nx_ && idx.iy < ny_;
  }
  Rect cell_rect(CellIndex idx) const;
  /// Base cell containing (x, y); the upper extent edge maps to the last cell.
  CellIndex locate(double x, double y) const;
  /// Height of the deepest cell containing (x, y).
  double height_at(double x, double y) const;
  int occupied_count() const;

  /// Stable FNV-1a digest of the canonical grid serialization, as 16 hex chars.
  std::string digest() const;
  /// Base-cell occupancy as CSV, first line is the highest-y row.
  std::string to_csv() const;

  friend GridMap build_gridmap(const WorldExtent&, double, const std::vector<Obstacle>&);
  friend GridMap refine_cell(const GridMap&, CellIndex, int);

 private:
  WorldExtent extent_;
  double resolution_ = 1.0;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<Obstacle> obstacles_;
  std::vector<Cell> cells_;  // row-major, iy * nx + ix
};

/// Validates the extent and obstacles and rasterizes every obstacle footprint.
/// A cell is occupied when a footprint overlaps it with positive area; its
/// height is the highest obstacle top among those overlaps.
GridMap build_gridmap(const WorldExtent& extent, double resolution,
                      const std::vector<Obstacle>& obstacles);

/// Replaces the cell with 2^depth x 2^depth children re-rasterized against the
/// obstacles.
GridMap refine_cell(const GridMap& map, CellIndex cell, int depth);

/// 2.5D query: occupancy of the deepest cell containing (x, y), or 0 when z is
/// above that cell's height.
std::uint8_t query_occupancy(const GridMap& map, Vec3 position);

struct CollisionReport {
  std::vector<std::string> collisions;            // solid intersections
  std::vector<std::string> clearance_violations;  // inside clearance, outside solid
  double min_solid_distance = 0.0;                // over all obstacles

  bool collided() const { return !collisions.empty(); }
};

/// Exact continuous test of a segment against obstacle solids and their
/// clearance shells. Independent of any grid.
CollisionReport collision_check(const std::vector<Obstacle>& obstacles, Vec3 a, Vec3 b);

/// Distance from a segment to the obstacle solid (0 when intersecting).
double segment_obstacle_distance(const Obstacle& obstacle, Vec3 a, Vec3 b);

/// Validates extent/obstacle invariants; throws Error on violation.
void validate_world(const WorldExtent& extent, double resolution,
                    const std::vector<Obstacle>& obstacles);

struct WorldDescription {
  WorldExtent extent;
  double resolution = 1.0;
  std::vector<Obstacle> obstacles;

  const Obstacle* find(const std::string& id) const;
  GridMap rasterize() const { return build_gridmap(extent, resolution, obstacles); }
};

/// Cross-check of the rasterized grid against a cell-by-cell exact footprint
/// test that bypasses the vectorized kernels.
struct GridCheck {
  int nx = 0;
  int ny = 0;
  int occupied = 0;
  std::string digest;
  std::vector<CellIndex> mismatches;
  std::vector<std::pair<std::string, int>> cells_per_obstacle;
  bool ok() const { return mismatches.empty(); }
};

/// Validates the world (throws like validate_world) and checks every cell.
GridCheck check_grid(const WorldDescription& world);
nlohmann::json grid_check_to_json(const GridCheck& check);

nlohmann::json world_to_json(const WorldDescription& world);
/// Parses a world document; schema problems raise kWorldFileInvalid. Geometric
/// validation is left to build_gridmap / validate_world.
WorldDescription world_from_json(const nlohmann::json& doc);
WorldDescription load_world_file(const std::string& path);

nlohmann::json obstacle_to_json(const Obstacle& obstacle);
nlohmann::json vec_to_json(Vec3 v);
Vec3 vec_from_json(const nlohmann::json& j);

}  // namespace uavllm
