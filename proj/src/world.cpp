#include "uavllm/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "uavllm/error.hpp"

namespace uavllm {

namespace {

constexpr double kGeomEps = 1e-9;

int cell_count(double span, double resolution, const char* axis) {
  const double n = span / resolution;
  const double rounded = std::round(n);
  if (rounded < 1.0 || std::abs(n - rounded) > 1e-9 * std::max(1.0, n)) {
    throw Error(ErrorCode::kNonDivisibleExtent,
                std::string("resolution does not divide the ") + axis + " extent");
  }
  return static_cast<int>(rounded);
}

void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void serialize_cell(const Cell& c, std::string& out) {
  out += c.occupancy ? '1' : '0';
  out += ',';
  append_number(out, c.height);
  if (c.refined()) {
    out += '(';
    for (const Cell& child : c.children) serialize_cell(child, out);
    out += ')';
  }
  out += ';';
}

// Rasterizes a 2^depth x 2^depth block of leaves over `rect` and folds them
// into a quadtree of the given depth.
Cell rasterize_block(const Rect& rect, int depth, const std::vector<Obstacle>& obstacles) {
  const int n = 1 << depth;
  const double leaf_w = (rect.x_hi - rect.x_lo) / n;
  const double leaf_h = (rect.y_hi - rect.y_lo) / n;
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(n) * n, 0);
  std::vector<double> height(occ.size(), 0.0);
  std::vector<std::uint8_t> row_mask(static_cast<std::size_t>(n));
  const auto& kernels = simd::active_kernels();
  for (const Obstacle& ob : obstacles) {
    const simd::Footprint fp = ob.footprint();
    const double top = ob.top();
    for (int j = 0; j < n; ++j) {
      const simd::CellRow row{rect.x_lo, leaf_w, rect.y_lo + j * leaf_h,
                              rect.y_lo + (j + 1) * leaf_h};
      kernels.overlap_row(fp, row, row_mask);
      for (int i = 0; i < n; ++i) {
        if (!row_mask[i]) continue;
        const std::size_t k = static_cast<std::size_t>(j) * n + i;
        occ[k] = 1;
        height[k] = std::max(height[k], top);
      }
    }
  }

  // Build bottom-up: level nodes indexed like the leaf array.
  std::vector<Cell> level(occ.size());
  for (std::size_t k = 0; k < occ.size(); ++k) {
    level[k].occupancy = occ[k];
    level[k].height = height[k];
  }
  for (int size = n; size > 1; size /= 2) {
    const int half = size / 2;
    std::vector<Cell> up(static_cast<std::size_t>(half) * half);
    for (int j = 0; j < half; ++j) {
      for (int i = 0; i < half; ++i) {
        Cell parent;
        parent.children = {std::move(level[(2 * j) * size + 2 * i]),
                           std::move(level[(2 * j) * size + 2 * i + 1]),
                           std::move(level[(2 * j + 1) * size + 2 * i]),
                           std::move(level[(2 * j + 1) * size + 2 * i + 1])};
        for (const Cell& c : parent.children) {
          parent.occupancy |= c.occupancy;
          parent.height = std::max(parent.height, c.height);
        }
        up[static_cast<std::size_t>(j) * half + i] = std::move(parent);
      }
    }
    level = std::move(up);
  }
  return std::move(level.front());
}

}  // namespace

double Obstacle::top() const {
  if (is_cube()) return cube().center.z + 0.5 * cube().size.z;
  return sphere().center.z + sphere().radius;
}

double Obstacle::bottom() const {
  if (is_cube()) return cube().center.z - 0.5 * cube().size.z;
  return sphere().center.z - sphere().radius;
}

Rect Obstacle::footprint_bounds() const {
  if (is_cube()) {
    const Cube& c = cube();
    return {c.center.x - 0.5 * c.size.x, c.center.x + 0.5 * c.size.x, c.center.y - 0.5 * c.size.y,
            c.center.y + 0.5 * c.size.y};
  }
  const Sphere& s = sphere();
  return {s.center.x - s.radius, s.center.x + s.radius, s.center.y - s.radius,
          s.center.y + s.radius};
}

simd::Footprint Obstacle::footprint() const {
  if (is_cube()) return simd::Footprint::rect(footprint_bounds());
  return simd::Footprint::disc(sphere().center.x, sphere().center.y, sphere().radius);
}

Box Obstacle::box() const {
  const Rect r = footprint_bounds();
  return {{r.x_lo, r.y_lo, bottom()}, {r.x_hi, r.y_hi, top()}};
}

const Cell& GridMap::cell(CellIndex idx) const {
  if (!has_cell(idx)) {
    throw Error(ErrorCode::kCellNotFound, "cell (" + std::to_string(idx.ix) + ", " +
                                              std::to_string(idx.iy) + ") does not exist");
  }
  return cells_[static_cast<std::size_t>(idx.iy) * nx_ + idx.ix];
}

Rect GridMap::cell_rect(CellIndex idx) const {
  return {extent_.x_min + idx.ix * resolution_, extent_.x_min + (idx.ix + 1) * resolution_,
          extent_.y_min + idx.iy * resolution_, extent_.y_min + (idx.iy + 1) * resolution_};
}

CellIndex GridMap::locate(double x, double y) const {
  if (!extent_.contains_xy(x, y)) {
    throw Error(ErrorCode::kOutOfBounds, "position outside world extent");
  }
  int ix = static_cast<int>(std::floor((x - extent_.x_min) / resolution_));
  int iy = static_cast<int>(std::floor((y - extent_.y_min) / resolution_));
  ix = std::clamp(ix, 0, nx_ - 1);
  iy = std::clamp(iy, 0, ny_ - 1);
  // floor() can land one cell off near boundaries; settle against the exact
  // cell bounds used for rasterization.
  if (ix > 0 && x < cell_rect({ix, iy}).x_lo) --ix;
  if (ix + 1 < nx_ && x >= cell_rect({ix + 1, iy}).x_lo) ++ix;
  if (iy > 0 && y < cell_rect({ix, iy}).y_lo) --iy;
  if (iy + 1 < ny_ && y >= cell_rect({ix, iy + 1}).y_lo) ++iy;
  return {ix, iy};
}

namespace {

const Cell& deepest(const GridMap& map, double x, double y) {
  const CellIndex idx = map.locate(x, y);
  const Cell* c = &map.cell(idx);
  const Rect r = map.cell_rect(idx);
  double u = (x - r.x_lo) / (r.x_hi - r.x_lo);
  double v = (y - r.y_lo) / (r.y_hi - r.y_lo);
  while (c->refined()) {
    const int cx = u >= 0.5 ? 1 : 0;
    const int cy = v >= 0.5 ? 1 : 0;
    u = u * 2.0 - cx;
    v = v * 2.0 - cy;
    c = &c->children[cy * 2 + cx];
  }
  return *c;
}

}  // namespace

double GridMap::height_at(double x, double y) const { return deepest(*this, x, y).height; }

int GridMap::occupied_count() const {
  return static_cast<int>(
      std::count_if(cells_.begin(), cells_.end(), [](const Cell& c) { return c.occupancy != 0; }));
}

std::string GridMap::digest() const {
  std::string canon = "grid/1;";
  for (double v : {extent_.x_min, extent_.x_max, extent_.y_min, extent_.y_max, extent_.z_ceiling,
                   resolution_}) {
    append_number(canon, v);
    canon += ';';
  }
  canon += std::to_string(nx_) + ';' + std::to_string(ny_) + ';';
  for (const Cell& c : cells_) serialize_cell(c, canon);

  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string GridMap::to_csv() const {
  std::ostringstream out;
  for (int iy = ny_ - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < nx_; ++ix) {
      if (ix) out << ',';
      out << static_cast<int>(cell({ix, iy}).occupancy);
    }
    out << '\n';
  }
  return out.str();
}

void validate_world(const WorldExtent& extent, double resolution,
                    const std::vector<Obstacle>& obstacles) {
  if (!(extent.x_min < extent.x_max) || !(extent.y_min < extent.y_max) ||
      !(extent.z_ceiling > 0.0)) {
    throw Error(ErrorCode::kInvalidWorld, "world extent is empty or has non-positive ceiling");
  }
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw Error(ErrorCode::kInvalidWorld, "resolution must be positive");
  }
  cell_count(extent.x_max - extent.x_min, resolution, "x");
  cell_count(extent.y_max - extent.y_min, resolution, "y");

  std::set<std::string> ids;
  for (const Obstacle& ob : obstacles) {
    if (ob.id.empty() || !ids.insert(ob.id).second) {
      throw Error(ErrorCode::kInvalidWorld, "obstacle ids must be unique and non-empty: '" +
                                                ob.id + "'");
    }
    const bool positive = ob.is_cube()
                              ? (ob.cube().size.x > 0 && ob.cube().size.y > 0 && ob.cube().size.z > 0)
                              : ob.sphere().radius > 0;
    if (!positive || !(ob.clearance >= 0.0)) {
      throw Error(ErrorCode::kInvalidWorld, "obstacle " + ob.id + " has non-positive dimensions");
    }
    const Rect r = ob.footprint_bounds();
    if (r.x_lo < extent.x_min - kGeomEps || r.x_hi > extent.x_max + kGeomEps ||
        r.y_lo < extent.y_min - kGeomEps || r.y_hi > extent.y_max + kGeomEps ||
        ob.bottom() < -kGeomEps || ob.top() > extent.z_ceiling + kGeomEps) {
      throw Error(ErrorCode::kObstacleOutOfBounds, "obstacle " + ob.id + " exceeds world extent");
    }
  }
}

GridMap build_gridmap(const WorldExtent& extent, double resolution,
                      const std::vector<Obstacle>& obstacles) {
  validate_world(extent, resolution, obstacles);
  GridMap map;
  map.extent_ = extent;
  map.resolution_ = resolution;
  map.nx_ = cell_count(extent.x_max - extent.x_min, resolution, "x");
  map.ny_ = cell_count(extent.y_max - extent.y_min, resolution, "y");
  map.obstacles_ = obstacles;
  map.cells_.assign(static_cast<std::size_t>(map.nx_) * map.ny_, Cell{});

  const auto& kernels = simd::active_kernels();
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(map.nx_));
  for (const Obstacle& ob : obstacles) {
    const simd::Footprint fp = ob.footprint();
    const Rect bounds = ob.footprint_bounds();
    const double top = ob.top();
    const int iy_lo = std::max(
        0, static_cast<int>(std::floor((bounds.y_lo - extent.y_min) / resolution)) - 1);
    const int iy_hi = std::min(
        map.ny_ - 1, static_cast<int>(std::floor((bounds.y_hi - extent.y_min) / resolution)) + 1);
    for (int iy = iy_lo; iy <= iy_hi; ++iy) {
      const Rect r = map.cell_rect({0, iy});
      kernels.overlap_row(fp, {extent.x_min, resolution, r.y_lo, r.y_hi}, mask);
      for (int ix = 0; ix < map.nx_; ++ix) {
        if (!mask[ix]) continue;
        Cell& c = map.cells_[static_cast<std::size_t>(iy) * map.nx_ + ix];
        c.occupancy = 1;
        c.height = std::max(c.height, top);
      }
    }
  }
  return map;
}

GridMap refine_cell(const GridMap& map, CellIndex cell, int depth) {
  if (!map.has_cell(cell)) {
    throw Error(ErrorCode::kCellNotFound, "cell (" + std::to_string(cell.ix) + ", " +
                                              std::to_string(cell.iy) + ") does not exist");
  }
  if (depth < 1 || depth > 16) {
    throw Error(ErrorCode::kInvalidArguments, "refinement depth must be in [1, 16]");
  }
  GridMap out = map;
  out.cells_[static_cast<std::size_t>(cell.iy) * map.nx_ + cell.ix] =
      rasterize_block(map.cell_rect(cell), depth, map.obstacles_);
  return out;
}

std::uint8_t query_occupancy(const GridMap& map, Vec3 position) {
  const Cell& c = deepest(map, position.x, position.y);
  if (!c.occupancy) return 0;
  return position.z <= c.height ? 1 : 0;
}

double segment_obstacle_distance(const Obstacle& obstacle, Vec3 a, Vec3 b) {
  if (obstacle.is_cube()) {
    const Box box = obstacle.box();
    if (segment_intersects_box(a, b, box)) return 0.0;
    return segment_box_distance(a, b, box);
  }
  const Sphere& s = obstacle.sphere();
  return std::max(0.0, point_segment_distance(s.center, a, b) - s.radius);
}

CollisionReport collision_check(const std::vector<Obstacle>& obstacles, Vec3 a, Vec3 b) {
  CollisionReport report;
  report.min_solid_distance = std::numeric_limits<double>::infinity();
  for (const Obstacle& ob : obstacles) {
    bool hit;
    double gap;
    if (ob.is_cube()) {
      const Box box = ob.box();
      hit = segment_intersects_box(a, b, box);
      gap = hit ? 0.0 : segment_box_distance(a, b, box);
    } else {
      const Sphere& s = ob.sphere();
      const double d = point_segment_distance(s.center, a, b);
      hit = d <= s.radius;
      gap = hit ? 0.0 : d - s.radius;
    }
    report.min_solid_distance = std::min(report.min_solid_distance, gap);
    if (hit) {
      report.collisions.push_back(ob.id);
    } else if (gap < ob.clearance - kGeomEps) {
      report.clearance_violations.push_back(ob.id);
    }
  }
  return report;
}

const Obstacle* WorldDescription::find(const std::string& id) const {
  for (const Obstacle& ob : obstacles) {
    if (ob.id == id) return &ob;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Grid self-check

namespace {

/// Positive-area overlap of a footprint with a cell, from the clamped
/// centre-to-rectangle distance for discs and the overlap extents for boxes.
bool cell_overlaps(const Obstacle& ob, const Rect& cell) {
  if (ob.is_cube()) {
    const Rect f = ob.footprint_bounds();
    return std::min(f.x_hi, cell.x_hi) > std::max(f.x_lo, cell.x_lo) &&
           std::min(f.y_hi, cell.y_hi) > std::max(f.y_lo, cell.y_lo);
  }
  const Sphere& s = ob.sphere();
  const double dx = std::max({cell.x_lo - s.center.x, 0.0, s.center.x - cell.x_hi});
  const double dy = std::max({cell.y_lo - s.center.y, 0.0, s.center.y - cell.y_hi});
  return dx * dx + dy * dy < s.radius * s.radius;
}

}  // namespace

GridCheck check_grid(const WorldDescription& world) {
  const GridMap grid = world.rasterize();
  GridCheck check;
  check.nx = grid.nx();
  check.ny = grid.ny();
  check.occupied = grid.occupied_count();
  check.digest = grid.digest();
  for (const Obstacle& ob : world.obstacles) check.cells_per_obstacle.emplace_back(ob.id, 0);
  for (int iy = 0; iy < grid.ny(); ++iy) {
    for (int ix = 0; ix < grid.nx(); ++ix) {
      const Rect r = grid.cell_rect({ix, iy});
      bool expected = false;
      for (std::size_t i = 0; i < world.obstacles.size(); ++i) {
        if (cell_overlaps(world.obstacles[i], r)) {
          expected = true;
          ++check.cells_per_obstacle[i].second;
        }
      }
      if (expected != (grid.cell({ix, iy}).occupancy != 0)) check.mismatches.push_back({ix, iy});
    }
  }
  return check;
}

nlohmann::json grid_check_to_json(const GridCheck& check) {
  nlohmann::json mismatches = nlohmann::json::array();
  for (const CellIndex& c : check.mismatches) mismatches.push_back({c.ix, c.iy});
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [id, n] : check.cells_per_obstacle) per[id] = n;
  return {{"ok", check.ok()},
          {"nx", check.nx},
          {"ny", check.ny},
          {"occupied_cells", check.occupied},
          {"digest", check.digest},
          {"cells_per_obstacle", per},
          {"mismatches", mismatches}};
}

}  // namespace uavllm
