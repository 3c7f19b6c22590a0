#pragma once

// Independent geometric oracles and random-world generators for tests. None
// of this code is shared with the library's rasterization or planning path.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "uavllm/world.hpp"

namespace oracle {

/// Positive-area overlap via the intersection rectangle's area.
inline bool rect_rect_overlap(const uavllm::Rect& a, const uavllm::Rect& b) {
  const double w = std::min(a.x_hi, b.x_hi) - std::max(a.x_lo, b.x_lo);
  const double h = std::min(a.y_hi, b.y_hi) - std::max(a.y_lo, b.y_lo);
  return w > 0.0 && h > 0.0 && w * h > 0.0;
}

/// Positive-area overlap of an open disc with a closed rectangle by Voronoi
/// region case analysis (edge bands, then corners).
inline bool disc_rect_overlap(double cx, double cy, double r, const uavllm::Rect& c) {
  const bool in_x_band = cx >= c.x_lo && cx <= c.x_hi;
  const bool in_y_band = cy >= c.y_lo && cy <= c.y_hi;
  if (in_x_band && in_y_band) return true;
  if (in_x_band) return cy > c.y_lo - r && cy < c.y_hi + r;
  if (in_y_band) return cx > c.x_lo - r && cx < c.x_hi + r;
  const double corners[4][2] = {
      {c.x_lo, c.y_lo}, {c.x_hi, c.y_lo}, {c.x_lo, c.y_hi}, {c.x_hi, c.y_hi}};
  for (const auto& k : corners) {
    if (std::hypot(k[0] - cx, k[1] - cy) < r) return true;
  }
  return false;
}

inline bool footprint_overlaps_cell(const uavllm::Obstacle& ob, const uavllm::Rect& cell) {
  if (ob.is_cube()) {
    const auto& c = ob.cube();
    const uavllm::Rect fp{c.center.x - c.size.x / 2, c.center.x + c.size.x / 2,
                          c.center.y - c.size.y / 2, c.center.y + c.size.y / 2};
    return rect_rect_overlap(fp, cell);
  }
  const auto& s = ob.sphere();
  return disc_rect_overlap(s.center.x, s.center.y, s.radius, cell);
}

/// Expected (occupancy, height) of a rectangle against a set of obstacles.
inline std::pair<int, double> expected_cell(const std::vector<uavllm::Obstacle>& obs,
                                            const uavllm::Rect& cell) {
  int occ = 0;
  double h = 0.0;
  for (const auto& ob : obs) {
    if (footprint_overlaps_cell(ob, cell)) {
      occ = 1;
      h = std::max(h, ob.top());
    }
  }
  return {occ, h};
}

/// Random world: 20 x 20 m, 1 m cells, up to `max_obstacles` cubes/spheres.
inline uavllm::WorldDescription random_world(std::mt19937_64& rng, int max_obstacles = 5) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> count(0, max_obstacles);
  uavllm::WorldDescription w;
  w.extent = {0.0, 20.0, 0.0, 20.0, 20.0};
  w.resolution = 1.0;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    uavllm::Obstacle ob;
    ob.id = "ob-" + std::to_string(i);
    ob.clearance = 0.5 * unit(rng);
    if (unit(rng) < 0.5) {
      const uavllm::Vec3 size{0.3 + 5.0 * unit(rng), 0.3 + 5.0 * unit(rng), 0.5 + 8.0 * unit(rng)};
      const uavllm::Vec3 center{size.x / 2 + (20.0 - size.x) * unit(rng),
                                size.y / 2 + (20.0 - size.y) * unit(rng), size.z / 2};
      ob.shape = uavllm::Cube{center, size};
    } else {
      const double r = 0.2 + 3.0 * unit(rng);
      const uavllm::Vec3 center{r + (20.0 - 2 * r) * unit(rng), r + (20.0 - 2 * r) * unit(rng),
                                r + 4.0 * unit(rng)};
      ob.shape = uavllm::Sphere{center, r};
    }
    w.obstacles.push_back(ob);
  }
  return w;
}

/// Brute-force closest approach of a polyline to a point: dense sampling plus
/// the analytic foot of the perpendicular per segment.
inline double polyline_min_distance(const std::vector<uavllm::Vec3>& pts, uavllm::Vec3 c) {
  double best = INFINITY;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto a = pts[i];
    const auto b = pts[i + 1];
    for (int k = 0; k <= 200; ++k) {
      const double t = k / 200.0;
      const uavllm::Vec3 p{a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, a.z + (b.z - a.z) * t};
      best = std::min(best, std::sqrt((p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y) +
                                      (p.z - c.z) * (p.z - c.z)));
    }
  }
  if (pts.size() == 1) {
    const auto p = pts[0];
    best = std::sqrt((p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y) + (p.z - c.z) * (p.z - c.z));
  }
  return best;
}

}  // namespace oracle
