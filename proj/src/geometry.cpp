#include "uavllm/geometry.hpp"

#include <algorithm>
#include <numbers>
#include <vector>

namespace uavllm {

double closest_parameter(Vec3 p, Vec3 a, Vec3 b) {
  const Vec3 d = b - a;
  const double len2 = d.x * d.x + d.y * d.y + d.z * d.z;
  if (len2 == 0.0) return 0.0;
  const Vec3 w = p - a;
  const double t = (w.x * d.x + w.y * d.y + w.z * d.z) / len2;
  return std::clamp(t, 0.0, 1.0);
}

double point_segment_distance(Vec3 p, Vec3 a, Vec3 b) {
  const double t = closest_parameter(p, a, b);
  return distance(p, a + (b - a) * t);
}

double point_segment_distance_xy(Vec3 p, Vec3 a, Vec3 b) {
  return point_segment_distance({p.x, p.y, 0.0}, {a.x, a.y, 0.0}, {b.x, b.y, 0.0});
}

namespace {

double axis_gap(double v, double lo, double hi) {
  if (v < lo) return lo - v;
  if (v > hi) return v - hi;
  return 0.0;
}

double box_distance_sq(Vec3 p, const Box& box) {
  const double gx = axis_gap(p.x, box.lo.x, box.hi.x);
  const double gy = axis_gap(p.y, box.lo.y, box.hi.y);
  const double gz = axis_gap(p.z, box.lo.z, box.hi.z);
  return gx * gx + gy * gy + gz * gz;
}

}  // namespace

double segment_box_distance(Vec3 a, Vec3 b, const Box& box) {
  const Vec3 d = b - a;
  const std::array<double, 3> p0{a.x, a.y, a.z};
  const std::array<double, 3> dv{d.x, d.y, d.z};
  const std::array<double, 3> lo{box.lo.x, box.lo.y, box.lo.z};
  const std::array<double, 3> hi{box.hi.x, box.hi.y, box.hi.z};

  std::vector<double> breaks{0.0, 1.0};
  for (int k = 0; k < 3; ++k) {
    if (dv[k] == 0.0) continue;
    for (double plane : {lo[k], hi[k]}) {
      const double t = (plane - p0[k]) / dv[k];
      if (t > 0.0 && t < 1.0) breaks.push_back(t);
    }
  }
  std::sort(breaks.begin(), breaks.end());

  auto at = [&](double t) { return a + d * t; };
  double best = box_distance_sq(a, box);
  best = std::min(best, box_distance_sq(b, box));
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double t0 = breaks[i];
    const double t1 = breaks[i + 1];
    if (t1 <= t0) continue;
    // Within a piece each axis is either inside its slab (zero contribution)
    // or on a fixed side of it (quadratic contribution).
    const Vec3 mid = at(0.5 * (t0 + t1));
    const std::array<double, 3> m{mid.x, mid.y, mid.z};
    double qa = 0.0;  // coefficient of t^2
    double qb = 0.0;  // coefficient of t
    for (int k = 0; k < 3; ++k) {
      double bound;
      if (m[k] < lo[k]) {
        bound = lo[k];
      } else if (m[k] > hi[k]) {
        bound = hi[k];
      } else {
        continue;
      }
      const double c = p0[k] - bound;
      qa += dv[k] * dv[k];
      qb += 2.0 * dv[k] * c;
    }
    best = std::min(best, box_distance_sq(at(t0), box));
    best = std::min(best, box_distance_sq(at(t1), box));
    if (qa > 0.0) {
      const double t = std::clamp(-qb / (2.0 * qa), t0, t1);
      best = std::min(best, box_distance_sq(at(t), box));
    }
  }
  return std::sqrt(best);
}

bool segment_intersects_box(Vec3 a, Vec3 b, const Box& box) {
  const Vec3 d = b - a;
  const std::array<double, 3> p0{a.x, a.y, a.z};
  const std::array<double, 3> dv{d.x, d.y, d.z};
  const std::array<double, 3> lo{box.lo.x, box.lo.y, box.lo.z};
  const std::array<double, 3> hi{box.hi.x, box.hi.y, box.hi.z};
  double t_enter = 0.0;
  double t_exit = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (dv[k] == 0.0) {
      if (p0[k] < lo[k] || p0[k] > hi[k]) return false;
      continue;
    }
    double t0 = (lo[k] - p0[k]) / dv[k];
    double t1 = (hi[k] - p0[k]) / dv[k];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
    if (t_enter > t_exit) return false;
  }
  return true;
}

bool segment_intersects_rect_xy(Vec3 a, Vec3 b, const Rect& r) {
  // Infinite z slab reduces the box test to 2D.
  const Box box{{r.x_lo, r.y_lo, -1.0}, {r.x_hi, r.y_hi, 1.0}};
  return segment_intersects_box({a.x, a.y, 0.0}, {b.x, b.y, 0.0}, box);
}

double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

}  // namespace uavllm
