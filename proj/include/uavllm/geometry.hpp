#pragma once

#include <array>
#include <cmath>

namespace uavllm {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a * s; }
  friend constexpr bool operator==(Vec3 a, Vec3 b) = default;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double norm_xy() const { return std::hypot(x, y); }
};

inline double distance(Vec3 a, Vec3 b) { return (a - b).norm(); }
inline double distance_xy(Vec3 a, Vec3 b) { return (a - b).norm_xy(); }

/// Closed axis-aligned box.
struct Box {
  Vec3 lo;
  Vec3 hi;
};

/// Closed axis-aligned rectangle in the xy plane.
struct Rect {
  double x_lo = 0.0;
  double x_hi = 0.0;
  double y_lo = 0.0;
  double y_hi = 0.0;

  Rect inflated(double m) const { return {x_lo - m, x_hi + m, y_lo - m, y_hi + m}; }
  bool contains(double x, double y) const {
    return x >= x_lo && x <= x_hi && y >= y_lo && y <= y_hi;
  }
};

/// Parameter of the point on segment [a, b] closest to p, clamped to [0, 1].
double closest_parameter(Vec3 p, Vec3 a, Vec3 b);
double point_segment_distance(Vec3 p, Vec3 a, Vec3 b);
/// Same as above, ignoring z.
double point_segment_distance_xy(Vec3 p, Vec3 a, Vec3 b);

/// Exact minimum distance between segment [a, b] and a closed box. The squared
/// distance is piecewise quadratic in the segment parameter with breaks at the
/// slab planes, so each piece is minimised in closed form.
double segment_box_distance(Vec3 a, Vec3 b, const Box& box);

/// True when the closed segment and the closed box share a point.
bool segment_intersects_box(Vec3 a, Vec3 b, const Box& box);

/// True when the closed 2D segment (xy of a, b) and the closed rectangle share
/// a point.
bool segment_intersects_rect_xy(Vec3 a, Vec3 b, const Rect& r);

/// Normalise an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace uavllm
