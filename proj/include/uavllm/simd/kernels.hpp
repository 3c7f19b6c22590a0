#pragma once

// Data-parallel inner loops shared by grid rasterization and trajectory
// metrics. Each kernel has a scalar reference and, on x86-64, an AVX2 variant
// that must produce bit-identical results. The variant is picked once at
// runtime from CPUID; set UAVLLM_FORCE_SCALAR=1 to pin the reference path.

#include <cstdint>
#include <span>
#include <string_view>

#include "uavllm/geometry.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define UAVLLM_SIMD_X86 1
#else
#define UAVLLM_SIMD_X86 0
#endif

namespace uavllm::simd {

/// xy footprint of an obstacle. Rect uses (a, b, c, d) = (x_lo, x_hi, y_lo,
/// y_hi); Disc uses (a, b, c) = (center x, center y, radius).
struct Footprint {
  enum class Kind : std::uint8_t { kRect, kDisc };
  Kind kind = Kind::kRect;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  static Footprint rect(const Rect& r) { return {Kind::kRect, r.x_lo, r.x_hi, r.y_lo, r.y_hi}; }
  static Footprint disc(double cx, double cy, double radius) {
    return {Kind::kDisc, cx, cy, radius, 0.0};
  }
};

/// One row of equally sized cells: cell i spans
/// [x0 + i*cell_w, x0 + (i+1)*cell_w] x [y_lo, y_hi].
struct CellRow {
  double x0 = 0.0;
  double cell_w = 1.0;
  double y_lo = 0.0;
  double y_hi = 1.0;
};

/// Positive-area overlap between a footprint and one closed cell rectangle.
/// Touching along an edge or at a corner is not an overlap.
inline bool footprint_overlaps(const Footprint& f, double x_lo, double x_hi, double y_lo,
                               double y_hi) {
  if (f.kind == Footprint::Kind::kRect) {
    return f.a < x_hi && x_lo < f.b && f.c < y_hi && y_lo < f.d;
  }
  const double dx0 = x_lo - f.a;
  const double dx1 = f.a - x_hi;
  const double dx = dx0 > dx1 ? (dx0 > 0.0 ? dx0 : 0.0) : (dx1 > 0.0 ? dx1 : 0.0);
  const double dy0 = y_lo - f.b;
  const double dy1 = f.b - y_hi;
  const double dy = dy0 > dy1 ? (dy0 > 0.0 ? dy0 : 0.0) : (dy1 > 0.0 ? dy1 : 0.0);
  const double dy2 = dy * dy;
  return dx * dx + dy2 < f.c * f.c;
}

using OverlapRowFn = void (*)(const Footprint&, const CellRow&, std::span<std::uint8_t>);
using MinDistanceSqFn = double (*)(std::span<const double>, std::span<const double>,
                                   std::span<const double>, Vec3);

struct KernelTable {
  std::string_view name;
  /// out[i] = 1 when the footprint overlaps cell i of the row, else 0.
  OverlapRowFn overlap_row;
  /// Minimum squared distance from (xs[i], ys[i], zs[i]) to center; +inf when
  /// the inputs are empty. All three spans must have equal length.
  MinDistanceSqFn min_distance_sq;
};

void overlap_row_scalar(const Footprint& f, const CellRow& row, std::span<std::uint8_t> out);
double min_distance_sq_scalar(std::span<const double> xs, std::span<const double> ys,
                              std::span<const double> zs, Vec3 center);

#if UAVLLM_SIMD_X86
void overlap_row_avx2(const Footprint& f, const CellRow& row, std::span<std::uint8_t> out);
double min_distance_sq_avx2(std::span<const double> xs, std::span<const double> ys,
                            std::span<const double> zs, Vec3 center);
#endif

const KernelTable& scalar_kernels();
/// nullptr when the CPU (or build target) has no AVX2.
const KernelTable* avx2_kernels();
/// The table used by the library: AVX2 when available and not forced off.
const KernelTable& active_kernels();

}  // namespace uavllm::simd
