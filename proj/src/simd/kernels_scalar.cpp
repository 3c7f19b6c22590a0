#include <limits>

#include "uavllm/simd/kernels.hpp"

namespace uavllm::simd {

void overlap_row_scalar(const Footprint& f, const CellRow& row, std::span<std::uint8_t> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double lo = row.x0 + static_cast<double>(i) * row.cell_w;
    const double hi = row.x0 + static_cast<double>(i + 1) * row.cell_w;
    out[i] = footprint_overlaps(f, lo, hi, row.y_lo, row.y_hi) ? 1 : 0;
  }
}

double min_distance_sq_scalar(std::span<const double> xs, std::span<const double> ys,
                              std::span<const double> zs, Vec3 center) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - center.x;
    const double dy = ys[i] - center.y;
    const double dz = zs[i] - center.z;
    const double d2 = dx * dx + dy * dy + dz * dz;
    if (d2 < best) best = d2;
  }
  return best;
}

}  // namespace uavllm::simd
