// Compiled with -mavx2 only; never called unless CPUID reports AVX2.

#include <immintrin.h>

#include <limits>

#include "uavllm/simd/kernels.hpp"

namespace uavllm::simd {

namespace {

inline __m256d max0(__m256d a, __m256d b) {
  // Mirrors the scalar select chain so ties and signed zeros agree.
  const __m256d zero = _mm256_setzero_pd();
  const __m256d a_pos = _mm256_blendv_pd(zero, a, _mm256_cmp_pd(a, zero, _CMP_GT_OQ));
  const __m256d b_pos = _mm256_blendv_pd(zero, b, _mm256_cmp_pd(b, zero, _CMP_GT_OQ));
  return _mm256_blendv_pd(b_pos, a_pos, _mm256_cmp_pd(a, b, _CMP_GT_OQ));
}

}  // namespace

void overlap_row_avx2(const Footprint& f, const CellRow& row, std::span<std::uint8_t> out) {
  const std::size_t n = out.size();
  const __m256d x0 = _mm256_set1_pd(row.x0);
  const __m256d w = _mm256_set1_pd(row.cell_w);
  const __m256d step = _mm256_set1_pd(4.0);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d idx = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);

  std::size_t i = 0;
  if (f.kind == Footprint::Kind::kRect) {
    const bool y_ok = f.c < row.y_hi && row.y_lo < f.d;
    if (!y_ok) {
      for (std::size_t k = 0; k < n; ++k) out[k] = 0;
      return;
    }
    const __m256d fa = _mm256_set1_pd(f.a);
    const __m256d fb = _mm256_set1_pd(f.b);
    for (; i + 4 <= n; i += 4) {
      const __m256d lo = _mm256_add_pd(x0, _mm256_mul_pd(idx, w));
      const __m256d hi = _mm256_add_pd(x0, _mm256_mul_pd(_mm256_add_pd(idx, one), w));
      const __m256d m = _mm256_and_pd(_mm256_cmp_pd(fa, hi, _CMP_LT_OQ),
                                      _mm256_cmp_pd(lo, fb, _CMP_LT_OQ));
      const int bits = _mm256_movemask_pd(m);
      for (int k = 0; k < 4; ++k) out[i + k] = static_cast<std::uint8_t>((bits >> k) & 1);
      idx = _mm256_add_pd(idx, step);
    }
  } else {
    const double dy0 = row.y_lo - f.b;
    const double dy1 = f.b - row.y_hi;
    const double dy = dy0 > dy1 ? (dy0 > 0.0 ? dy0 : 0.0) : (dy1 > 0.0 ? dy1 : 0.0);
    const __m256d dy2 = _mm256_set1_pd(dy * dy);
    const __m256d cx = _mm256_set1_pd(f.a);
    const __m256d r2 = _mm256_set1_pd(f.c * f.c);
    for (; i + 4 <= n; i += 4) {
      const __m256d lo = _mm256_add_pd(x0, _mm256_mul_pd(idx, w));
      const __m256d hi = _mm256_add_pd(x0, _mm256_mul_pd(_mm256_add_pd(idx, one), w));
      const __m256d dx = max0(_mm256_sub_pd(lo, cx), _mm256_sub_pd(cx, hi));
      const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), dy2);
      const int bits = _mm256_movemask_pd(_mm256_cmp_pd(d2, r2, _CMP_LT_OQ));
      for (int k = 0; k < 4; ++k) out[i + k] = static_cast<std::uint8_t>((bits >> k) & 1);
      idx = _mm256_add_pd(idx, step);
    }
  }
  for (; i < n; ++i) {
    const double lo = row.x0 + static_cast<double>(i) * row.cell_w;
    const double hi = row.x0 + static_cast<double>(i + 1) * row.cell_w;
    out[i] = footprint_overlaps(f, lo, hi, row.y_lo, row.y_hi) ? 1 : 0;
  }
}

double min_distance_sq_avx2(std::span<const double> xs, std::span<const double> ys,
                            std::span<const double> zs, Vec3 center) {
  const std::size_t n = xs.size();
  const __m256d cx = _mm256_set1_pd(center.x);
  const __m256d cy = _mm256_set1_pd(center.y);
  const __m256d cz = _mm256_set1_pd(center.z);
  __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs.data() + i), cx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys.data() + i), cy);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs.data() + i), cz);
    const __m256d d2 = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)),
                                     _mm256_mul_pd(dz, dz));
    best = _mm256_min_pd(best, d2);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, best);
  double result = lanes[0];
  for (int k = 1; k < 4; ++k) {
    if (lanes[k] < result) result = lanes[k];
  }
  for (; i < n; ++i) {
    const double dx = xs[i] - center.x;
    const double dy = ys[i] - center.y;
    const double dz = zs[i] - center.z;
    const double d2 = dx * dx + dy * dy + dz * dz;
    if (d2 < result) result = d2;
  }
  return result;
}

}  // namespace uavllm::simd
