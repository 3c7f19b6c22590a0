#include <cstdlib>
#include <cstring>

#include "uavllm/simd/kernels.hpp"

namespace uavllm::simd {

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", &overlap_row_scalar, &min_distance_sq_scalar};
  return table;
}

const KernelTable* avx2_kernels() {
#if UAVLLM_SIMD_X86 && (defined(__GNUC__) || defined(__clang__))
  static const bool supported = __builtin_cpu_supports("avx2");
  static const KernelTable table{"avx2", &overlap_row_avx2, &min_distance_sq_avx2};
  return supported ? &table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active_kernels() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* force = std::getenv("UAVLLM_FORCE_SCALAR");
    const bool forced = force != nullptr && std::strcmp(force, "0") != 0 && *force != '\0';
    if (!forced) {
      if (const KernelTable* fast = avx2_kernels()) return *fast;
    }
    return scalar_kernels();
  }();
  return chosen;
}

}  // namespace uavllm::simd
