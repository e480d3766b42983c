#include <cstdlib>
#include <cstring>

#include "ddc/simd/kernels.hpp"

namespace ddc::simd {

#if DDC_HAVE_AVX2
const KernelTable& avx2_kernel_table();
#endif

const char* to_string(Backend backend) {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

const KernelTable* avx2_kernels() {
#if DDC_HAVE_AVX2
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active_kernels() {
  static const KernelTable* table = [] {
    const char* forced = std::getenv("DDC_SIMD");
    if (forced != nullptr && std::strcmp(forced, "scalar") == 0) return &scalar_kernels();
    const KernelTable* avx2 = avx2_kernels();
    return avx2 != nullptr ? avx2 : &scalar_kernels();
  }();
  return *table;
}

}  // namespace ddc::simd
