#include <cstdlib>
#include <cstring>

#include "priorbo/simd/kernels.hpp"
#include "simd_internal.hpp"

namespace priorbo::simd {

bool cpu_supports_avx2_fma() noexcept {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* avx2_kernels() noexcept {
#ifdef PRIORBO_HAVE_AVX2
  if (cpu_supports_avx2_fma()) return detail::avx2_table();
#endif
  return nullptr;
}

namespace {

const KernelTable& resolve() noexcept {
  const char* pinned = std::getenv("PRIORBO_SIMD");
  if (pinned != nullptr && std::strcmp(pinned, "scalar") == 0) return scalar_kernels();
  if (const KernelTable* t = avx2_kernels()) return *t;
  return scalar_kernels();
}

}  // namespace

const KernelTable& active_kernels() noexcept {
  static const KernelTable& table = resolve();
  return table;
}

}  // namespace priorbo::simd
