#pragma once

#include "priorbo/simd/kernels.hpp"

namespace priorbo::simd::detail {

/// Defined in simd_avx2.cpp when that variant is compiled in.
const KernelTable* avx2_table() noexcept;

}  // namespace priorbo::simd::detail
