#pragma once

// Data-parallel inner loops: random-feature sums and squared-exponential
// kernel sums. Each entry has a scalar reference implementation and, on x86-64,
// an AVX2+FMA variant. The active table is chosen once at runtime from CPUID
// and can be pinned with the PRIORBO_SIMD environment variable
// ("scalar" or "avx2").

#include <cstddef>
#include <string_view>

namespace priorbo::simd {

/// Feature bank: frequencies are stored dimension-major,
/// frequencies[d * count + i] = w_i[d].
struct FeatureView {
  const double* frequencies;
  const double* phases;
  std::size_t count;
  std::size_t dim;
};

/// Point set stored dimension-major, coords[d * count + i] = p_i[d]
/// (the layout of a column-major Eigen matrix with one point per row).
struct PointsView {
  const double* coords;
  std::size_t count;
  std::size_t dim;
};

struct KernelTable {
  std::string_view name;

  /// out[i] = amplitude * cos(w_i . x + b_i)
  void (*features)(const FeatureView& f, const double* x, double amplitude, double* out);

  /// sum_i coeff[i] * cos(w_i . x + b_i)
  double (*feature_sum)(const FeatureView& f, const double* coeff, const double* x);

  /// Same value as feature_sum; grad[d] = -sum_i coeff[i] sin(w_i . x + b_i) w_i[d].
  double (*feature_sum_grad)(const FeatureView& f, const double* coeff, const double* x, double* grad);

  /// out[i] = scale * exp(-0.5 * sum_d (x_d - p_i[d])^2 * inv_sq_ls[d])
  void (*se_cross)(const PointsView& p, const double* inv_sq_ls, const double* x, double scale, double* out);

  /// sum_i weights[i] * scale * exp(-0.5 * sum_d (x_d - p_i[d])^2 * inv_sq_ls[d])
  double (*se_weighted_sum)(const PointsView& p, const double* inv_sq_ls, const double* weights, const double* x,
                            double scale);
};

const KernelTable& scalar_kernels() noexcept;

/// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels() noexcept;

/// Table used by the library. Resolved once; thread-safe.
const KernelTable& active_kernels() noexcept;

bool cpu_supports_avx2_fma() noexcept;

}  // namespace priorbo::simd
