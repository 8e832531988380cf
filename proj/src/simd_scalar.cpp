#include <cmath>

#include "priorbo/simd/kernels.hpp"

namespace priorbo::simd {
namespace {

inline double feature_argument(const FeatureView& f, const double* x, std::size_t i) {
  double arg = f.phases[i];
  for (std::size_t d = 0; d < f.dim; ++d) arg += f.frequencies[d * f.count + i] * x[d];
  return arg;
}

void features(const FeatureView& f, const double* x, double amplitude, double* out) {
  for (std::size_t i = 0; i < f.count; ++i) out[i] = amplitude * std::cos(feature_argument(f, x, i));
}

double feature_sum(const FeatureView& f, const double* coeff, const double* x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < f.count; ++i) acc += coeff[i] * std::cos(feature_argument(f, x, i));
  return acc;
}

double feature_sum_grad(const FeatureView& f, const double* coeff, const double* x, double* grad) {
  for (std::size_t d = 0; d < f.dim; ++d) grad[d] = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < f.count; ++i) {
    const double arg = feature_argument(f, x, i);
    acc += coeff[i] * std::cos(arg);
    const double t = coeff[i] * std::sin(arg);
    for (std::size_t d = 0; d < f.dim; ++d) grad[d] -= t * f.frequencies[d * f.count + i];
  }
  return acc;
}

inline double se_exponent(const PointsView& p, const double* inv_sq_ls, const double* x, std::size_t i) {
  double r2 = 0.0;
  for (std::size_t d = 0; d < p.dim; ++d) {
    const double diff = x[d] - p.coords[d * p.count + i];
    r2 += diff * diff * inv_sq_ls[d];
  }
  return -0.5 * r2;
}

void se_cross(const PointsView& p, const double* inv_sq_ls, const double* x, double scale, double* out) {
  for (std::size_t i = 0; i < p.count; ++i) out[i] = scale * std::exp(se_exponent(p, inv_sq_ls, x, i));
}

double se_weighted_sum(const PointsView& p, const double* inv_sq_ls, const double* weights, const double* x,
                       double scale) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.count; ++i) acc += weights[i] * std::exp(se_exponent(p, inv_sq_ls, x, i));
  return scale * acc;
}

constexpr KernelTable kScalar{"scalar", features, feature_sum, feature_sum_grad, se_cross, se_weighted_sum};

}  // namespace

const KernelTable& scalar_kernels() noexcept { return kScalar; }

}  // namespace priorbo::simd
