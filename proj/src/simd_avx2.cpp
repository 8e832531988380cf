// Compiled with -mavx2 -mfma. Only reached through the dispatch table after a
// CPUID check, so nothing here may be inlined into generic code.
#include <immintrin.h>

#include <cmath>

#include "priorbo/simd/kernels.hpp"
#include "simd_internal.hpp"

namespace priorbo::simd {
namespace {

constexpr std::size_t kMaxGradDim = 32;

// Cody-Waite split of pi/2 (fdlibm).
constexpr double kPio2Hi = 1.57079632673412561417e+00;
constexpr double kPio2Mid = 6.07710050630396597660e-11;
constexpr double kPio2Lo = 2.02226624879595063154e-21;
constexpr double kTwoOverPi = 6.36619772367581382433e-01;

// Minimax polynomials on [-pi/4, pi/4] (Cephes).
constexpr double kSin[6] = {1.58962301576546568060e-10, -2.50507477628578072866e-8, 2.75573136213857245213e-6,
                            -1.98412698295895385996e-4, 8.33333333332211858878e-3, -1.66666666666666307295e-1};
constexpr double kCos[6] = {-1.13585365213876817300e-11, 2.08757008419747316778e-9, -2.75573141792967388112e-7,
                            2.48015872888517045348e-5,  -1.38888888888730564116e-3, 4.16666666666665929218e-2};

// Integer extraction through the 1.5 * 2^52 rounding constant.
constexpr double kMagic = 6755399441055744.0;

inline __m256d poly5(__m256d z, const double* c) {
  __m256d p = _mm256_set1_pd(c[0]);
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(c[1]));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(c[2]));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(c[3]));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(c[4]));
  return _mm256_fmadd_pd(p, z, _mm256_set1_pd(c[5]));
}

inline void sincos4(__m256d x, __m256d* s_out, __m256d* c_out) {
  const __m256d q = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kTwoOverPi)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(q, _mm256_set1_pd(kPio2Hi), x);
  r = _mm256_fnmadd_pd(q, _mm256_set1_pd(kPio2Mid), r);
  r = _mm256_fnmadd_pd(q, _mm256_set1_pd(kPio2Lo), r);

  const __m256d z = _mm256_mul_pd(r, r);
  const __m256d s = _mm256_fmadd_pd(_mm256_mul_pd(r, z), poly5(z, kSin), r);
  __m256d c = _mm256_fmadd_pd(_mm256_mul_pd(z, z), poly5(z, kCos), _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z, _mm256_set1_pd(1.0)));

  const __m256i qi = _mm256_castpd_si256(_mm256_add_pd(q, _mm256_set1_pd(kMagic)));
  const __m256i one = _mm256_set1_epi64x(1);
  const __m256i two = _mm256_set1_epi64x(2);
  const __m256d swap = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(qi, one), one));
  const __m256i sin_neg = _mm256_slli_epi64(_mm256_and_si256(qi, two), 62);
  const __m256i cos_neg = _mm256_slli_epi64(_mm256_and_si256(_mm256_add_epi64(qi, one), two), 62);

  const __m256d sv = _mm256_blendv_pd(s, c, swap);
  const __m256d cv = _mm256_blendv_pd(c, s, swap);
  *s_out = _mm256_xor_pd(sv, _mm256_castsi256_pd(sin_neg));
  *c_out = _mm256_xor_pd(cv, _mm256_castsi256_pd(cos_neg));
}

inline __m256d cos4(__m256d x) {
  __m256d s, c;
  sincos4(x, &s, &c);
  return c;
}

// exp for x <= 0 (kernel exponents); values below -708 flush to zero.
constexpr double kLog2e = 1.4426950408889634073599;
constexpr double kLn2Hi = 6.93145751953125e-1;
constexpr double kLn2Lo = 1.42860682030941723212e-6;
constexpr double kExpP[3] = {1.26177193074810590878e-4, 3.02994407707441961300e-2, 9.99999999999999999910e-1};
constexpr double kExpQ[4] = {3.00198505138664455042e-6, 2.52448340349684104192e-3, 2.27265548208155028766e-1,
                             2.00000000000000000009e0};

inline __m256d exp4(__m256d x) {
  const __m256d underflow = _mm256_cmp_pd(x, _mm256_set1_pd(-708.0), _CMP_LT_OQ);
  x = _mm256_max_pd(x, _mm256_set1_pd(-708.0));
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kLog2e)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kLn2Hi), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kLn2Lo), r);
  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d p = _mm256_fmadd_pd(_mm256_set1_pd(kExpP[0]), rr, _mm256_set1_pd(kExpP[1]));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(kExpP[2]));
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_fmadd_pd(_mm256_set1_pd(kExpQ[0]), rr, _mm256_set1_pd(kExpQ[1]));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(kExpQ[2]));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(kExpQ[3]));
  const __m256d frac = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  const __m256d mant = _mm256_fmadd_pd(_mm256_set1_pd(2.0), frac, _mm256_set1_pd(1.0));

  const __m256i ni = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, _mm256_set1_pd(kMagic))),
                                      _mm256_castpd_si256(_mm256_set1_pd(kMagic)));
  const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
  const __m256d result = _mm256_mul_pd(mant, _mm256_castsi256_pd(bits));
  return _mm256_andnot_pd(underflow, result);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256d feature_argument4(const FeatureView& f, const double* x, std::size_t i) {
  __m256d arg = _mm256_loadu_pd(f.phases + i);
  for (std::size_t d = 0; d < f.dim; ++d)
    arg = _mm256_fmadd_pd(_mm256_loadu_pd(f.frequencies + d * f.count + i), _mm256_set1_pd(x[d]), arg);
  return arg;
}

inline double feature_argument1(const FeatureView& f, const double* x, std::size_t i) {
  double arg = f.phases[i];
  for (std::size_t d = 0; d < f.dim; ++d) arg = std::fma(f.frequencies[d * f.count + i], x[d], arg);
  return arg;
}

void features(const FeatureView& f, const double* x, double amplitude, double* out) {
  const __m256d amp = _mm256_set1_pd(amplitude);
  std::size_t i = 0;
  for (; i + 4 <= f.count; i += 4) _mm256_storeu_pd(out + i, _mm256_mul_pd(amp, cos4(feature_argument4(f, x, i))));
  for (; i < f.count; ++i) out[i] = amplitude * std::cos(feature_argument1(f, x, i));
}

double feature_sum(const FeatureView& f, const double* coeff, const double* x) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= f.count; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(coeff + i), cos4(feature_argument4(f, x, i)), acc);
  double total = hsum(acc);
  for (; i < f.count; ++i) total += coeff[i] * std::cos(feature_argument1(f, x, i));
  return total;
}

// Fixed-dimension body keeps the gradient accumulators in registers.
template <std::size_t D>
double feature_sum_grad_fixed(const FeatureView& f, const double* coeff, const double* x, double* grad) {
  __m256d gacc[D];
  __m256d xs[D];
  for (std::size_t d = 0; d < D; ++d) {
    gacc[d] = _mm256_setzero_pd();
    xs[d] = _mm256_set1_pd(x[d]);
  }
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= f.count; i += 4) {
    __m256d arg = _mm256_loadu_pd(f.phases + i);
    for (std::size_t d = 0; d < D; ++d) arg = _mm256_fmadd_pd(_mm256_loadu_pd(f.frequencies + d * f.count + i), xs[d], arg);
    __m256d s, c;
    sincos4(arg, &s, &c);
    const __m256d w = _mm256_loadu_pd(coeff + i);
    acc = _mm256_fmadd_pd(w, c, acc);
    const __m256d t = _mm256_mul_pd(w, s);
    for (std::size_t d = 0; d < D; ++d)
      gacc[d] = _mm256_fnmadd_pd(t, _mm256_loadu_pd(f.frequencies + d * f.count + i), gacc[d]);
  }
  double total = hsum(acc);
  for (std::size_t d = 0; d < D; ++d) grad[d] = hsum(gacc[d]);
  for (; i < f.count; ++i) {
    const double arg = feature_argument1(f, x, i);
    total += coeff[i] * std::cos(arg);
    const double t = coeff[i] * std::sin(arg);
    for (std::size_t d = 0; d < D; ++d) grad[d] -= t * f.frequencies[d * f.count + i];
  }
  return total;
}

double feature_sum_grad(const FeatureView& f, const double* coeff, const double* x, double* grad) {
  switch (f.dim) {
    case 1: return feature_sum_grad_fixed<1>(f, coeff, x, grad);
    case 2: return feature_sum_grad_fixed<2>(f, coeff, x, grad);
    case 3: return feature_sum_grad_fixed<3>(f, coeff, x, grad);
    case 4: return feature_sum_grad_fixed<4>(f, coeff, x, grad);
    case 5: return feature_sum_grad_fixed<5>(f, coeff, x, grad);
    case 6: return feature_sum_grad_fixed<6>(f, coeff, x, grad);
    default: break;
  }
  if (f.dim > kMaxGradDim) return scalar_kernels().feature_sum_grad(f, coeff, x, grad);
  __m256d gacc[kMaxGradDim];
  for (std::size_t d = 0; d < f.dim; ++d) gacc[d] = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= f.count; i += 4) {
    __m256d s, c;
    sincos4(feature_argument4(f, x, i), &s, &c);
    const __m256d w = _mm256_loadu_pd(coeff + i);
    acc = _mm256_fmadd_pd(w, c, acc);
    const __m256d t = _mm256_mul_pd(w, s);
    for (std::size_t d = 0; d < f.dim; ++d)
      gacc[d] = _mm256_fnmadd_pd(t, _mm256_loadu_pd(f.frequencies + d * f.count + i), gacc[d]);
  }
  double total = hsum(acc);
  for (std::size_t d = 0; d < f.dim; ++d) grad[d] = hsum(gacc[d]);
  for (; i < f.count; ++i) {
    const double arg = feature_argument1(f, x, i);
    total += coeff[i] * std::cos(arg);
    const double t = coeff[i] * std::sin(arg);
    for (std::size_t d = 0; d < f.dim; ++d) grad[d] -= t * f.frequencies[d * f.count + i];
  }
  return total;
}

inline __m256d se_exponent4(const PointsView& p, const double* inv_sq_ls, const double* x, std::size_t i) {
  __m256d r2 = _mm256_setzero_pd();
  for (std::size_t d = 0; d < p.dim; ++d) {
    const __m256d diff = _mm256_sub_pd(_mm256_set1_pd(x[d]), _mm256_loadu_pd(p.coords + d * p.count + i));
    r2 = _mm256_fmadd_pd(_mm256_mul_pd(diff, diff), _mm256_set1_pd(inv_sq_ls[d]), r2);
  }
  return _mm256_mul_pd(_mm256_set1_pd(-0.5), r2);
}

inline double se_exponent1(const PointsView& p, const double* inv_sq_ls, const double* x, std::size_t i) {
  double r2 = 0.0;
  for (std::size_t d = 0; d < p.dim; ++d) {
    const double diff = x[d] - p.coords[d * p.count + i];
    r2 = std::fma(diff * diff, inv_sq_ls[d], r2);
  }
  return -0.5 * r2;
}

void se_cross(const PointsView& p, const double* inv_sq_ls, const double* x, double scale, double* out) {
  const __m256d sc = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= p.count; i += 4) _mm256_storeu_pd(out + i, _mm256_mul_pd(sc, exp4(se_exponent4(p, inv_sq_ls, x, i))));
  for (; i < p.count; ++i) out[i] = scale * std::exp(se_exponent1(p, inv_sq_ls, x, i));
}

double se_weighted_sum(const PointsView& p, const double* inv_sq_ls, const double* weights, const double* x,
                       double scale) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= p.count; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(weights + i), exp4(se_exponent4(p, inv_sq_ls, x, i)), acc);
  double total = hsum(acc);
  for (; i < p.count; ++i) total += weights[i] * std::exp(se_exponent1(p, inv_sq_ls, x, i));
  return scale * total;
}

constexpr KernelTable kAvx2{"avx2", features, feature_sum, feature_sum_grad, se_cross, se_weighted_sum};

}  // namespace

namespace detail {
const KernelTable* avx2_table() noexcept { return &kAvx2; }
}  // namespace detail

}  // namespace priorbo::simd
