#pragma once

#include <cstddef>

#include "priorbo/detail/ascent.hpp"
#include "priorbo/gp.hpp"
#include "priorbo/random.hpp"
#include "priorbo/simd/kernels.hpp"

namespace priorbo {

/// Random Fourier feature map phi(x)_i = amplitude * cos(w_i . x + b_i) whose
/// inner products approximate an SE kernel.
class FeatureMap {
 public:
  /// frequencies: m x D (row i is w_i); phases: m values in [0, 2pi).
  FeatureMap(Kernel source, Matrix frequencies, Vector phases);

  /// Frequencies ~ N(0, diag(1/l^2)), phases ~ U[0, 2pi), amplitude sqrt(2 s2 / m).
  static FeatureMap draw(const Kernel& kernel, std::size_t count, Rng& rng);

  std::size_t size() const noexcept { return static_cast<std::size_t>(phases_.size()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(frequencies_.cols()); }
  const Matrix& frequencies() const noexcept { return frequencies_; }
  const Vector& phases() const noexcept { return phases_; }
  double amplitude() const noexcept { return amplitude_; }
  const Kernel& source_kernel() const noexcept { return kernel_; }

  Vector features(const Vector& x) const;
  /// Phi with one row per input row.
  Matrix design_matrix(const Matrix& points) const;

  simd::FeatureView view() const noexcept {
    return {frequencies_.data(), phases_.data(), size(), dim()};
  }

 private:
  Kernel kernel_;
  Matrix frequencies_;  // column-major, so each dimension is contiguous
  Vector phases_;
  double amplitude_;
};

/// Gaussian posterior N(mean, L L^T) over the feature weights.
struct WeightPosterior {
  Vector mean;
  Matrix covariance_factor;  // lower triangular
};

/// mean = (Phi^T Phi + s2 I)^{-1} Phi^T y, covariance = s2 (Phi^T Phi + s2 I)^{-1}.
/// Empty data gives the N(0, I) weight prior.
WeightPosterior posterior_weight_distribution(const FeatureMap& map, const Dataset& data,
                                              const JitterPolicy& jitter = {});

/// One posterior draw f(x) = phi(x)^T theta.
class SampledFunction {
 public:
  SampledFunction(FeatureMap map, Vector theta);

  const FeatureMap& map() const noexcept { return map_; }
  const Vector& theta() const noexcept { return theta_; }
  std::size_t dim() const noexcept { return map_.dim(); }

  double operator()(const Vector& x) const;
  double value_and_gradient(const Vector& x, Vector& grad) const;

 private:
  FeatureMap map_;
  Vector theta_;
  Vector coeff_;  // amplitude * theta
};

/// theta = mean + L z, z ~ N(0, I).
SampledFunction sample_function(const FeatureMap& map, const WeightPosterior& dist, Rng& rng);

/// Exact draw from the same weight posterior through the n x n dual system:
/// theta = theta0 + Phi^T (Phi Phi^T + s2 I)^{-1} (y - Phi theta0 - eps),
/// theta0 ~ N(0, I), eps ~ N(0, s2 I). Costs O(n^2 m) instead of O(m^3).
SampledFunction sample_function_dual(const FeatureMap& map, const Dataset& data, Rng& rng,
                                     const JitterPolicy& jitter = {});

/// Picks the primal (m x m) or dual (n x n) route, whichever system is smaller.
SampledFunction sample_posterior_function(const FeatureMap& map, const Dataset& data, Rng& rng);

struct MaximizeOptions {
  int restarts = 10;
  /// Uniform points scored before the ascents; the best `restarts` of them
  /// seed the local searches. 0 uses plain uniform starts.
  std::size_t pool_size = 100;
  detail::AscentOptions ascent{};
};

struct MaximizeResult {
  Vector argmax;
  double value;
};

/// Multi-start projected gradient ascent on a sampled function. Starts are the
/// incumbent (when given) plus `restarts` points drawn from `rng`; the result
/// always lies inside the box.
MaximizeResult maximize_sampled(const SampledFunction& f, const DomainBox& box, Rng& rng,
                                const MaximizeOptions& options = {}, const Vector* incumbent = nullptr);

/// Index of the best row of `candidates`; ties go to the lowest index.
std::size_t maximize_over_candidates(const SampledFunction& f, const Matrix& candidates);

}  // namespace priorbo
