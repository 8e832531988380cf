#pragma once

#include <cstddef>
#include <vector>

#include "priorbo/linalg.hpp"

namespace priorbo {

/// Axis-aligned search box.
class DomainBox {
 public:
  DomainBox(Vector lower, Vector upper);

  static DomainBox unit(std::size_t dim);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(lower_.size()); }
  const Vector& lower() const noexcept { return lower_; }
  const Vector& upper() const noexcept { return upper_; }
  Vector width() const { return upper_ - lower_; }
  double volume() const;

  bool contains(const Vector& x, double tol = 0.0) const;
  Vector project(const Vector& x) const;
  /// Maps u in [0,1]^D onto the box.
  Vector from_unit(const Vector& u) const;

  bool operator==(const DomainBox& other) const = default;

 private:
  Vector lower_;
  Vector upper_;
};

/// Squared-exponential kernel  k(x,x') = s2 * exp(-sum_d (x_d - x'_d)^2 / (2 l_d^2)).
class Kernel {
 public:
  Kernel(double signal_variance, Vector lengthscales);

  static Kernel isotropic(double signal_variance, double lengthscale, std::size_t dim);

  double signal_variance() const noexcept { return signal_variance_; }
  const Vector& lengthscales() const noexcept { return lengthscales_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(lengthscales_.size()); }

  double operator()(const Vector& x, const Vector& y) const;

  /// Gram matrix of the rows of `points` (symmetric by construction).
  Matrix gram(const Matrix& points) const;

  /// k(x, points_i) for every row i.
  Vector cross(const Matrix& points, const Vector& x) const;

 private:
  double signal_variance_;
  Vector lengthscales_;
  Vector inv_sq_lengthscales_;
};

/// Observations D_n. Rows of `points` are inputs.
struct Dataset {
  Matrix points;
  Vector values;
  double noise_variance = 0.0;

  Dataset() = default;
  Dataset(Matrix points, Vector values, double noise_variance);
  /// Empty dataset of the given input dimension.
  static Dataset empty(std::size_t dim, double noise_variance);

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(points.cols()); }
  bool empty() const noexcept { return values.size() == 0; }

  /// Copy with one more observation appended.
  Dataset with(const Vector& x, double y) const;
  void validate_inside(const DomainBox& box) const;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

struct PredictionGradient {
  double mean = 0.0;
  double variance = 0.0;
  Vector mean_grad;
  Vector variance_grad;
};

struct FitOptions {
  JitterPolicy jitter{};
};

/// Zero-mean GP posterior with a cached Cholesky factor. Immutable after fit.
class GpPosterior {
 public:
  const Kernel& kernel() const noexcept { return kernel_; }
  const Dataset& data() const noexcept { return data_; }
  /// Lower-triangular L with L L^T = K + (noise + jitter) I.
  const Matrix& chol() const noexcept { return chol_; }
  const Vector& solved_coeffs() const noexcept { return alpha_; }
  double jitter() const noexcept { return jitter_; }

  Prediction predict(const Vector& x) const;
  PredictionGradient predict_with_gradient(const Vector& x) const;
  double log_marginal_likelihood() const;

 private:
  friend GpPosterior fit(const Kernel&, const Dataset&, const FitOptions&);
  GpPosterior(Kernel kernel, Dataset data) : kernel_(std::move(kernel)), data_(std::move(data)) {}

  Kernel kernel_;
  Dataset data_;
  Matrix chol_;
  Vector alpha_;
  double jitter_ = 0.0;
};

GpPosterior fit(const Kernel& kernel, const Dataset& data, const FitOptions& options = {});

/// Grid for ML-II selection. Signal and noise variances are multiplied by the
/// data scale mean(y^2); lengthscales are fractions of each box width.
struct GridSpec {
  std::vector<double> signal_variance_factors;
  std::vector<double> lengthscale_fractions;
  std::vector<double> noise_variance_factors;
  /// Used instead of the noise grid when set (fixed-noise selection).
  bool fixed_noise = false;

  static GridSpec standard();
};

struct HyperparameterChoice {
  Kernel kernel;
  double noise_variance;
  double log_likelihood;
};

/// Grid-search type-II maximum likelihood. Ties go to the larger lengthscale.
HyperparameterChoice select_hyperparameters(const Dataset& data, const DomainBox& box,
                                            const GridSpec& grid = GridSpec::standard());

/// Log-spaced values from `lo` to `hi` inclusive.
std::vector<double> log_space(double lo, double hi, std::size_t count);

}  // namespace priorbo
