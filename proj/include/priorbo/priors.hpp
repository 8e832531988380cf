#pragma once

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "priorbo/gp.hpp"
#include "priorbo/random.hpp"

namespace priorbo {

/// Where the optimum may lie: a continuous box or a finite candidate table
/// (one candidate per row).
using Support = std::variant<DomainBox, Matrix>;

enum class Transform { kIdentity, kLog };

/// Gamma(shape, rate) on z = scale * (t(x) - origin), t = identity or log.
/// The density over x carries the Jacobian |dz/dx|.
struct GammaFactor {
  double shape = 1.0;
  double rate = 1.0;
  Transform transform = Transform::kIdentity;
  /// Defaults to t(lower bound) of the dimension.
  std::optional<double> origin;
  double scale = 1.0;
};

enum class SamplingMode {
  kAuto,           // rejection first, per-dimension inverse CDF when the budget runs out
  kRejectionOnly,  // budget exhaustion is an error
};

struct InformativenessReport {
  double r1 = 0.0;          // normalized density at x_true minus the uniform density
  double r1_stderr = 0.0;   // Monte-Carlo standard error of r1 (0 for exact discrete normalization)
  double r2 = 0.0;          // (1 - delta)-quantile of ||x_true - X||, X ~ prior
  double mass_within_r2 = 0.0;
  double mass_stderr = 0.0;
  double delta = 0.0;

  bool informative() const noexcept { return r1 > 0.0; }
};

/// Expert belief pi(x*) about the optimum location. Densities are
/// unnormalized: only ratios between points are meaningful. The global
/// `scale` multiplies every density and is kept separate from the shape so
/// that self-normalizing consumers can drop it exactly.
class OptimumPrior {
 public:
  struct Uniform {};
  struct TruncatedGaussian {
    Vector mean;
    Vector variance;  // diagonal covariance
  };
  struct GammaProduct {
    std::vector<std::optional<GammaFactor>> factors;  // nullopt: uniform along that dimension
  };
  struct DiscreteTable {
    Vector weights;  // one per candidate
  };
  using Shape = std::variant<Uniform, TruncatedGaussian, GammaProduct, DiscreteTable>;

  static constexpr std::size_t kRejectionBudget = 10000;

  OptimumPrior(Shape shape, Support support, double scale = 1.0);

  static OptimumPrior uniform(Support support);
  static OptimumPrior truncated_gaussian(Support support, Vector mean, Vector variance);
  static OptimumPrior gamma_product(Support support, std::vector<std::optional<GammaFactor>> factors);
  static OptimumPrior discrete(Matrix candidates, Vector weights);

  const Shape& shape() const noexcept { return shape_; }
  const Support& support() const noexcept { return support_; }
  double scale() const noexcept { return scale_; }
  std::size_t dim() const noexcept;
  bool is_discrete() const noexcept { return std::holds_alternative<Matrix>(support_); }
  /// Candidate table; throws ConfigError for continuous support.
  const Matrix& candidates() const;
  const DomainBox& box() const;

  /// Same shape, density multiplied by c > 0.
  OptimumPrior scaled(double c) const;

  /// log density without the global scale; -inf outside the support.
  double log_density_shape(const Vector& x) const;
  double log_density_shape(std::size_t candidate) const;

  double log_density(const Vector& x) const;
  double density(const Vector& x) const;
  double density(std::size_t candidate) const;

  /// Draw from the normalized prior restricted to the support.
  Vector sample(Rng& rng, SamplingMode mode = SamplingMode::kAuto) const;
  /// Candidate index draw (discrete support only).
  std::size_t sample_index(Rng& rng) const;

 private:
  double continuous_log_shape(const Vector& x) const;
  Vector sample_continuous(const DomainBox& box, Rng& rng, SamplingMode mode) const;

  Shape shape_;
  Support support_;
  double scale_;
};

/// Checks both informativeness conditions at `x_true`.
InformativenessReport informativeness(const OptimumPrior& prior, const Vector& x_true, double delta,
                                      std::size_t mc_samples, Rng& rng);

}  // namespace priorbo
