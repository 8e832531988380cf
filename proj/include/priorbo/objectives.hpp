#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "priorbo/gp.hpp"
#include "priorbo/priors.hpp"

namespace priorbo {

enum class Sense { kMinimize, kMaximize };

struct KnownOptimum {
  Vector location;
  double value;
  std::optional<std::size_t> candidate_index;
};

/// Benchmark function. `evaluate` is noiseless and deterministic; observation
/// noise is the harness's business.
struct Objective {
  std::string name;
  Support domain{Matrix()};
  std::function<double(const Vector&)> evaluate;
  std::optional<KnownOptimum> known_optimum;
  double noise_std = 0.0;
  Sense sense = Sense::kMinimize;
  std::vector<std::string> dimension_names;

  std::size_t dim() const;
  bool discrete() const noexcept { return std::holds_alternative<Matrix>(domain); }
  const DomainBox& box() const;
  const Matrix& candidates() const;

  /// Value in the maximization frame strategies work in.
  double to_internal(double y) const noexcept { return sense == Sense::kMinimize ? -y : y; }
  double from_internal(double v) const noexcept { return to_internal(v); }
};

/// A GP-prior sample turned into a smooth objective (the GP posterior mean
/// through the sampled values), plus the generating draw.
struct GpSampleInstance {
  Objective objective;
  Matrix points;          // grid_points x D generating locations
  Vector sampled_values;  // joint prior draw at those locations
};

struct GpSampleOptions {
  std::size_t grid_points = 2000;
  double noise_variance = 1e-6;
  std::size_t scan_resolution = 300;  // per dimension, for locating the optimum
};

GpSampleInstance gp_sample_instance(std::size_t dim, std::uint64_t seed, const Kernel& kernel,
                                    const GpSampleOptions& options = {});
Objective gp_sample_objective(std::size_t dim, std::uint64_t seed, const Kernel& kernel,
                              const GpSampleOptions& options = {});

/// Maximizes f over the box: grid scan (or a random scan when resolution^D
/// exceeds 4e6 points) followed by a polish of the best `polish_starts` points.
KnownOptimum locate_maximum(const std::function<double(const Vector&)>& f, const DomainBox& box,
                            std::size_t resolution, std::size_t polish_starts = 10);

/// Canonical Hartmann-6 on [0,1]^6. Throws OutOfBox.
double hartmann6(const Vector& x);
Vector hartmann6_reference_minimizer();
Objective hartmann6_objective();

/// Two negative Gaussian modes on [0,6]: the deep one at 2, the shallow one at
/// 4.5 with a mirror image at -0.5 (outside the box) so the function is exactly
/// symmetric about 2 and the global minimizer is exactly x = 2.
double toy_1d(double x);
Objective toy_1d_objective();

/// Synthetic 162-row short-polymer-fibre table: channel width (3 levels),
/// constriction angle (3), device position (2), butanol speed (43, 68, 95),
/// polymer concentration (3). Candidates are level positions scaled to [0,1].
struct SpfFactor {
  std::string name;
  std::vector<double> levels;
};
const std::vector<SpfFactor>& spf_factors();
Objective spf_table();
/// Physical factor values of candidate row `index`.
Vector spf_levels(std::size_t index);

/// "gp2d:<seed>", "hartmann6", "toy1d", "spf_table". Throws ConfigError.
Objective make_objective(const std::string& name);

}  // namespace priorbo
