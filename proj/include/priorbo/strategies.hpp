#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "priorbo/gp.hpp"
#include "priorbo/priors.hpp"
#include "priorbo/random.hpp"
#include "priorbo/rff.hpp"

namespace priorbo {

struct StrategyConfig {
  std::size_t num_samples = 0;    // Thompson draws per suggestion; 0 means 100 * D
  std::size_t feature_count = 0;  // random features per draw; 0 means 500 * D
  MaximizeOptions maximize{};
  std::uint64_t base_seed = 0;
};

/// Everything a suggestion needs. Values are in the maximization frame.
struct BoState {
  Dataset data;
  Kernel kernel;
  Support domain;
  OptimumPrior prior;
  StrategyConfig config{};
  std::uint64_t iteration = 0;

  std::size_t dim() const noexcept { return kernel.dim(); }
  bool discrete() const noexcept { return std::holds_alternative<Matrix>(domain); }
  std::size_t num_samples() const noexcept { return config.num_samples ? config.num_samples : 100 * dim(); }
  std::size_t feature_count() const noexcept { return config.feature_count ? config.feature_count : 500 * dim(); }
  /// Seed of this suggestion; draw i uses derive_seed(seed, {i}).
  std::uint64_t suggestion_seed() const noexcept { return derive_seed(config.base_seed, {iteration}); }
  /// Best observed input, if any.
  std::optional<Vector> incumbent() const;

  void validate() const;
};

/// Maximizers of N posterior draws with prior-proportional weights.
struct MaximizerCloud {
  std::vector<Vector> points;
  std::vector<std::size_t> indices;  // candidate indices in discrete mode
  std::vector<double> raw_values;    // maximum of each sampled function
  std::vector<double> weights;       // sum to 1
  bool degenerate = false;           // every prior density was zero; weights fell back to uniform

  std::size_t size() const noexcept { return points.size(); }
};

struct Suggestion {
  Vector point;
  std::optional<std::size_t> candidate_index;
  std::string strategy;
  std::optional<MaximizerCloud> cloud;
  /// Per-candidate selection probabilities (discrete posterior sampling only).
  std::optional<std::vector<double>> candidate_probabilities;
  std::uint64_t seed_used = 0;
  bool prior_miss = false;
};

enum class StrategyKind { kThompson, kPriorGuided, kExpectedImprovement, kPriorRandom };

/// "ts", "psg", "ei", "prior_random".
StrategyKind parse_strategy(std::string_view name);
std::string_view to_string(StrategyKind kind) noexcept;

/// w_i = pi(x_i) / sum_j pi(x_j), computed from shape log-densities so the
/// prior's global scale cancels exactly. Returns uniform weights and sets
/// `degenerate` when every density is zero.
std::vector<double> prior_weights(const OptimumPrior& prior, const MaximizerCloud& cloud, bool* degenerate = nullptr);

/// Draws `count` posterior functions and collects their maximizers, weighted by the prior.
MaximizerCloud draw_cloud(const BoState& state, std::size_t count, std::uint64_t seed);

/// Diagnostic cloud for visualising p(x* | D, pi).
MaximizerCloud optimum_density_cloud(const BoState& state);
MaximizerCloud optimum_density_cloud(const BoState& state, std::size_t count, std::uint64_t seed);

Suggestion suggest_ts(const BoState& state);
Suggestion suggest_psg(const BoState& state);
Suggestion suggest_psg_discrete(const BoState& state);
Suggestion suggest_ei(const BoState& state);
Suggestion suggest_prior_random(const OptimumPrior& prior, Rng& rng);
Suggestion suggest_prior_random(const BoState& state);

/// Dispatches on kind; psg on a candidate domain uses suggest_psg_discrete.
Suggestion suggest(StrategyKind kind, const BoState& state);

struct ExpectedImprovement {
  double value;
  Vector gradient;
};

/// EI for maximization against incumbent value `best`.
double expected_improvement(const GpPosterior& post, const Vector& x, double best);
ExpectedImprovement expected_improvement_with_gradient(const GpPosterior& post, const Vector& x, double best);

/// Index of the categorical draw for uniform u in [0,1); skips zero-weight entries.
std::size_t categorical_index(const std::vector<double>& weights, double u);

}  // namespace priorbo
