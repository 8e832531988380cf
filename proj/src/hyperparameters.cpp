#include <cmath>
#include <limits>
#include <optional>

#include "priorbo/errors.hpp"
#include "priorbo/gp.hpp"

namespace priorbo {

std::vector<double> log_space(double lo, double hi, std::size_t count) {
  std::vector<double> out;
  if (count == 0) return out;
  if (count == 1) return {lo};
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1)));
  out.front() = lo;
  out.back() = hi;
  return out;
}

GridSpec GridSpec::standard() {
  GridSpec g;
  g.signal_variance_factors = log_space(0.1, 10.0, 5);
  g.lengthscale_fractions = log_space(0.02, 1.0, 15);
  g.noise_variance_factors = {1e-6, 1e-4, 1e-2, 1e-1};
  return g;
}

HyperparameterChoice select_hyperparameters(const Dataset& data, const DomainBox& box, const GridSpec& grid) {
  if (data.size() < 3) throw InsufficientData("hyperparameter selection needs at least 3 observations");
  if (data.dim() != box.dim()) throw DimensionMismatch("hyperparameter selection: data/box dimension mismatch");
  if (grid.signal_variance_factors.empty() || grid.lengthscale_fractions.empty() ||
      (!grid.fixed_noise && grid.noise_variance_factors.empty()))
    throw ConfigError("hyperparameter grid has an empty axis");

  const double mean_sq = data.values.squaredNorm() / static_cast<double>(data.size());
  const double scale = mean_sq > 1e-12 ? mean_sq : 1.0;
  const Vector width = box.width();

  std::vector<double> noises;
  if (grid.fixed_noise) {
    noises.push_back(data.noise_variance);
  } else {
    for (double f : grid.noise_variance_factors) noises.push_back(f * scale);
  }

  std::optional<HyperparameterChoice> best;
  // Largest lengthscale first; later candidates must strictly improve.
  for (auto it = grid.lengthscale_fractions.rbegin(); it != grid.lengthscale_fractions.rend(); ++it) {
    const Vector ls = width * *it;
    for (double sf : grid.signal_variance_factors) {
      const Kernel kernel(sf * scale, ls);
      for (double noise : noises) {
        double ll = -std::numeric_limits<double>::infinity();
        try {
          ll = fit(kernel, Dataset(data.points, data.values, noise)).log_marginal_likelihood();
        } catch (const CholeskyFailure&) {
          continue;
        }
        if (!std::isfinite(ll)) continue;
        if (!best || ll > best->log_likelihood + 1e-9 * std::max(1.0, std::abs(best->log_likelihood)))
          best = HyperparameterChoice{kernel, noise, ll};
      }
    }
  }
  if (!best) throw NumericFailure("no grid point produced a finite marginal likelihood");
  return *best;
}

}  // namespace priorbo
