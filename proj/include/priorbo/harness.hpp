#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "priorbo/objectives.hpp"
#include "priorbo/strategies.hpp"

namespace priorbo {

std::string_view library_version() noexcept;

struct KernelMode {
  enum class Kind { kFixed, kMl2Grid };
  Kind kind = Kind::kMl2Grid;
  double signal_variance = 1.0;
  double lengthscale = 0.1;  // absolute, shared across dimensions
  double noise_variance = 1e-6;

  static KernelMode fixed(double signal_variance, double lengthscale, double noise_variance);
  static KernelMode ml2_grid() { return {}; }
};

/// {"mode": "fixed", "signal_variance", "lengthscale", "noise_variance"} or {"mode": "ml2_grid"}.
KernelMode kernel_mode_from_json(const nlohmann::json& j, const std::string& path = "kernel");
nlohmann::json kernel_mode_to_json(const KernelMode& mode);

struct RunConfig {
  std::string objective;
  std::string strategy = "psg";
  nlohmann::json prior = {{"type", "uniform"}};
  std::size_t iterations = 30;
  std::size_t initial_count = 3;
  std::vector<std::uint64_t> seeds{0};
  KernelMode kernel{};
  std::size_t num_samples = 0;    // 0: 100 * D
  std::size_t feature_count = 0;  // 0: 500 * D
  std::optional<int> restarts;
  bool mean_centering = false;
  std::optional<double> noise_std;  // overrides the objective's default
  std::size_t threads = 1;          // seeds run concurrently; results do not depend on it
  std::string output;

  /// Throws ConfigError / ValidationError.
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

struct TraceRow {
  std::uint64_t seed = 0;
  std::size_t iter = 0;  // 0 for the initial design, then 1..T
  Vector x;
  std::optional<std::size_t> candidate_index;
  double y = 0.0;        // noisy observation, objective sense
  double f = 0.0;        // noiseless value, objective sense
  double best = 0.0;     // best noisy observation so far, objective sense
  double simple_regret = 0.0;
  double cum_regret = 0.0;
  double seconds = 0.0;  // wall-clock of the suggestion step
  bool prior_miss = false;
};

struct SeedTrace {
  std::uint64_t seed = 0;
  std::vector<TraceRow> rows;
  std::size_t prior_misses = 0;
};

struct SummaryRow {
  std::size_t iter;
  double mean_sr;
  double stderr_sr;
  double mean_cr;
};

struct RunResult {
  RunConfig config;
  std::string objective_name;
  std::size_t dim = 0;
  std::optional<KnownOptimum> known_optimum;
  std::vector<SeedTrace> traces;

  std::size_t prior_misses() const;
  /// Row of `seed` at BO iteration `iter` (iter 0 gives the last initial row).
  const TraceRow& at(std::uint64_t seed, std::size_t iter) const;
};

RunResult run(const RunConfig& config);
RunResult run(const RunConfig& config, const Objective& objective);

/// Latin hypercube in the unit cube: one point per stratum in every dimension.
Matrix latin_hypercube(std::size_t count, std::size_t dim, Rng& rng);

/// SR_n = max(0, f* - max_{i<=n} f_i) in the maximization frame (values given
/// in objective sense). Throws MissingOptimum when no optimum is known.
std::vector<double> simple_regret(const std::vector<double>& values, const std::optional<double>& optimum, Sense sense);
std::vector<double> cumulative_regret(const std::vector<double>& values, const std::optional<double>& optimum,
                                      Sense sense);

/// Mean and standard error over seeds of BO iterations 1..T.
std::vector<SummaryRow> aggregate(const std::vector<SeedTrace>& traces);

void write_trace_csv(std::ostream& out, const RunResult& result);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary);
void write_timing_csv(std::ostream& out, const RunResult& result);
void write_cloud_csv(std::ostream& out, const MaximizerCloud& cloud, const Objective& objective);
nlohmann::json manifest(const RunResult& result);

/// Writes trace.csv, summary.csv, timing.csv and manifest.json under `dir`.
void write_run(const std::filesystem::path& dir, const RunResult& result);

/// Reads a trace CSV back into per-seed traces (x, y, regrets).
std::vector<SeedTrace> read_trace_csv(std::istream& in);

struct PairedComparison {
  std::string metric;
  std::size_t at;
  std::vector<std::uint64_t> seeds;
  std::vector<double> a, b;  // metric per common seed
  std::size_t a_lower = 0, b_lower = 0, ties = 0;
  double mean_difference = 0.0;  // mean(a - b)
};

PairedComparison compare_runs(const std::vector<SeedTrace>& a, const std::vector<SeedTrace>& b,
                              const std::string& metric, std::size_t at);

/// Kernel for a dataset under `mode`; ML-II falls back to the fixed
/// parameters while fewer than 3 observations exist.
HyperparameterChoice resolve_kernel(const KernelMode& mode, const Dataset& data, const Support& domain);

/// Process exit code for a failure: 2 for configuration and input errors,
/// 3 for numeric failures, 1 for anything else.
int exit_code_for(const std::exception& e) noexcept;

/// Bounding box of a domain (candidate tables get their per-column range,
/// widened to 1 where a column is constant).
DomainBox bounding_box(const Support& domain);

}  // namespace priorbo
