// bench: run, compare and density subcommands over the priorbo harness.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "priorbo/errors.hpp"
#include "priorbo/harness.hpp"
#include "priorbo/prior_json.hpp"

using namespace priorbo;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

struct KernelFlags {
  std::string mode;
  double signal_variance = 1.0;
  double lengthscale = 0.1;
  double noise_variance = 1e-6;

  void add(CLI::App* app) {
    app->add_option("--kernel", mode, "fixed or ml2_grid")->check(CLI::IsMember({"fixed", "ml2_grid"}));
    app->add_option("--signal-variance", signal_variance, "fixed kernel signal variance");
    app->add_option("--lengthscale", lengthscale, "fixed kernel lengthscale");
    app->add_option("--noise-variance", noise_variance, "fixed kernel noise variance");
  }
  std::optional<KernelMode> mode_or_none() const {
    if (mode.empty()) return std::nullopt;
    if (mode == "fixed") return KernelMode::fixed(signal_variance, lengthscale, noise_variance);
    return KernelMode::ml2_grid();
  }
};

// Observation file: header x_0..x_{D-1},y; values in objective sense.
Dataset read_observations(const std::string& path, const Objective& objective) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw ValidationError("obs", "empty file");
  std::vector<std::string> header;
  {
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const std::size_t dim = objective.dim();
  if (header.size() != dim + 1 || header.back() != "y")
    throw ValidationError("obs", "expected columns x_0..x_" + std::to_string(dim - 1) + ",y");
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::logic_error&) {
        throw ValidationError("obs", "line " + std::to_string(lineno) + ": bad number \"" + cell + "\"");
      }
    }
    if (row.size() != dim + 1) throw ValidationError("obs", "line " + std::to_string(lineno) + ": wrong cell count");
    rows.push_back(std::move(row));
  }
  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t d = 0; d < dim; ++d) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = rows[i][d];
    y[static_cast<Eigen::Index>(i)] = objective.to_internal(rows[i][dim]);
  }
  Dataset data(std::move(x), std::move(y), 0.0);
  if (!objective.discrete()) data.validate_inside(objective.box());
  return data;
}

int cmd_run(const std::string& config_path, const std::string& objective, const std::string& strategy,
            const std::string& prior_path, std::size_t iters, std::size_t seeds, std::size_t initial,
            std::size_t n, std::size_t m, int restarts, std::size_t threads, const KernelFlags& kernel,
            std::string out) {
  RunConfig c;
  if (!config_path.empty()) c = RunConfig::from_json(read_json_file(config_path));
  if (!objective.empty()) c.objective = objective;
  if (!strategy.empty()) c.strategy = strategy;
  if (!prior_path.empty()) c.prior = read_json_file(prior_path);
  if (iters) c.iterations = iters;
  if (seeds) {
    c.seeds.clear();
    for (std::size_t s = 0; s < seeds; ++s) c.seeds.push_back(s);
  }
  if (initial) c.initial_count = initial;
  if (n) c.num_samples = n;
  if (m) c.feature_count = m;
  if (restarts) c.restarts = restarts;
  if (threads) c.threads = threads;
  if (auto k = kernel.mode_or_none()) c.kernel = *k;
  if (out.empty()) out = c.output.empty() ? "results" : c.output;
  c.output = out;
  if (c.objective.empty()) throw ConfigError("an objective is required (--objective or --config)");

  const auto result = run(c);
  write_run(out, result);
  const auto summary = aggregate(result.traces);
  if (!summary.empty() && result.known_optimum) {
    const auto& last = summary.back();
    std::printf("%s %s: iteration %zu mean SR %.6g (stderr %.3g), %zu seeds\n", result.objective_name.c_str(),
                c.strategy.c_str(), last.iter, last.mean_sr, last.stderr_sr, result.traces.size());
  }
  if (result.prior_misses() > 0) std::printf("prior misses: %zu\n", result.prior_misses());
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int cmd_compare(const std::vector<std::string>& runs, const std::string& metric, std::size_t at) {
  std::vector<std::vector<SeedTrace>> traces;
  for (const auto& path : runs) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    traces.push_back(read_trace_csv(f));
  }
  const auto cmp = compare_runs(traces[0], traces[1], metric, at);
  std::printf("seed,a,b,a_minus_b\n");
  for (std::size_t i = 0; i < cmp.seeds.size(); ++i)
    std::printf("%llu,%.17g,%.17g,%.17g\n", static_cast<unsigned long long>(cmp.seeds[i]), cmp.a[i], cmp.b[i],
                cmp.a[i] - cmp.b[i]);
  std::printf("# %s at iteration %zu over %zu seeds: a lower %zu, b lower %zu, ties %zu, mean(a-b) %.6g\n",
              metric.c_str(), at, cmp.seeds.size(), cmp.a_lower, cmp.b_lower, cmp.ties, cmp.mean_difference);
  return 0;
}

int cmd_density(const std::string& objective_name, const std::string& obs_path, const std::string& prior_path,
                std::size_t n, std::size_t m, std::uint64_t seed, const KernelFlags& kernel, const std::string& out) {
  const Objective objective = make_objective(objective_name);
  Dataset data = obs_path.empty() ? Dataset(Matrix(0, static_cast<Eigen::Index>(objective.dim())), Vector(0), 0.0)
                                  : read_observations(obs_path, objective);
  const json prior_spec = prior_path.empty() ? json{{"type", "uniform"}} : read_json_file(prior_path);
  OptimumPrior prior = prior_from_json(prior_spec, objective.domain);
  const auto hp = resolve_kernel(kernel.mode_or_none().value_or(KernelMode::ml2_grid()), data, objective.domain);
  data.noise_variance = hp.noise_variance;
  StrategyConfig sc;
  sc.num_samples = n;
  sc.feature_count = m;
  sc.base_seed = seed;
  const BoState state{std::move(data), hp.kernel, objective.domain, std::move(prior), sc, 0};
  const auto cloud = optimum_density_cloud(state);
  if (out.empty() || out == "-") {
    write_cloud_csv(std::cout, cloud, objective);
  } else {
    std::ofstream f(out);
    if (!f) throw ConfigError("cannot write " + out);
    write_cloud_csv(f, cloud, objective);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"priorbo benchmark harness"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "run a benchmark configuration");
  std::string config_path, objective, strategy, prior_path, out;
  std::size_t iters = 0, seeds = 0, initial = 0, n = 0, m = 0, threads = 0;
  int restarts = 0;
  KernelFlags run_kernel;
  run_cmd->add_option("--config", config_path, "run configuration JSON");
  run_cmd->add_option("--objective", objective, "hartmann6, toy1d, spf_table or gp2d:<seed>");
  run_cmd->add_option("--strategy", strategy, "ts, psg, ei or prior_random");
  run_cmd->add_option("--prior", prior_path, "prior JSON file");
  run_cmd->add_option("--iters", iters, "BO iterations");
  run_cmd->add_option("--seeds", seeds, "number of seeds (0..k-1)");
  run_cmd->add_option("--initial", initial, "initial design size");
  run_cmd->add_option("--n", n, "posterior samples per step");
  run_cmd->add_option("--m", m, "random features");
  run_cmd->add_option("--restarts", restarts, "ascent restarts");
  run_cmd->add_option("--threads", threads, "seeds run concurrently");
  run_cmd->add_option("--out", out, "output directory");
  run_kernel.add(run_cmd);

  auto* cmp_cmd = app.add_subcommand("compare", "paired per-seed comparison of two trace files");
  std::vector<std::string> runs;
  std::string metric = "simple_regret";
  std::size_t at = 0;
  cmp_cmd->add_option("--runs", runs, "two trace CSV files")->required()->expected(2);
  cmp_cmd->add_option("--metric", metric, "simple_regret, cum_regret, best or y");
  cmp_cmd->add_option("--at", at, "iteration")->required();

  auto* den_cmd = app.add_subcommand("density", "emit the weighted maximizer cloud");
  std::string den_objective, obs_path, den_prior, den_out;
  std::size_t den_n = 0, den_m = 0;
  std::uint64_t den_seed = 0;
  KernelFlags den_kernel;
  den_cmd->add_option("--objective", den_objective, "objective name")->required();
  den_cmd->add_option("--obs", obs_path, "observations CSV (x_0..x_{D-1},y)");
  den_cmd->add_option("--prior", den_prior, "prior JSON file");
  den_cmd->add_option("--n", den_n, "cloud size");
  den_cmd->add_option("--m", den_m, "random features");
  den_cmd->add_option("--seed", den_seed, "seed");
  den_cmd->add_option("--out", den_out, "output CSV, - for stdout");
  den_kernel.add(den_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd)
      return cmd_run(config_path, objective, strategy, prior_path, iters, seeds, initial, n, m, restarts, threads,
                     run_kernel, out);
    if (*cmp_cmd) return cmd_compare(runs, metric, at);
    return cmd_density(den_objective, obs_path, den_prior, den_n, den_m, den_seed, den_kernel, den_out);
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    std::cerr << (code == 3 ? "numeric failure: " : "error: ") << e.what() << '\n';
    return code;
  }
}
