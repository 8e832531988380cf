#include "priorbo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "priorbo/errors.hpp"
#include "priorbo/prior_json.hpp"

namespace priorbo {

using nlohmann::json;

std::string_view library_version() noexcept { return "0.1.0"; }

KernelMode KernelMode::fixed(double signal_variance, double lengthscale, double noise_variance) {
  return {Kind::kFixed, signal_variance, lengthscale, noise_variance};
}

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(key, "has the wrong type");
  }
}

}  // namespace

KernelMode kernel_mode_from_json(const json& k, const std::string& path) {
  if (!k.is_object()) throw ValidationError(path, "must be an object");
  const auto mode = k.value("mode", std::string("ml2_grid"));
  if (mode == "ml2_grid") return KernelMode::ml2_grid();
  if (mode != "fixed") throw ValidationError(path + ".mode", "must be \"fixed\" or \"ml2_grid\"");
  auto number = [&](const char* key, double fallback) {
    if (!k.contains(key)) return fallback;
    if (!k.at(key).is_number()) throw ValidationError(path + "." + key, "must be a number");
    return k.at(key).get<double>();
  };
  return KernelMode::fixed(number("signal_variance", 1.0), number("lengthscale", 0.1), number("noise_variance", 1e-6));
}

json kernel_mode_to_json(const KernelMode& mode) {
  if (mode.kind == KernelMode::Kind::kMl2Grid) return {{"mode", "ml2_grid"}};
  return {{"mode", "fixed"},
          {"signal_variance", mode.signal_variance},
          {"lengthscale", mode.lengthscale},
          {"noise_variance", mode.noise_variance}};
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig c;
  if (!j.contains("objective") || !j.at("objective").is_string()) throw ValidationError("objective", "missing");
  c.objective = j.at("objective").get<std::string>();
  c.strategy = get_or<std::string>(j, "strategy", c.strategy);
  if (j.contains("prior")) c.prior = j.at("prior");
  c.iterations = get_or<std::size_t>(j, "iterations", c.iterations);
  if (j.contains("initial_design")) {
    const json& d = j.at("initial_design");
    c.initial_count = get_or<std::size_t>(d, "count", c.initial_count);
    const auto method = get_or<std::string>(d, "method", "latin_hypercube");
    if (method != "latin_hypercube") throw ValidationError("initial_design.method", "only latin_hypercube is supported");
  }
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    c.seeds.clear();
    if (s.is_number_unsigned() || s.is_number_integer()) {
      const auto count = s.get<long long>();
      if (count < 1) throw ValidationError("seeds", "count must be at least 1");
      for (long long i = 0; i < count; ++i) c.seeds.push_back(static_cast<std::uint64_t>(i));
    } else if (s.is_array()) {
      for (const auto& v : s) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
          throw ValidationError("seeds", "entries must be nonnegative integers");
        c.seeds.push_back(v.get<std::uint64_t>());
      }
    } else {
      throw ValidationError("seeds", "must be a count or a list");
    }
  }
  if (j.contains("kernel")) c.kernel = kernel_mode_from_json(j.at("kernel"));
  c.num_samples = get_or<std::size_t>(j, "num_samples", 0);
  c.feature_count = get_or<std::size_t>(j, "feature_count", 0);
  if (j.contains("restarts")) c.restarts = get_or<int>(j, "restarts", 10);
  c.mean_centering = get_or<bool>(j, "mean_centering", false);
  if (j.contains("noise_std")) c.noise_std = get_or<double>(j, "noise_std", 0.0);
  c.threads = get_or<std::size_t>(j, "threads", 1);
  c.output = get_or<std::string>(j, "output", "");
  c.validate();
  return c;
}

json RunConfig::to_json() const {
  json j = {{"objective", objective},
            {"strategy", strategy},
            {"prior", prior},
            {"iterations", iterations},
            {"initial_design", {{"count", initial_count}, {"method", "latin_hypercube"}}},
            {"seeds", seeds},
            {"kernel", kernel_mode_to_json(kernel)},
            {"num_samples", num_samples},
            {"feature_count", feature_count},
            {"mean_centering", mean_centering}};
  if (restarts) j["restarts"] = *restarts;
  if (noise_std) j["noise_std"] = *noise_std;
  return j;
}

void RunConfig::validate() const {
  if (objective.empty()) throw ValidationError("objective", "missing");
  parse_strategy(strategy);
  if (iterations < 1) throw ValidationError("iterations", "must be at least 1");
  if (seeds.empty()) throw ValidationError("seeds", "must not be empty");
  if (kernel.kind == KernelMode::Kind::kFixed &&
      !(kernel.signal_variance > 0.0 && kernel.lengthscale > 0.0 && kernel.noise_variance >= 0.0))
    throw ValidationError("kernel", "fixed parameters must be positive");
  if (restarts && *restarts < 1) throw ValidationError("restarts", "must be at least 1");
  if (noise_std && !(*noise_std >= 0.0)) throw ValidationError("noise_std", "must be nonnegative");
  if (threads < 1) throw ValidationError("threads", "must be at least 1");
  if (strategy == "ei" && initial_count < 1) throw ValidationError("initial_design.count", "ei needs an initial design");
}

std::size_t RunResult::prior_misses() const {
  std::size_t total = 0;
  for (const auto& t : traces) total += t.prior_misses;
  return total;
}

const TraceRow& RunResult::at(std::uint64_t seed, std::size_t iter) const {
  for (const auto& t : traces) {
    if (t.seed != seed) continue;
    const TraceRow* hit = nullptr;
    for (const auto& r : t.rows)
      if (r.iter == iter) hit = &r;
    if (hit != nullptr) return *hit;
  }
  throw NotFound("no trace row for seed " + std::to_string(seed) + " at iteration " + std::to_string(iter));
}

Matrix latin_hypercube(std::size_t count, std::size_t dim, Rng& rng) {
  Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  std::vector<std::size_t> perm(count);
  for (std::size_t d = 0; d < dim; ++d) {
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = count; i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
      std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
    }
    for (std::size_t i = 0; i < count; ++i)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) =
          (static_cast<double>(perm[i]) + uniform01(rng)) / static_cast<double>(count);
  }
  return out;
}

std::vector<double> simple_regret(const std::vector<double>& values, const std::optional<double>& optimum, Sense sense) {
  if (!optimum) throw MissingOptimum("simple regret needs a known optimum");
  const double sign = sense == Sense::kMinimize ? -1.0 : 1.0;
  std::vector<double> out;
  out.reserve(values.size());
  double best = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    best = std::max(best, sign * v);
    out.push_back(std::max(0.0, sign * *optimum - best));
  }
  return out;
}

std::vector<double> cumulative_regret(const std::vector<double>& values, const std::optional<double>& optimum,
                                      Sense sense) {
  if (!optimum) throw MissingOptimum("cumulative regret needs a known optimum");
  const double sign = sense == Sense::kMinimize ? -1.0 : 1.0;
  std::vector<double> out;
  out.reserve(values.size());
  double total = 0.0;
  for (double v : values) {
    total += std::max(0.0, sign * (*optimum - v));
    out.push_back(total);
  }
  return out;
}

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const NumericError*>(&e) != nullptr) return 3;
  if (dynamic_cast<const Error*>(&e) != nullptr) return 2;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e) != nullptr) return 2;
  return 1;
}

DomainBox bounding_box(const Support& domain) {
  if (const auto* b = std::get_if<DomainBox>(&domain)) return *b;
  const Matrix& c = std::get<Matrix>(domain);
  Vector lo = c.colwise().minCoeff().transpose();
  Vector hi = c.colwise().maxCoeff().transpose();
  for (Eigen::Index d = 0; d < lo.size(); ++d)
    if (!(hi[d] > lo[d])) hi[d] = lo[d] + 1.0;
  return DomainBox(lo, hi);
}

HyperparameterChoice resolve_kernel(const KernelMode& mode, const Dataset& data, const Support& domain) {
  const DomainBox box = bounding_box(domain);
  if (mode.kind == KernelMode::Kind::kFixed)
    return {Kernel(mode.signal_variance, Vector::Constant(static_cast<Eigen::Index>(box.dim()), mode.lengthscale)),
            mode.noise_variance, std::numeric_limits<double>::quiet_NaN()};
  if (data.size() >= 3) return select_hyperparameters(data, box);
  const double scale = data.empty() ? 1.0 : std::max(data.values.squaredNorm() / static_cast<double>(data.size()), 1e-12);
  return {Kernel(scale, box.width() * 0.2), 1e-6 * scale, std::numeric_limits<double>::quiet_NaN()};
}

namespace {

struct Observation {
  Vector x;
  std::optional<std::size_t> candidate;
  double internal_noisy;
};

SeedTrace run_seed(const RunConfig& config, const Objective& objective, const OptimumPrior& prior, StrategyKind kind,
                   std::uint64_t seed) {
  const std::size_t dim = objective.dim();
  const double noise_std = config.noise_std.value_or(objective.noise_std);
  Rng noise_rng(derive_seed(seed, Stream::kNoise));
  Rng design_rng(derive_seed(seed, Stream::kLatinHypercube));

  SeedTrace trace;
  trace.seed = seed;
  std::vector<Observation> obs;
  std::vector<double> f_values;

  auto evaluate = [&](const Vector& x, std::optional<std::size_t> candidate, std::size_t iter, double seconds,
                      bool miss) {
    const double f = objective.evaluate(x);
    const double noisy = objective.to_internal(f) + noise_std * standard_normal(noise_rng);
    obs.push_back({x, candidate, noisy});
    f_values.push_back(f);
    TraceRow row;
    row.seed = seed;
    row.iter = iter;
    row.x = x;
    row.candidate_index = candidate;
    row.y = objective.from_internal(noisy);
    row.f = f;
    row.seconds = seconds;
    row.prior_miss = miss;
    trace.rows.push_back(std::move(row));
  };

  // Initial design.
  if (objective.discrete()) {
    const Matrix& c = objective.candidates();
    std::vector<std::size_t> order(static_cast<std::size_t>(c.rows()));
    std::iota(order.begin(), order.end(), 0);
    const std::size_t count = std::min(config.initial_count, order.size());
    for (std::size_t i = 0; i < count; ++i) {
      const auto j = i + static_cast<std::size_t>(uniform01(design_rng) * static_cast<double>(order.size() - i));
      std::swap(order[i], order[std::min(j, order.size() - 1)]);
      evaluate(c.row(static_cast<Eigen::Index>(order[i])).transpose(), order[i], 0, 0.0, false);
    }
  } else {
    const Matrix u = latin_hypercube(config.initial_count, dim, design_rng);
    for (Eigen::Index i = 0; i < u.rows(); ++i) evaluate(objective.box().from_unit(u.row(i).transpose()), std::nullopt, 0, 0.0, false);
  }

  StrategyConfig sc;
  sc.num_samples = config.num_samples;
  sc.feature_count = config.feature_count;
  if (config.restarts) sc.maximize.restarts = *config.restarts;
  sc.base_seed = seed;

  for (std::size_t t = 1; t <= config.iterations; ++t) {
    const auto start = std::chrono::steady_clock::now();
    const auto n = static_cast<Eigen::Index>(obs.size());
    Matrix points(n, static_cast<Eigen::Index>(dim));
    Vector values(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      points.row(i) = obs[static_cast<std::size_t>(i)].x.transpose();
      values[i] = obs[static_cast<std::size_t>(i)].internal_noisy;
    }
    if (config.mean_centering && n > 0) values.array() -= values.mean();

    Suggestion s;
    try {
      Dataset data(points, values, 0.0);
      const auto hp = resolve_kernel(config.kernel, data, objective.domain);
      data.noise_variance = hp.noise_variance;
      const BoState state{std::move(data), hp.kernel, objective.domain, prior, sc, t};
      s = suggest(kind, state);
    } catch (const NumericError& e) {
      throw NumericFailure("seed " + std::to_string(seed) + ", iteration " + std::to_string(t) + ": " + e.what());
    } catch (const InputError& e) {
      throw ConfigError("seed " + std::to_string(seed) + ", iteration " + std::to_string(t) + ": " + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (s.prior_miss) ++trace.prior_misses;
    evaluate(s.point, s.candidate_index, t, seconds, s.prior_miss);
  }

  std::optional<double> optimum;
  if (objective.known_optimum) optimum = objective.known_optimum->value;
  if (optimum) {
    const auto sr = simple_regret(f_values, optimum, objective.sense);
    const auto cr = cumulative_regret(f_values, optimum, objective.sense);
    for (std::size_t i = 0; i < trace.rows.size(); ++i) {
      trace.rows[i].simple_regret = sr[i];
      trace.rows[i].cum_regret = cr[i];
    }
  } else {
    for (auto& r : trace.rows) r.simple_regret = r.cum_regret = std::numeric_limits<double>::quiet_NaN();
  }
  double best = -std::numeric_limits<double>::infinity();
  for (auto& r : trace.rows) {
    best = std::max(best, objective.to_internal(r.y));
    r.best = objective.from_internal(best);
  }
  return trace;
}

}  // namespace

RunResult run(const RunConfig& config) {
  config.validate();
  return run(config, make_objective(config.objective));
}

RunResult run(const RunConfig& config, const Objective& objective) {
  config.validate();
  const StrategyKind kind = parse_strategy(config.strategy);
  const OptimumPrior prior = prior_from_json(config.prior, objective.domain);

  RunResult result;
  result.config = config;
  result.objective_name = objective.name;
  result.dim = objective.dim();
  result.known_optimum = objective.known_optimum;
  result.traces.resize(config.seeds.size());

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::size_t failed_at = config.seeds.size();
  auto worker = [&] {
    for (std::size_t i = next++; i < config.seeds.size(); i = next++) {
      try {
        result.traces[i] = run_seed(config, objective, prior, kind, config.seeds[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < failed_at) {
          failed_at = i;
          first_error = std::current_exception();
        }
      }
    }
  };
  const std::size_t threads = std::min(config.threads, config.seeds.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return result;
}

std::vector<SummaryRow> aggregate(const std::vector<SeedTrace>& traces) {
  std::map<std::size_t, std::vector<std::pair<double, double>>> by_iter;
  for (const auto& t : traces)
    for (const auto& r : t.rows)
      if (r.iter >= 1) by_iter[r.iter].emplace_back(r.simple_regret, r.cum_regret);
  std::vector<SummaryRow> out;
  for (const auto& [iter, vals] : by_iter) {
    const double n = static_cast<double>(vals.size());
    double sr = 0.0, cr = 0.0;
    for (const auto& [s, c] : vals) sr += s, cr += c;
    sr /= n;
    cr /= n;
    double ss = 0.0;
    for (const auto& [s, c] : vals) ss += (s - sr) * (s - sr);
    const double se = vals.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    out.push_back({iter, sr, se, cr});
  }
  return out;
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ValidationError("csv", "bad number \"" + s + "\"");
    return v;
  } catch (const std::logic_error&) {
    throw ValidationError("csv", "bad number \"" + s + "\"");
  }
}

}  // namespace

void write_trace_csv(std::ostream& out, const RunResult& result) {
  out << "seed,iter";
  for (std::size_t d = 0; d < result.dim; ++d) out << ",x_" << d;
  out << ",y,best,simple_regret,cum_regret\n";
  for (const auto& t : result.traces)
    for (const auto& r : t.rows) {
      out << r.seed << ',' << r.iter;
      for (Eigen::Index d = 0; d < r.x.size(); ++d) out << ',' << num(r.x[d]);
      out << ',' << num(r.y) << ',' << num(r.best) << ',' << num(r.simple_regret) << ',' << num(r.cum_regret) << '\n';
    }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary) {
  out << "iter,mean_sr,stderr_sr,mean_cr\n";
  for (const auto& r : summary)
    out << r.iter << ',' << num(r.mean_sr) << ',' << num(r.stderr_sr) << ',' << num(r.mean_cr) << '\n';
}

void write_timing_csv(std::ostream& out, const RunResult& result) {
  out << "seed,iter,seconds,prior_miss\n";
  for (const auto& t : result.traces)
    for (const auto& r : t.rows)
      if (r.iter >= 1) out << r.seed << ',' << r.iter << ',' << num(r.seconds) << ',' << (r.prior_miss ? 1 : 0) << '\n';
}

void write_cloud_csv(std::ostream& out, const MaximizerCloud& cloud, const Objective& objective) {
  const std::size_t dim = objective.dim();
  for (std::size_t d = 0; d < dim; ++d) out << "x_" << d << ',';
  out << "raw_value,weight\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (Eigen::Index d = 0; d < cloud.points[i].size(); ++d) out << num(cloud.points[i][d]) << ',';
    out << num(objective.from_internal(cloud.raw_values[i])) << ',' << num(cloud.weights[i]) << '\n';
  }
}

json manifest(const RunResult& result) {
  json j = {{"library", "priorbo"},
            {"version", library_version()},
            {"config", result.config.to_json()},
            {"objective", result.objective_name},
            {"dim", result.dim},
            {"prior_misses", result.prior_misses()}};
  if (result.known_optimum) {
    const auto& o = *result.known_optimum;
    j["known_optimum"] = {{"location", std::vector<double>(o.location.data(), o.location.data() + o.location.size())},
                          {"value", o.value}};
  }
  return j;
}

void write_run(const std::filesystem::path& dir, const RunResult& result) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw ConfigError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("trace.csv");
    write_trace_csv(f, result);
  }
  {
    auto f = open("summary.csv");
    write_summary_csv(f, aggregate(result.traces));
  }
  {
    auto f = open("timing.csv");
    write_timing_csv(f, result);
  }
  {
    auto f = open("manifest.json");
    f << manifest(result).dump(2) << '\n';
  }
}

std::vector<SeedTrace> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("csv", "empty trace file");
  const auto header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"seed", "iter", "y", "best", "simple_regret", "cum_regret"})
    if (!col.count(need)) throw ValidationError("csv", std::string("missing column ") + need);
  std::size_t dim = 0;
  while (col.count("x_" + std::to_string(dim))) ++dim;

  std::vector<SeedTrace> traces;
  std::map<std::uint64_t, std::size_t> index;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw ValidationError("csv", "row has " + std::to_string(cells.size()) + " cells");
    TraceRow r;
    r.seed = static_cast<std::uint64_t>(parse_number(cells[col["seed"]]));
    r.iter = static_cast<std::size_t>(parse_number(cells[col["iter"]]));
    r.x.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t d = 0; d < dim; ++d) r.x[static_cast<Eigen::Index>(d)] = parse_number(cells[col["x_" + std::to_string(d)]]);
    r.y = parse_number(cells[col["y"]]);
    r.best = parse_number(cells[col["best"]]);
    r.simple_regret = parse_number(cells[col["simple_regret"]]);
    r.cum_regret = parse_number(cells[col["cum_regret"]]);
    auto [it, fresh] = index.emplace(r.seed, traces.size());
    if (fresh) traces.push_back(SeedTrace{r.seed, {}, 0});
    traces[it->second].rows.push_back(std::move(r));
  }
  return traces;
}

PairedComparison compare_runs(const std::vector<SeedTrace>& a, const std::vector<SeedTrace>& b,
                              const std::string& metric, std::size_t at) {
  auto pick = [&](const SeedTrace& t) -> std::optional<double> {
    std::optional<double> v;
    for (const auto& r : t.rows) {
      if (r.iter != at) continue;
      if (metric == "simple_regret") v = r.simple_regret;
      else if (metric == "cum_regret") v = r.cum_regret;
      else if (metric == "best") v = r.best;
      else if (metric == "y") v = r.y;
      else throw ValidationError("metric", "must be simple_regret, cum_regret, best or y");
    }
    return v;
  };
  PairedComparison out;
  out.metric = metric;
  out.at = at;
  std::map<std::uint64_t, const SeedTrace*> b_by_seed;
  for (const auto& t : b) b_by_seed[t.seed] = &t;
  for (const auto& ta : a) {
    const auto it = b_by_seed.find(ta.seed);
    if (it == b_by_seed.end()) continue;
    const auto va = pick(ta), vb = pick(*it->second);
    if (!va || !vb) continue;
    out.seeds.push_back(ta.seed);
    out.a.push_back(*va);
    out.b.push_back(*vb);
    if (*va < *vb) ++out.a_lower;
    else if (*vb < *va) ++out.b_lower;
    else ++out.ties;
    out.mean_difference += *va - *vb;
  }
  if (out.seeds.empty()) throw ValidationError("runs", "no common seeds reach iteration " + std::to_string(at));
  out.mean_difference /= static_cast<double>(out.seeds.size());
  return out;
}

}  // namespace priorbo
