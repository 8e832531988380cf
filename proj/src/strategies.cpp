#include "priorbo/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "priorbo/errors.hpp"

namespace priorbo {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

Vector candidate_row(const Matrix& c, std::size_t i) { return c.row(static_cast<Eigen::Index>(i)).transpose(); }

}  // namespace

std::optional<Vector> BoState::incumbent() const {
  if (data.empty()) return std::nullopt;
  Eigen::Index best = 0;
  data.values.maxCoeff(&best);
  return Vector(data.points.row(best).transpose());
}

void BoState::validate() const {
  if (data.dim() != kernel.dim() && !data.empty()) throw DimensionMismatch("state: data and kernel dimensions differ");
  if (prior.dim() != kernel.dim()) throw DimensionMismatch("state: prior and kernel dimensions differ");
  if (const auto* c = std::get_if<Matrix>(&domain)) {
    if (c->rows() == 0) throw EmptyCandidates("state: candidate set is empty");
    if (static_cast<std::size_t>(c->cols()) != kernel.dim()) throw DimensionMismatch("state: candidates have wrong dimension");
  } else if (std::get<DomainBox>(domain).dim() != kernel.dim()) {
    throw DimensionMismatch("state: box and kernel dimensions differ");
  }
}

StrategyKind parse_strategy(std::string_view name) {
  if (name == "ts") return StrategyKind::kThompson;
  if (name == "psg") return StrategyKind::kPriorGuided;
  if (name == "ei") return StrategyKind::kExpectedImprovement;
  if (name == "prior_random") return StrategyKind::kPriorRandom;
  throw ConfigError("unknown strategy \"" + std::string(name) + "\"");
}

std::string_view to_string(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::kThompson: return "ts";
    case StrategyKind::kPriorGuided: return "psg";
    case StrategyKind::kExpectedImprovement: return "ei";
    case StrategyKind::kPriorRandom: return "prior_random";
  }
  return "unknown";
}

std::vector<double> prior_weights(const OptimumPrior& prior, const MaximizerCloud& cloud, bool* degenerate) {
  const std::size_t n = cloud.size();
  std::vector<double> logw(n);
  double top = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    logw[i] = cloud.indices.empty() || !prior.is_discrete() ? prior.log_density_shape(cloud.points[i])
                                                             : prior.log_density_shape(cloud.indices[i]);
    top = std::max(top, logw[i]);
  }
  std::vector<double> w(n);
  if (degenerate != nullptr) *degenerate = (top == kNegInf);
  if (top == kNegInf) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
    return w;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += (w[i] = std::exp(logw[i] - top));
  for (double& v : w) v /= total;
  return w;
}

std::size_t categorical_index(const std::vector<double>& weights, double u) {
  if (weights.empty()) throw EmptyCandidates("categorical draw over an empty set");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double target = u * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    acc += weights[i];
    if (target < acc) return i;
  }
  return last_positive;
}

MaximizerCloud draw_cloud(const BoState& state, std::size_t count, std::uint64_t seed) {
  state.validate();
  if (count == 0) throw ValidationError("num_samples", "must be at least 1");
  MaximizerCloud cloud;
  cloud.points.reserve(count);
  cloud.raw_values.reserve(count);
  const auto incumbent = state.incumbent();
  const std::size_t m = state.feature_count();

  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, {i}));
    const FeatureMap map = FeatureMap::draw(state.kernel, m, rng);
    const SampledFunction f = sample_posterior_function(map, state.data, rng);
    if (const auto* candidates = std::get_if<Matrix>(&state.domain)) {
      const std::size_t idx = maximize_over_candidates(f, *candidates);
      cloud.indices.push_back(idx);
      cloud.points.push_back(candidate_row(*candidates, idx));
      cloud.raw_values.push_back(f(cloud.points.back()));
    } else {
      auto r = maximize_sampled(f, std::get<DomainBox>(state.domain), rng, state.config.maximize,
                                incumbent ? &*incumbent : nullptr);
      cloud.points.push_back(std::move(r.argmax));
      cloud.raw_values.push_back(r.value);
    }
  }
  cloud.weights = prior_weights(state.prior, cloud, &cloud.degenerate);
  return cloud;
}

MaximizerCloud optimum_density_cloud(const BoState& state) {
  return draw_cloud(state, state.num_samples(), state.suggestion_seed());
}

MaximizerCloud optimum_density_cloud(const BoState& state, std::size_t count, std::uint64_t seed) {
  return draw_cloud(state, count, seed);
}

namespace {

Suggestion select_from_cloud(const BoState& state, MaximizerCloud cloud, std::uint64_t seed, std::string name) {
  Rng selector(derive_seed(seed, Stream::kSelection));
  const std::size_t pick = categorical_index(cloud.weights, uniform01(selector));
  Suggestion s;
  s.point = cloud.points[pick];
  if (!cloud.indices.empty()) s.candidate_index = cloud.indices[pick];
  s.strategy = std::move(name);
  s.seed_used = seed;
  s.prior_miss = cloud.degenerate;
  s.cloud = std::move(cloud);
  (void)state;
  return s;
}

}  // namespace

Suggestion suggest_ts(const BoState& state) {
  const std::uint64_t seed = state.suggestion_seed();
  MaximizerCloud cloud = draw_cloud(state, 1, seed);
  cloud.weights.assign(1, 1.0);
  cloud.degenerate = false;
  return select_from_cloud(state, std::move(cloud), seed, "ts");
}

Suggestion suggest_psg(const BoState& state) {
  const std::uint64_t seed = state.suggestion_seed();
  return select_from_cloud(state, draw_cloud(state, state.num_samples(), seed), seed, "psg");
}

Suggestion suggest_psg_discrete(const BoState& state) {
  if (!state.discrete()) throw ConfigError("discrete posterior sampling needs a candidate domain");
  const std::uint64_t seed = state.suggestion_seed();
  MaximizerCloud cloud = draw_cloud(state, state.num_samples(), seed);
  const Matrix& candidates = std::get<Matrix>(state.domain);
  const auto n = static_cast<std::size_t>(candidates.rows());

  // Argmax frequencies per location; identical rows are one location and
  // share its frequency (the scan always reports the lowest such index).
  std::vector<double> counts(n, 0.0);
  for (std::size_t idx : cloud.indices) counts[idx] += 1.0;
  std::vector<double> frequency(n, 0.0);
  std::vector<bool> grouped(n, false);
  for (std::size_t a = 0; a < n; ++a) {
    if (grouped[a]) continue;
    std::vector<std::size_t> group{a};
    double mass = counts[a];
    for (std::size_t b = a + 1; b < n; ++b) {
      if (!grouped[b] && candidates.row(static_cast<Eigen::Index>(a)) == candidates.row(static_cast<Eigen::Index>(b))) {
        group.push_back(b);
        grouped[b] = true;
        mass += counts[b];
      }
    }
    for (std::size_t g : group)
      frequency[g] = mass / static_cast<double>(group.size()) / static_cast<double>(cloud.size());
  }

  std::vector<double> logp(n, kNegInf);
  double top = kNegInf;
  for (std::size_t c = 0; c < n; ++c) {
    if (frequency[c] == 0.0) continue;
    logp[c] = std::log(frequency[c]) + state.prior.log_density_shape(c);
    top = std::max(top, logp[c]);
  }
  std::vector<double> prob(n, 0.0);
  bool miss = false;
  if (top == kNegInf) {
    prob = frequency;  // uniform over the cloud members
    miss = true;
  } else {
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) total += (prob[c] = logp[c] == kNegInf ? 0.0 : std::exp(logp[c] - top));
    for (double& p : prob) p /= total;
  }

  Rng selector(derive_seed(seed, Stream::kSelection));
  const std::size_t pick = categorical_index(prob, uniform01(selector));
  Suggestion s;
  s.point = candidate_row(candidates, pick);
  s.candidate_index = pick;
  s.strategy = "psg";
  s.seed_used = seed;
  s.prior_miss = miss;
  s.candidate_probabilities = std::move(prob);
  s.cloud = std::move(cloud);
  return s;
}

double expected_improvement(const GpPosterior& post, const Vector& x, double best) {
  const Prediction p = post.predict(x);
  const double sd = std::sqrt(p.variance);
  const double gap = p.mean - best;
  if (!(sd > 0.0)) return std::max(gap, 0.0);
  const double z = gap / sd;
  return std::max(gap * normal_cdf(z) + sd * normal_pdf(z), 0.0);
}

ExpectedImprovement expected_improvement_with_gradient(const GpPosterior& post, const Vector& x, double best) {
  const PredictionGradient p = post.predict_with_gradient(x);
  const double sd = std::sqrt(p.variance);
  const double gap = p.mean - best;
  if (!(sd > 0.0)) {
    if (gap > 0.0) return {gap, p.mean_grad};
    return {0.0, Vector::Zero(x.size())};
  }
  const double z = gap / sd;
  const double cdf = normal_cdf(z);
  const double pdf = normal_pdf(z);
  const double value = std::max(gap * cdf + sd * pdf, 0.0);
  Vector grad = cdf * p.mean_grad + pdf * (p.variance_grad / (2.0 * sd));
  return {value, std::move(grad)};
}

Suggestion suggest_ei(const BoState& state) {
  state.validate();
  if (state.data.empty()) throw NoObservations("expected improvement needs at least one observation");
  const std::uint64_t seed = state.suggestion_seed();
  const GpPosterior post = fit(state.kernel, state.data);
  const double best = state.data.values.maxCoeff();

  Suggestion s;
  s.strategy = "ei";
  s.seed_used = seed;
  if (const auto* candidates = std::get_if<Matrix>(&state.domain)) {
    std::size_t pick = 0;
    double top = kNegInf;
    for (Eigen::Index i = 0; i < candidates->rows(); ++i) {
      const double v = expected_improvement(post, candidates->row(i).transpose(), best);
      if (v > top) {
        top = v;
        pick = static_cast<std::size_t>(i);
      }
    }
    s.point = candidate_row(*candidates, pick);
    s.candidate_index = pick;
    return s;
  }

  const DomainBox& box = std::get<DomainBox>(state.domain);
  Rng rng(derive_seed(seed, Stream::kEi));
  const auto& opts = state.config.maximize;
  std::vector<Vector> starts;
  if (auto inc = state.incumbent()) starts.push_back(*inc);
  std::vector<std::pair<double, Vector>> pool;
  const std::size_t pool_size = std::max<std::size_t>(opts.pool_size, static_cast<std::size_t>(opts.restarts));
  for (std::size_t i = 0; i < pool_size; ++i) {
    Vector u(static_cast<Eigen::Index>(box.dim()));
    for (Eigen::Index d = 0; d < u.size(); ++d) u[d] = uniform01(rng);
    Vector x = box.from_unit(u);
    const double v = expected_improvement(post, x, best);
    pool.emplace_back(v, std::move(x));
  }
  std::stable_sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; k < std::min<std::size_t>(static_cast<std::size_t>(opts.restarts), pool.size()); ++k)
    starts.push_back(pool[k].second);

  auto objective = [&](const Vector& x, Vector& grad) {
    auto ei = expected_improvement_with_gradient(post, x, best);
    grad = std::move(ei.gradient);
    return ei.value;
  };
  detail::AscentOptions ascent = opts.ascent;
  ascent.min_step = std::min(ascent.min_step, 1e-7);
  ascent.max_evaluations = std::max(ascent.max_evaluations, 200);
  double top = kNegInf;
  for (const Vector& start : starts) {
    auto r = detail::projected_ascent(objective, box, start, ascent);
    if (s.point.size() == 0 || r.value > top) {
      top = r.value;
      s.point = std::move(r.x);
    }
  }
  return s;
}

Suggestion suggest_prior_random(const OptimumPrior& prior, Rng& rng) {
  Suggestion s;
  s.strategy = "prior_random";
  if (prior.is_discrete()) {
    const std::size_t idx = prior.sample_index(rng);
    s.candidate_index = idx;
    s.point = candidate_row(prior.candidates(), idx);
  } else {
    s.point = prior.sample(rng);
  }
  return s;
}

Suggestion suggest_prior_random(const BoState& state) {
  const std::uint64_t seed = state.suggestion_seed();
  Rng rng(derive_seed(seed, Stream::kPrior));
  Suggestion s = suggest_prior_random(state.prior, rng);
  s.seed_used = seed;
  return s;
}

Suggestion suggest(StrategyKind kind, const BoState& state) {
  switch (kind) {
    case StrategyKind::kThompson: return suggest_ts(state);
    case StrategyKind::kPriorGuided: return state.discrete() ? suggest_psg_discrete(state) : suggest_psg(state);
    case StrategyKind::kExpectedImprovement: return suggest_ei(state);
    case StrategyKind::kPriorRandom: return suggest_prior_random(state);
  }
  throw ConfigError("unknown strategy");
}

}  // namespace priorbo
