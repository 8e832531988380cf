#include "priorbo/priors.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "priorbo/errors.hpp"

namespace priorbo {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double apply_transform(Transform t, double x) { return t == Transform::kLog ? std::log(x) : x; }
double invert_transform(Transform t, double u) { return t == Transform::kLog ? std::exp(u) : u; }

double gamma_origin(const GammaFactor& g, double lower) {
  return g.origin.value_or(apply_transform(g.transform, lower));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_quantile(double p) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p); }

// Inverse-CDF draw of N(mean, sd^2) truncated to [lo, hi].
double truncated_normal_inverse_cdf(double mean, double sd, double lo, double hi, double u) {
  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  double z;
  if (a > 0.0) {
    // Both bounds in the upper tail: work with survival probabilities.
    const double qa = normal_cdf(-a);
    const double qb = normal_cdf(-b);
    const double p = qa - u * (qa - qb);
    if (!(qa - qb > 0.0) || !(p > 0.0)) throw RejectionBudgetExceeded("prior mass outside the box underflows");
    z = -normal_quantile(p);
  } else {
    const double pa = normal_cdf(a);
    const double pb = normal_cdf(b);
    const double p = pa + u * (pb - pa);
    if (!(pb - pa > 0.0) || !(p > 0.0) || !(p < 1.0))
      throw RejectionBudgetExceeded("prior mass outside the box underflows");
    z = normal_quantile(p);
  }
  return std::clamp(mean + sd * z, lo, hi);
}

double truncated_gamma_inverse_cdf(double shape, double rate, double zlo, double zhi, double u) {
  zlo = std::max(zlo, 0.0);
  const double plo = boost::math::gamma_p(shape, rate * zlo);
  double z;
  if (plo > 0.5) {
    const double qlo = boost::math::gamma_q(shape, rate * zlo);
    const double qhi = boost::math::gamma_q(shape, rate * zhi);
    const double q = qlo - u * (qlo - qhi);
    if (!(qlo - qhi > 0.0) || !(q > 0.0)) throw RejectionBudgetExceeded("gamma prior mass outside the box underflows");
    z = boost::math::gamma_q_inv(shape, q) / rate;
  } else {
    const double phi = boost::math::gamma_p(shape, rate * zhi);
    const double p = plo + u * (phi - plo);
    if (!(phi - plo > 0.0) || !(p < 1.0)) throw RejectionBudgetExceeded("gamma prior mass outside the box underflows");
    z = p > 0.0 ? boost::math::gamma_p_inv(shape, p) / rate : 0.0;
  }
  return std::clamp(z, zlo, zhi);
}

double truncated_normal_mass(double mean, double sd, double lo, double hi) {
  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  return a > 0.0 ? normal_cdf(-a) - normal_cdf(-b) : normal_cdf(b) - normal_cdf(a);
}

double truncated_gamma_mass(double shape, double rate, double zlo, double zhi) {
  if (!(zhi > 0.0)) return 0.0;
  zlo = std::max(zlo, 0.0);
  return boost::math::gamma_p(shape, rate * zlo) > 0.5
             ? boost::math::gamma_q(shape, rate * zlo) - boost::math::gamma_q(shape, rate * zhi)
             : boost::math::gamma_p(shape, rate * zhi) - boost::math::gamma_p(shape, rate * zlo);
}

// Below this acceptance rate the automatic mode skips rejection and goes
// straight to the per-dimension inverse CDF (both are exact).
constexpr double kMinAcceptance = 1e-3;

}  // namespace

OptimumPrior::OptimumPrior(Shape shape, Support support, double scale)
    : shape_(std::move(shape)), support_(std::move(support)), scale_(scale) {
  if (!(scale_ > 0.0) || !std::isfinite(scale_)) throw ValidationError("scale", "must be positive and finite");
  if (is_discrete() && std::get<Matrix>(support_).rows() == 0) throw EmptyCandidates("prior candidate table is empty");
  const std::size_t d = dim();

  std::visit(Overloaded{
                 [](const Uniform&) {},
                 [&](const TruncatedGaussian& g) {
                   if (static_cast<std::size_t>(g.mean.size()) != d)
                     throw ValidationError("mean", "expected " + std::to_string(d) + " entries, got " +
                                                       std::to_string(g.mean.size()));
                   if (static_cast<std::size_t>(g.variance.size()) != d)
                     throw ValidationError("variance", "expected " + std::to_string(d) + " entries, got " +
                                                           std::to_string(g.variance.size()));
                   if (!g.mean.allFinite()) throw ValidationError("mean", "must be finite");
                   if (!(g.variance.array() > 0.0).all() || !g.variance.allFinite())
                     throw ValidationError("variance", "entries must be strictly positive");
                 },
                 [&](const GammaProduct& g) {
                   if (g.factors.size() != d)
                     throw ValidationError("dimensions", "expected " + std::to_string(d) + " entries, got " +
                                                             std::to_string(g.factors.size()));
                   for (std::size_t i = 0; i < d; ++i) {
                     if (!g.factors[i]) continue;
                     const auto& f = *g.factors[i];
                     const std::string field = "dimensions[" + std::to_string(i) + "]";
                     if (!(f.shape > 0.0) || !std::isfinite(f.shape)) throw ValidationError(field + ".shape", "must be positive");
                     if (!(f.rate > 0.0) || !std::isfinite(f.rate)) throw ValidationError(field + ".rate", "must be positive");
                     if (!(f.scale > 0.0) || !std::isfinite(f.scale)) throw ValidationError(field + ".scale", "must be positive");
                     if (f.transform == Transform::kLog) {
                       const double lowest = is_discrete()
                                                 ? std::get<Matrix>(support_).col(static_cast<Eigen::Index>(i)).minCoeff()
                                                 : std::get<DomainBox>(support_).lower()[static_cast<Eigen::Index>(i)];
                       if (!(lowest > 0.0)) throw ValidationError(field + ".transform", "log transform needs a positive domain");
                     }
                   }
                 },
                 [&](const DiscreteTable& t) {
                   if (!is_discrete()) throw ValidationError("type", "a discrete prior needs a candidate domain");
                   if (t.weights.size() != std::get<Matrix>(support_).rows())
                     throw ValidationError("weights", "expected " + std::to_string(std::get<Matrix>(support_).rows()) +
                                                          " entries, got " + std::to_string(t.weights.size()));
                   if (!t.weights.allFinite() || (t.weights.array() < 0.0).any())
                     throw ValidationError("weights", "must be nonnegative and finite");
                   const double total = t.weights.sum();
                   if (!(total > 0.0) || !std::isfinite(total))
                     throw ValidationError("weights", "must sum to a positive finite value");
                 },
             },
             shape_);
}

OptimumPrior OptimumPrior::uniform(Support support) { return OptimumPrior(Uniform{}, std::move(support)); }

OptimumPrior OptimumPrior::truncated_gaussian(Support support, Vector mean, Vector variance) {
  return OptimumPrior(TruncatedGaussian{std::move(mean), std::move(variance)}, std::move(support));
}

OptimumPrior OptimumPrior::gamma_product(Support support, std::vector<std::optional<GammaFactor>> factors) {
  return OptimumPrior(GammaProduct{std::move(factors)}, std::move(support));
}

OptimumPrior OptimumPrior::discrete(Matrix candidates, Vector weights) {
  return OptimumPrior(DiscreteTable{std::move(weights)}, std::move(candidates));
}

std::size_t OptimumPrior::dim() const noexcept {
  if (const auto* box = std::get_if<DomainBox>(&support_)) return box->dim();
  return static_cast<std::size_t>(std::get<Matrix>(support_).cols());
}

const Matrix& OptimumPrior::candidates() const {
  if (const auto* c = std::get_if<Matrix>(&support_)) return *c;
  throw ConfigError("prior has a continuous support");
}

const DomainBox& OptimumPrior::box() const {
  if (const auto* b = std::get_if<DomainBox>(&support_)) return *b;
  throw ConfigError("prior has a discrete support");
}

OptimumPrior OptimumPrior::scaled(double c) const {
  if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("scale", "must be positive and finite");
  OptimumPrior copy = *this;
  copy.scale_ = scale_ * c;
  return copy;
}

double OptimumPrior::continuous_log_shape(const Vector& x) const {
  return std::visit(
      Overloaded{
          [](const Uniform&) { return 0.0; },
          [&](const TruncatedGaussian& g) {
            return -0.5 * ((x - g.mean).array().square() / g.variance.array()).sum();
          },
          [&](const GammaProduct& g) {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.factors.size(); ++i) {
              if (!g.factors[i]) continue;
              const auto& f = *g.factors[i];
              const auto d = static_cast<Eigen::Index>(i);
              const double lower = is_discrete() ? candidates().col(d).minCoeff() : box().lower()[d];
              if (f.transform == Transform::kLog && !(x[d] > 0.0)) return kNegInf;
              const double z = f.scale * (apply_transform(f.transform, x[d]) - gamma_origin(f, lower));
              if (!(z > 0.0)) {
                // Density limit at z = 0 is finite only for shape >= 1.
                if (z == 0.0 && f.shape == 1.0) {
                  acc += std::log(f.scale);
                  continue;
                }
                return kNegInf;
              }
              const double jac = f.transform == Transform::kLog ? f.scale / x[d] : f.scale;
              acc += (f.shape - 1.0) * std::log(z) - f.rate * z + std::log(jac);
            }
            return acc;
          },
          [](const DiscreteTable&) -> double { throw ConfigError("discrete prior evaluated at a continuous point"); },
      },
      shape_);
}

double OptimumPrior::log_density_shape(std::size_t candidate) const {
  const Matrix& c = candidates();
  if (candidate >= static_cast<std::size_t>(c.rows())) return kNegInf;
  if (const auto* t = std::get_if<DiscreteTable>(&shape_)) {
    const double w = t->weights[static_cast<Eigen::Index>(candidate)];
    return w > 0.0 ? std::log(w) : kNegInf;
  }
  return continuous_log_shape(c.row(static_cast<Eigen::Index>(candidate)).transpose());
}

double OptimumPrior::log_density_shape(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) throw DimensionMismatch("prior density: wrong input dimension");
  if (const auto* c = std::get_if<Matrix>(&support_)) {
    for (Eigen::Index i = 0; i < c->rows(); ++i) {
      if (c->row(i).transpose() == x) return log_density_shape(static_cast<std::size_t>(i));
    }
    return kNegInf;
  }
  if (!box().contains(x)) return kNegInf;
  return continuous_log_shape(x);
}

double OptimumPrior::log_density(const Vector& x) const { return std::log(scale_) + log_density_shape(x); }

double OptimumPrior::density(const Vector& x) const { return scale_ * std::exp(log_density_shape(x)); }

double OptimumPrior::density(std::size_t candidate) const { return scale_ * std::exp(log_density_shape(candidate)); }

std::size_t OptimumPrior::sample_index(Rng& rng) const {
  const Matrix& c = candidates();
  const auto n = static_cast<std::size_t>(c.rows());
  std::vector<double> logw(n);
  double top = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    logw[i] = log_density_shape(i);
    top = std::max(top, logw[i]);
  }
  if (top == kNegInf) throw RejectionBudgetExceeded("prior assigns zero mass to every candidate");
  std::vector<double> cumulative(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += std::exp(logw[i] - top);
    cumulative[i] = total;
  }
  const double u = uniform01(rng) * total;
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  std::size_t idx = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(), n - 1));
  while (logw[idx] == kNegInf && idx > 0) --idx;  // u landed exactly on a zero-width step
  return idx;
}

Vector OptimumPrior::sample(Rng& rng, SamplingMode mode) const {
  if (is_discrete()) return candidates().row(static_cast<Eigen::Index>(sample_index(rng))).transpose();
  return sample_continuous(box(), rng, mode);
}

Vector OptimumPrior::sample_continuous(const DomainBox& b, Rng& rng, SamplingMode mode) const {
  const auto d = static_cast<Eigen::Index>(b.dim());
  Vector x(d);
  if (std::holds_alternative<Uniform>(shape_)) {
    for (Eigen::Index i = 0; i < d; ++i) x[i] = uniform01(rng);
    return b.from_unit(x);
  }

  if (const auto* g = std::get_if<TruncatedGaussian>(&shape_)) {
    double acceptance = 1.0;
    if (mode == SamplingMode::kAuto)
      for (Eigen::Index i = 0; i < d; ++i)
        acceptance *= truncated_normal_mass(g->mean[i], std::sqrt(g->variance[i]), b.lower()[i], b.upper()[i]);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t budget = acceptance < kMinAcceptance ? 0 : kRejectionBudget;
    for (std::size_t attempt = 0; attempt < budget; ++attempt) {
      for (Eigen::Index i = 0; i < d; ++i) x[i] = g->mean[i] + std::sqrt(g->variance[i]) * normal(rng);
      if (b.contains(x)) return x;
    }
    if (mode == SamplingMode::kRejectionOnly)
      throw RejectionBudgetExceeded("truncated Gaussian: no proposal inside the box after 10000 draws");
    for (Eigen::Index i = 0; i < d; ++i)
      x[i] = truncated_normal_inverse_cdf(g->mean[i], std::sqrt(g->variance[i]), b.lower()[i], b.upper()[i],
                                          uniform01(rng));
    return x;
  }

  const auto& gp = std::get<GammaProduct>(shape_);
  auto propose = [&](Eigen::Index i) {
    const auto& f = gp.factors[static_cast<std::size_t>(i)];
    if (!f) return b.lower()[i] + (b.upper()[i] - b.lower()[i]) * uniform01(rng);
    const double z = std::gamma_distribution<double>(f->shape, 1.0 / f->rate)(rng);
    return invert_transform(f->transform, z / f->scale + gamma_origin(*f, b.lower()[i]));
  };
  double acceptance = 1.0;
  if (mode == SamplingMode::kAuto) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const auto& f = gp.factors[static_cast<std::size_t>(i)];
      if (!f) continue;
      const double origin = gamma_origin(*f, b.lower()[i]);
      acceptance *= truncated_gamma_mass(f->shape, f->rate, f->scale * (apply_transform(f->transform, b.lower()[i]) - origin),
                                         f->scale * (apply_transform(f->transform, b.upper()[i]) - origin));
    }
  }
  const std::size_t budget = acceptance < kMinAcceptance ? 0 : kRejectionBudget;
  for (std::size_t attempt = 0; attempt < budget; ++attempt) {
    for (Eigen::Index i = 0; i < d; ++i) x[i] = propose(i);
    if (b.contains(x)) return x;
  }
  if (mode == SamplingMode::kRejectionOnly)
    throw RejectionBudgetExceeded("gamma prior: no proposal inside the box after 10000 draws");
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& f = gp.factors[static_cast<std::size_t>(i)];
    if (!f) {
      x[i] = b.lower()[i] + (b.upper()[i] - b.lower()[i]) * uniform01(rng);
      continue;
    }
    const double origin = gamma_origin(*f, b.lower()[i]);
    const double zlo = f->scale * (apply_transform(f->transform, b.lower()[i]) - origin);
    const double zhi = f->scale * (apply_transform(f->transform, b.upper()[i]) - origin);
    if (!(zhi > 0.0)) throw RejectionBudgetExceeded("gamma prior support does not intersect the box");
    const double z = truncated_gamma_inverse_cdf(f->shape, f->rate, zlo, zhi, uniform01(rng));
    x[i] = std::clamp(invert_transform(f->transform, z / f->scale + origin), b.lower()[i], b.upper()[i]);
  }
  return x;
}

InformativenessReport informativeness(const OptimumPrior& prior, const Vector& x_true, double delta,
                                      std::size_t mc_samples, Rng& rng) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta", "must lie in (0, 1)");
  if (mc_samples < 2) throw ValidationError("mc_samples", "need at least 2 samples");
  if (static_cast<std::size_t>(x_true.size()) != prior.dim()) throw DimensionMismatch("x_true has wrong dimension");

  InformativenessReport report;
  report.delta = delta;

  std::vector<double> distances;
  if (prior.is_discrete()) {
    const Matrix& c = prior.candidates();
    const auto n = static_cast<std::size_t>(c.rows());
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += (w[i] = std::exp(prior.log_density_shape(i)));
    const double at_true = std::exp(prior.log_density_shape(x_true));
    report.r1 = at_true / total - 1.0 / static_cast<double>(n);

    // Exact weighted quantile of the distance.
    std::vector<std::pair<double, double>> dist_mass(n);
    for (std::size_t i = 0; i < n; ++i)
      dist_mass[i] = {(c.row(static_cast<Eigen::Index>(i)).transpose() - x_true).norm(), w[i] / total};
    std::sort(dist_mass.begin(), dist_mass.end());
    double mass = 0.0;
    for (const auto& [dist, m] : dist_mass) {
      mass += m;
      report.r2 = dist;
      if (mass >= 1.0 - delta) break;
    }
    report.mass_within_r2 = mass;
    return report;
  }

  const DomainBox& box = prior.box();
  if (!box.contains(x_true)) throw OutOfDomain("x_true lies outside the prior support");
  const double volume = box.volume();
  const auto d = static_cast<Eigen::Index>(box.dim());

  // Normalizing constant by uniform Monte-Carlo over the box.
  double sum = 0.0, sum_sq = 0.0;
  Vector u(d);
  for (std::size_t s = 0; s < mc_samples; ++s) {
    for (Eigen::Index i = 0; i < d; ++i) u[i] = uniform01(rng);
    const double v = std::exp(prior.log_density_shape(box.from_unit(u)));
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(mc_samples);
  const double mean = sum / n;
  const double var = std::max(sum_sq / n - mean * mean, 0.0) * n / (n - 1.0);
  const double z = volume * mean;
  if (!(z > 0.0)) throw NumericFailure("prior normalization estimate is zero");
  const double z_se = volume * std::sqrt(var / n);
  const double normalized = std::exp(prior.log_density_shape(x_true)) / z;
  report.r1 = normalized - 1.0 / volume;
  report.r1_stderr = normalized * z_se / z;

  distances.reserve(mc_samples);
  for (std::size_t s = 0; s < mc_samples; ++s) distances.push_back((prior.sample(rng) - x_true).norm());
  std::sort(distances.begin(), distances.end());
  const auto k = static_cast<std::size_t>(std::ceil((1.0 - delta) * n)) - 1;
  report.r2 = distances[std::min(k, mc_samples - 1)];
  const auto within = static_cast<double>(std::upper_bound(distances.begin(), distances.end(), report.r2) - distances.begin());
  report.mass_within_r2 = within / n;
  report.mass_stderr = std::sqrt(report.mass_within_r2 * (1.0 - report.mass_within_r2) / n);
  return report;
}

}  // namespace priorbo
