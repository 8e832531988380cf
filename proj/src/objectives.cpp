#include "priorbo/objectives.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "priorbo/detail/ascent.hpp"
#include "priorbo/errors.hpp"
#include "priorbo/random.hpp"
#include "priorbo/simd/kernels.hpp"

namespace priorbo {

std::size_t Objective::dim() const {
  if (const auto* c = std::get_if<Matrix>(&domain)) return static_cast<std::size_t>(c->cols());
  return std::get<DomainBox>(domain).dim();
}

const DomainBox& Objective::box() const {
  if (const auto* b = std::get_if<DomainBox>(&domain)) return *b;
  throw ConfigError("objective " + name + " has a discrete domain");
}

const Matrix& Objective::candidates() const {
  if (const auto* c = std::get_if<Matrix>(&domain)) return *c;
  throw ConfigError("objective " + name + " has a continuous domain");
}

namespace {

void require_inside(const DomainBox& box, const Vector& x, const std::string& name) {
  if (static_cast<std::size_t>(x.size()) != box.dim()) throw DimensionMismatch(name + ": wrong input dimension");
  if (!box.contains(x)) throw OutOfBox(name + ": input outside the domain box");
}

}  // namespace

KnownOptimum locate_maximum(const std::function<double(const Vector&)>& f, const DomainBox& box,
                            std::size_t resolution, std::size_t polish_starts) {
  const std::size_t dim = box.dim();
  if (resolution < 2) throw ValidationError("resolution", "must be at least 2");
  std::vector<std::pair<double, Vector>> scan;
  const double grid_size = std::pow(static_cast<double>(resolution), static_cast<double>(dim));
  Vector u(static_cast<Eigen::Index>(dim));
  if (grid_size <= 4e6) {
    std::vector<std::size_t> idx(dim, 0);
    const auto total = static_cast<std::size_t>(grid_size);
    scan.reserve(total);
    for (std::size_t k = 0; k < total; ++k) {
      std::size_t rest = k;
      for (std::size_t d = 0; d < dim; ++d) {
        u[static_cast<Eigen::Index>(d)] = static_cast<double>(rest % resolution) / static_cast<double>(resolution - 1);
        rest /= resolution;
      }
      Vector x = box.from_unit(u);
      const double v = f(x);
      scan.emplace_back(v, std::move(x));
    }
  } else {
    Rng rng(derive_seed(resolution, {dim}));
    const std::size_t total = resolution * resolution * 10;
    for (std::size_t k = 0; k < total; ++k) {
      for (std::size_t d = 0; d < dim; ++d) u[static_cast<Eigen::Index>(d)] = uniform01(rng);
      Vector x = box.from_unit(u);
      const double v = f(x);
      scan.emplace_back(v, std::move(x));
    }
  }
  const std::size_t keep = std::min(polish_starts, scan.size());
  std::partial_sort(scan.begin(), scan.begin() + static_cast<std::ptrdiff_t>(keep), scan.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });

  const Vector width = box.width();
  auto objective = [&](const Vector& x, Vector& grad) {
    const double v = f(x);
    grad.resize(x.size());
    for (Eigen::Index d = 0; d < x.size(); ++d) {
      const double h = 1e-7 * width[d];
      Vector a = x, b = x;
      a[d] = std::min(a[d] + h, box.upper()[d]);
      b[d] = std::max(b[d] - h, box.lower()[d]);
      grad[d] = (f(a) - f(b)) / (a[d] - b[d]);
    }
    return v;
  };
  detail::AscentOptions opts;
  opts.initial_step = 1e-3;
  opts.min_step = 1e-10;
  opts.max_evaluations = 3000;

  KnownOptimum best{scan.front().second, scan.front().first, std::nullopt};
  for (std::size_t k = 0; k < keep; ++k) {
    const auto r = detail::projected_ascent(objective, box, scan[k].second, opts);
    if (r.value > best.value) best = {r.x, r.value, std::nullopt};
  }
  return best;
}

GpSampleInstance gp_sample_instance(std::size_t dim, std::uint64_t seed, const Kernel& kernel,
                                    const GpSampleOptions& options) {
  if (options.grid_points < 100) throw ValidationError("grid_points", "must be at least 100");
  if (kernel.dim() != dim) throw DimensionMismatch("gp sample: kernel dimension differs");
  const auto n = static_cast<Eigen::Index>(options.grid_points);
  const auto d = static_cast<Eigen::Index>(dim);

  Rng loc_rng(derive_seed(seed, {1}));
  Matrix points(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) points(i, j) = uniform01(loc_rng);

  const Matrix gram = kernel.gram(points);
  const auto prior_chol = jittered_cholesky(gram, kernel.signal_variance());
  Rng value_rng(derive_seed(seed, {2}));
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = standard_normal(value_rng);
  Vector values = prior_chol.llt.matrixL() * z;

  const GpPosterior post = fit(kernel, Dataset(points, values, options.noise_variance));

  struct Mean {
    Matrix points;
    Vector alpha;
    Vector inv_sq;
    double scale;
  };
  auto mean = std::make_shared<Mean>(
      Mean{points, post.solved_coeffs(), kernel.lengthscales().array().square().inverse().matrix(),
           kernel.signal_variance()});
  const DomainBox box = DomainBox::unit(dim);
  auto evaluate_raw = [mean](const Vector& x) {
    const simd::PointsView view{mean->points.data(), static_cast<std::size_t>(mean->points.rows()),
                                static_cast<std::size_t>(mean->points.cols())};
    return simd::active_kernels().se_weighted_sum(view, mean->inv_sq.data(), mean->alpha.data(), x.data(), mean->scale);
  };

  GpSampleInstance out;
  out.objective.name = "gp" + std::to_string(dim) + "d:" + std::to_string(seed);
  out.objective.domain = box;
  out.objective.sense = Sense::kMinimize;
  out.objective.noise_std = std::sqrt(options.noise_variance);
  out.objective.evaluate = [box, evaluate_raw, name = out.objective.name](const Vector& x) {
    require_inside(box, x, name);
    return evaluate_raw(x);
  };
  auto opt = locate_maximum([&](const Vector& x) { return -evaluate_raw(x); }, box, options.scan_resolution);
  opt.value = -opt.value;
  out.objective.known_optimum = std::move(opt);
  out.points = std::move(points);
  out.sampled_values = std::move(values);
  return out;
}

Objective gp_sample_objective(std::size_t dim, std::uint64_t seed, const Kernel& kernel,
                              const GpSampleOptions& options) {
  return gp_sample_instance(dim, seed, kernel, options).objective;
}

namespace {

constexpr std::array<double, 4> kHartmannAlpha{1.0, 1.2, 3.0, 3.2};
constexpr double kHartmannA[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                                     {0.05, 10, 17, 0.1, 8, 14},
                                     {3, 3.5, 1.7, 10, 17, 8},
                                     {17, 8, 0.05, 10, 0.1, 14}};
constexpr double kHartmannP[4][6] = {{1312, 1696, 5569, 124, 8283, 5886},
                                     {2329, 4135, 8307, 3736, 1004, 9991},
                                     {2348, 1451, 3522, 2883, 3047, 6650},
                                     {4047, 8828, 8732, 5743, 1091, 381}};

}  // namespace

double hartmann6(const Vector& x) {
  static const DomainBox box = DomainBox::unit(6);
  require_inside(box, x, "hartmann6");
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (int j = 0; j < 6; ++j) {
      const double diff = x[j] - kHartmannP[i][j] * 1e-4;
      inner += kHartmannA[i][j] * diff * diff;
    }
    total += kHartmannAlpha[i] * std::exp(-inner);
  }
  return -total;
}

Vector hartmann6_reference_minimizer() {
  return (Vector(6) << 0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573).finished();
}

Objective hartmann6_objective() {
  Objective o;
  o.name = "hartmann6";
  o.domain = DomainBox::unit(6);
  o.evaluate = hartmann6;
  o.sense = Sense::kMinimize;
  o.noise_std = 1e-3;
  // Polish the published location; it is given to 5-6 digits.
  detail::AscentOptions opts;
  opts.initial_step = 1e-4;
  opts.min_step = 1e-12;
  opts.max_evaluations = 5000;
  auto neg = [](const Vector& x, Vector& grad) {
    grad.resize(6);
    double total = 0.0;
    grad.setZero();
    for (int i = 0; i < 4; ++i) {
      double inner = 0.0;
      for (int j = 0; j < 6; ++j) {
        const double diff = x[j] - kHartmannP[i][j] * 1e-4;
        inner += kHartmannA[i][j] * diff * diff;
      }
      const double term = kHartmannAlpha[i] * std::exp(-inner);
      total += term;
      for (int j = 0; j < 6; ++j) grad[j] -= term * 2.0 * kHartmannA[i][j] * (x[j] - kHartmannP[i][j] * 1e-4);
    }
    return total;
  };
  const auto r = detail::projected_ascent(neg, DomainBox::unit(6), hartmann6_reference_minimizer(), opts);
  o.known_optimum = KnownOptimum{r.x, hartmann6(r.x), std::nullopt};
  return o;
}

double toy_1d(double x) {
  if (!(x >= 0.0 && x <= 6.0)) throw OutOfBox("toy1d: input outside [0, 6]");
  auto bump = [](double x, double c, double s) { return std::exp(-(x - c) * (x - c) / (2.0 * s * s)); };
  return -1.2 * bump(x, 2.0, 0.35) - 0.8 * (bump(x, 4.5, 0.5) + bump(x, -0.5, 0.5));
}

Objective toy_1d_objective() {
  Objective o;
  o.name = "toy1d";
  o.domain = DomainBox(Vector::Constant(1, 0.0), Vector::Constant(1, 6.0));
  o.evaluate = [](const Vector& x) {
    if (x.size() != 1) throw DimensionMismatch("toy1d: wrong input dimension");
    return toy_1d(x[0]);
  };
  o.sense = Sense::kMinimize;
  o.noise_std = 1e-3;
  o.known_optimum = KnownOptimum{Vector::Constant(1, 2.0), toy_1d(2.0), std::nullopt};
  return o;
}

const std::vector<SpfFactor>& spf_factors() {
  static const std::vector<SpfFactor> factors{
      {"channel_width_um", {200.0, 400.0, 600.0}},
      {"constriction_angle_deg", {15.0, 30.0, 45.0}},
      {"device_position", {1.0, 2.0}},
      {"butanol_speed", {43.0, 68.0, 95.0}},
      {"polymer_concentration_pct", {1.0, 2.0, 3.0}},
  };
  return factors;
}

namespace {

// Level indices of candidate row `index`; the last factor varies fastest.
std::array<std::size_t, 5> spf_level_indices(std::size_t index) {
  const auto& f = spf_factors();
  std::array<std::size_t, 5> idx{};
  for (std::size_t k = 5; k-- > 0;) {
    idx[k] = index % f[k].levels.size();
    index /= f[k].levels.size();
  }
  return idx;
}

double spf_response(const Vector& u) {
  // Fibre-quality score; every factor is best at one level and butanol speed dominates.
  const double width = 1.0 - 4.0 * (u[0] - 0.5) * (u[0] - 0.5);
  const double conc = 1.0 - 4.0 * (u[4] - 0.5) * (u[4] - 0.5);
  return 3.0 * u[3] + 1.2 * width + 0.8 * u[1] + 0.4 * (1.0 - u[2]) + conc * (0.5 + 0.5 * u[3]) + 0.3 * u[1] * u[3];
}

}  // namespace

Vector spf_levels(std::size_t index) {
  if (index >= 162) throw OutOfDomain("spf_table: candidate index out of range");
  const auto idx = spf_level_indices(index);
  Vector v(5);
  for (std::size_t k = 0; k < 5; ++k) v[static_cast<Eigen::Index>(k)] = spf_factors()[k].levels[idx[k]];
  return v;
}

Objective spf_table() {
  const auto& f = spf_factors();
  Matrix c(162, 5);
  for (std::size_t r = 0; r < 162; ++r) {
    const auto idx = spf_level_indices(r);
    for (std::size_t k = 0; k < 5; ++k)
      c(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          static_cast<double>(idx[k]) / static_cast<double>(f[k].levels.size() - 1);
  }
  Objective o;
  o.name = "spf_table";
  o.sense = Sense::kMaximize;
  o.noise_std = 0.0;
  for (const auto& factor : f) o.dimension_names.push_back(factor.name);
  o.evaluate = [c](const Vector& x) {
    if (x.size() != 5) throw DimensionMismatch("spf_table: wrong input dimension");
    for (Eigen::Index r = 0; r < c.rows(); ++r)
      if (c.row(r).transpose() == x) return spf_response(x);
    throw OutOfDomain("spf_table: input is not a table row");
  };
  std::size_t best = 0;
  for (Eigen::Index r = 1; r < c.rows(); ++r)
    if (spf_response(c.row(r).transpose()) > spf_response(c.row(static_cast<Eigen::Index>(best)).transpose()))
      best = static_cast<std::size_t>(r);
  o.known_optimum = KnownOptimum{c.row(static_cast<Eigen::Index>(best)).transpose(),
                                 spf_response(c.row(static_cast<Eigen::Index>(best)).transpose()), best};
  o.domain = std::move(c);
  return o;
}

Objective make_objective(const std::string& name) {
  if (name == "hartmann6") return hartmann6_objective();
  if (name == "toy1d") return toy_1d_objective();
  if (name == "spf_table") return spf_table();
  if (name.rfind("gp2d:", 0) == 0) {
    const std::string digits = name.substr(5);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError("objective \"" + name + "\": expected gp2d:<seed>");
    return gp_sample_objective(2, std::stoull(digits), Kernel::isotropic(1.0, 0.1, 2));
  }
  throw ConfigError("unknown objective \"" + name + "\"");
}

}  // namespace priorbo
