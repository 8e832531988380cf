#include "priorbo/rff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "priorbo/errors.hpp"

namespace priorbo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vector uniform_point(const DomainBox& box, Rng& rng) {
  Vector u(static_cast<Eigen::Index>(box.dim()));
  for (Eigen::Index d = 0; d < u.size(); ++d) u[d] = uniform01(rng);
  return box.from_unit(u);
}

}  // namespace

FeatureMap::FeatureMap(Kernel source, Matrix frequencies, Vector phases)
    : kernel_(std::move(source)), frequencies_(std::move(frequencies)), phases_(std::move(phases)) {
  if (phases_.size() == 0) throw ValidationError("feature_count", "must be at least 1");
  if (frequencies_.rows() != phases_.size()) throw DimensionMismatch("feature map: frequency rows differ from phases");
  if (static_cast<std::size_t>(frequencies_.cols()) != kernel_.dim())
    throw DimensionMismatch("feature map: frequency dimension differs from kernel");
  for (double b : phases_)
    if (!(b >= 0.0 && b < kTwoPi)) throw ValidationError("phases", "must lie in [0, 2pi)");
  amplitude_ = std::sqrt(2.0 * kernel_.signal_variance() / static_cast<double>(phases_.size()));
}

FeatureMap FeatureMap::draw(const Kernel& kernel, std::size_t count, Rng& rng) {
  if (count == 0) throw ValidationError("feature_count", "must be at least 1");
  const auto m = static_cast<Eigen::Index>(count);
  const auto dim = static_cast<Eigen::Index>(kernel.dim());
  Matrix w(m, dim);
  Vector b(m);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index d = 0; d < dim; ++d) w(i, d) = normal(rng) / kernel.lengthscales()[d];
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    double v = phase(rng);
    b[i] = v < kTwoPi ? v : 0.0;
  }
  return FeatureMap(kernel, std::move(w), std::move(b));
}

Vector FeatureMap::features(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) throw DimensionMismatch("features: wrong input dimension");
  Vector out(phases_.size());
  simd::active_kernels().features(view(), x.data(), amplitude_, out.data());
  return out;
}

namespace {

// Phi^T: column i holds phi(x_i).
Matrix design_transposed(const FeatureMap& map, const Matrix& points) {
  if (static_cast<std::size_t>(points.cols()) != map.dim()) throw DimensionMismatch("design matrix: wrong dimension");
  Matrix phi_t(static_cast<Eigen::Index>(map.size()), points.rows());
  Vector x(points.cols());
  const auto& kernels = simd::active_kernels();
  const auto view = map.view();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    x = points.row(i).transpose();
    kernels.features(view, x.data(), map.amplitude(), phi_t.col(i).data());
  }
  return phi_t;
}

}  // namespace

Matrix FeatureMap::design_matrix(const Matrix& points) const { return design_transposed(*this, points).transpose(); }

WeightPosterior posterior_weight_distribution(const FeatureMap& map, const Dataset& data, const JitterPolicy& jitter) {
  const auto m = static_cast<Eigen::Index>(map.size());
  if (data.empty()) return {Vector::Zero(m), Matrix::Identity(m, m)};
  if (data.dim() != map.dim()) throw DimensionMismatch("weight posterior: data dimension differs from feature map");

  const Matrix phi_t = design_transposed(map, data.points);
  const double noise = data.noise_variance;
  Matrix a = Matrix::Zero(m, m);
  a.selfadjointView<Eigen::Lower>().rankUpdate(phi_t);
  a.diagonal().array() += noise;
  a.triangularView<Eigen::StrictlyUpper>() = a.transpose();

  const double scale = std::max(a.diagonal().mean(), 1e-300);
  const auto chol = jittered_cholesky(a, scale, jitter);
  WeightPosterior out;
  out.mean = chol.llt.solve(phi_t * data.values);
  if (noise == 0.0) {
    out.covariance_factor = Matrix::Zero(m, m);
    return out;
  }
  Matrix cov = noise * chol.llt.solve(Matrix::Identity(m, m));
  cov = 0.5 * (cov + cov.transpose()).eval();
  const auto cov_chol = jittered_cholesky(cov, std::max(cov.diagonal().mean(), 1e-300), jitter);
  out.covariance_factor = cov_chol.llt.matrixL();
  return out;
}

SampledFunction::SampledFunction(FeatureMap map, Vector theta) : map_(std::move(map)), theta_(std::move(theta)) {
  if (static_cast<std::size_t>(theta_.size()) != map_.size())
    throw DimensionMismatch("sampled function: weight count differs from feature count");
  coeff_ = map_.amplitude() * theta_;
}

double SampledFunction::operator()(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) throw DimensionMismatch("sampled function: wrong input dimension");
  return simd::active_kernels().feature_sum(map_.view(), coeff_.data(), x.data());
}

double SampledFunction::value_and_gradient(const Vector& x, Vector& grad) const {
  if (static_cast<std::size_t>(x.size()) != dim()) throw DimensionMismatch("sampled function: wrong input dimension");
  grad.resize(x.size());
  return simd::active_kernels().feature_sum_grad(map_.view(), coeff_.data(), x.data(), grad.data());
}

SampledFunction sample_function(const FeatureMap& map, const WeightPosterior& dist, Rng& rng) {
  const auto m = static_cast<Eigen::Index>(map.size());
  if (dist.mean.size() != m || dist.covariance_factor.rows() != m || dist.covariance_factor.cols() != m)
    throw DimensionMismatch("weight distribution does not match the feature map");
  Vector z(m);
  for (Eigen::Index i = 0; i < m; ++i) z[i] = standard_normal(rng);
  Vector theta = dist.mean + dist.covariance_factor.triangularView<Eigen::Lower>() * z;
  return SampledFunction(map, std::move(theta));
}

SampledFunction sample_function_dual(const FeatureMap& map, const Dataset& data, Rng& rng, const JitterPolicy& jitter) {
  const auto m = static_cast<Eigen::Index>(map.size());
  Vector theta(m);
  for (Eigen::Index i = 0; i < m; ++i) theta[i] = standard_normal(rng);
  if (data.empty()) return SampledFunction(map, std::move(theta));
  if (data.dim() != map.dim()) throw DimensionMismatch("dual sampler: data dimension differs from feature map");

  const auto n = static_cast<Eigen::Index>(data.size());
  const Matrix phi_t = design_transposed(map, data.points);
  Matrix g = Matrix::Zero(n, n);
  g.selfadjointView<Eigen::Lower>().rankUpdate(phi_t.transpose());
  g.diagonal().array() += data.noise_variance;
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();

  const double noise_sd = std::sqrt(data.noise_variance);
  Vector residual = data.values - phi_t.transpose() * theta;
  for (Eigen::Index i = 0; i < n; ++i) residual[i] -= noise_sd * standard_normal(rng);

  const auto chol = jittered_cholesky(g, std::max(g.diagonal().mean(), 1e-300), jitter);
  theta += phi_t * chol.llt.solve(residual);
  return SampledFunction(map, std::move(theta));
}

SampledFunction sample_posterior_function(const FeatureMap& map, const Dataset& data, Rng& rng) {
  if (data.size() < map.size()) return sample_function_dual(map, data, rng);
  return sample_function(map, posterior_weight_distribution(map, data), rng);
}

MaximizeResult maximize_sampled(const SampledFunction& f, const DomainBox& box, Rng& rng,
                                const MaximizeOptions& options, const Vector* incumbent) {
  if (box.dim() != f.dim()) throw DimensionMismatch("maximize: box dimension differs from function");
  std::vector<Vector> starts;
  if (incumbent != nullptr) {
    if (static_cast<std::size_t>(incumbent->size()) != box.dim())
      throw DimensionMismatch("maximize: incumbent has wrong dimension");
    starts.push_back(box.project(*incumbent));
  }
  const auto restarts = static_cast<std::size_t>(std::max(options.restarts, 0));
  if (options.pool_size > 0) {
    std::vector<Vector> pool;
    std::vector<double> scores;
    pool.reserve(options.pool_size);
    for (std::size_t i = 0; i < options.pool_size; ++i) {
      pool.push_back(uniform_point(box, rng));
      scores.push_back(f(pool.back()));
    }
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    for (std::size_t k = 0; k < std::min(restarts, order.size()); ++k) starts.push_back(pool[order[k]]);
    for (std::size_t k = order.size(); k < restarts; ++k) starts.push_back(uniform_point(box, rng));
  } else {
    for (std::size_t k = 0; k < restarts; ++k) starts.push_back(uniform_point(box, rng));
  }
  if (starts.empty()) starts.push_back(uniform_point(box, rng));

  auto objective = [&f](const Vector& x, Vector& grad) { return f.value_and_gradient(x, grad); };
  MaximizeResult best{Vector(), -std::numeric_limits<double>::infinity()};
  for (const Vector& s : starts) {
    auto r = detail::projected_ascent(objective, box, s, options.ascent);
    if (best.argmax.size() == 0 || r.value > best.value) best = {std::move(r.x), r.value};
  }
  return best;
}

std::size_t maximize_over_candidates(const SampledFunction& f, const Matrix& candidates) {
  if (candidates.rows() == 0) throw EmptyCandidates("candidate set is empty");
  if (static_cast<std::size_t>(candidates.cols()) != f.dim()) throw DimensionMismatch("candidates have wrong dimension");
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  Vector x(candidates.cols());
  for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
    x = candidates.row(i).transpose();
    const double v = f(x);
    if (i == 0 || v > best_value) {
      best = static_cast<std::size_t>(i);
      best_value = v;
    }
  }
  return best;
}

}  // namespace priorbo
