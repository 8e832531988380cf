#include "priorbo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "priorbo/errors.hpp"
#include "priorbo/simd/kernels.hpp"

namespace priorbo {

DomainBox::DomainBox(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() == 0) throw DimensionMismatch("domain box must have at least one dimension");
  if (lower_.size() != upper_.size()) throw DimensionMismatch("domain box bounds differ in length");
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i]))
      throw ValidationError("box", "lower[" + std::to_string(i) + "] must be < upper[" + std::to_string(i) + "]");
  }
}

DomainBox DomainBox::unit(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return DomainBox(Vector::Zero(n), Vector::Ones(n));
}

double DomainBox::volume() const { return (upper_ - lower_).prod(); }

bool DomainBox::contains(const Vector& x, double tol) const {
  if (x.size() != lower_.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower_[i] - tol && x[i] <= upper_[i] + tol)) return false;
  }
  return true;
}

Vector DomainBox::project(const Vector& x) const { return x.cwiseMax(lower_).cwiseMin(upper_); }

Vector DomainBox::from_unit(const Vector& u) const {
  return project(lower_ + (upper_ - lower_).cwiseProduct(u));
}

Kernel::Kernel(double signal_variance, Vector lengthscales)
    : signal_variance_(signal_variance), lengthscales_(std::move(lengthscales)) {
  if (!(signal_variance_ > 0.0) || !std::isfinite(signal_variance_))
    throw ValidationError("kernel.signal_variance", "must be positive");
  if (lengthscales_.size() == 0) throw DimensionMismatch("kernel needs at least one lengthscale");
  if (!(lengthscales_.array() > 0.0).all() || !lengthscales_.allFinite())
    throw ValidationError("kernel.lengthscales", "must be positive");
  inv_sq_lengthscales_ = lengthscales_.array().square().inverse();
}

Kernel Kernel::isotropic(double signal_variance, double lengthscale, std::size_t dim) {
  return Kernel(signal_variance, Vector::Constant(static_cast<Eigen::Index>(dim), lengthscale));
}

double Kernel::operator()(const Vector& x, const Vector& y) const {
  if (x.size() != lengthscales_.size() || y.size() != lengthscales_.size())
    throw DimensionMismatch("kernel input dimension mismatch");
  const double r2 = ((x - y).array().square() * inv_sq_lengthscales_.array()).sum();
  return signal_variance_ * std::exp(-0.5 * r2);
}

Matrix Kernel::gram(const Matrix& points) const {
  if (points.cols() != lengthscales_.size()) throw DimensionMismatch("gram: point dimension mismatch");
  const Eigen::Index n = points.rows();
  Matrix k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = signal_variance_;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double r2 = 0.0;
      for (Eigen::Index d = 0; d < points.cols(); ++d) {
        const double diff = points(i, d) - points(j, d);
        r2 += diff * diff * inv_sq_lengthscales_[d];
      }
      const double v = signal_variance_ * std::exp(-0.5 * r2);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Vector Kernel::cross(const Matrix& points, const Vector& x) const {
  if (points.cols() != lengthscales_.size() || x.size() != lengthscales_.size())
    throw DimensionMismatch("kernel cross: dimension mismatch");
  Vector out(points.rows());
  const simd::PointsView view{points.data(), static_cast<std::size_t>(points.rows()),
                              static_cast<std::size_t>(points.cols())};
  simd::active_kernels().se_cross(view, inv_sq_lengthscales_.data(), x.data(), signal_variance_, out.data());
  return out;
}

Dataset::Dataset(Matrix pts, Vector vals, double noise)
    : points(std::move(pts)), values(std::move(vals)), noise_variance(noise) {
  if (points.rows() != values.size()) throw DimensionMismatch("dataset: point rows differ from value count");
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
    throw ValidationError("noise_variance", "must be nonnegative");
  if (!values.allFinite()) throw NonFiniteValue("dataset contains non-finite values");
}

Dataset Dataset::empty(std::size_t dim, double noise) {
  return Dataset(Matrix(0, static_cast<Eigen::Index>(dim)), Vector(0), noise);
}

Dataset Dataset::with(const Vector& x, double y) const {
  if (x.size() != points.cols()) throw DimensionMismatch("dataset: appended point has wrong dimension");
  Matrix p(points.rows() + 1, points.cols());
  p.topRows(points.rows()) = points;
  p.row(points.rows()) = x.transpose();
  Vector v(values.size() + 1);
  v.head(values.size()) = values;
  v[values.size()] = y;
  return Dataset(std::move(p), std::move(v), noise_variance);
}

void Dataset::validate_inside(const DomainBox& box) const {
  if (static_cast<std::size_t>(points.cols()) != box.dim()) throw DimensionMismatch("dataset dimension differs from box");
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    if (!box.contains(points.row(i).transpose()))
      throw OutOfDomain("observation " + std::to_string(i) + " lies outside the domain box");
  }
}

GpPosterior fit(const Kernel& kernel, const Dataset& data, const FitOptions& options) {
  if (data.empty()) throw InsufficientData("fit requires at least one observation");
  if (data.dim() != kernel.dim()) throw DimensionMismatch("fit: data dimension differs from kernel");
  GpPosterior post(kernel, data);
  Matrix k = kernel.gram(data.points);
  k.diagonal().array() += data.noise_variance;
  auto chol = jittered_cholesky(k, kernel.signal_variance(), options.jitter);
  post.chol_ = chol.llt.matrixL();
  post.alpha_ = chol.llt.solve(data.values);
  post.jitter_ = chol.jitter;
  return post;
}

Prediction GpPosterior::predict(const Vector& x) const {
  if (x.size() != static_cast<Eigen::Index>(kernel_.dim())) throw DimensionMismatch("predict: wrong input dimension");
  const Vector k = kernel_.cross(data_.points, x);
  const Vector v = chol_.triangularView<Eigen::Lower>().solve(k);
  Prediction p;
  p.mean = k.dot(alpha_);
  p.variance = std::clamp(kernel_.signal_variance() - v.squaredNorm(), 0.0, kernel_.signal_variance());
  return p;
}

PredictionGradient GpPosterior::predict_with_gradient(const Vector& x) const {
  if (x.size() != static_cast<Eigen::Index>(kernel_.dim())) throw DimensionMismatch("predict: wrong input dimension");
  const Vector k = kernel_.cross(data_.points, x);
  const auto lower = chol_.triangularView<Eigen::Lower>();
  const Vector v = lower.solve(k);
  const Vector kinv_k = lower.transpose().solve(v);

  // dk_i/dx = -k_i (x - x_i) / l^2
  const Vector inv_sq = kernel_.lengthscales().array().square().inverse();
  Matrix dk(data_.points.rows(), data_.points.cols());
  for (Eigen::Index i = 0; i < dk.rows(); ++i)
    dk.row(i) = -k[i] * (x.transpose() - data_.points.row(i)).cwiseProduct(inv_sq.transpose());

  PredictionGradient g;
  g.mean = k.dot(alpha_);
  const double raw_var = kernel_.signal_variance() - v.squaredNorm();
  g.variance = std::clamp(raw_var, 0.0, kernel_.signal_variance());
  g.mean_grad = dk.transpose() * alpha_;
  g.variance_grad = -2.0 * (dk.transpose() * kinv_k);
  if (raw_var <= 0.0) g.variance_grad.setZero();
  return g;
}

double GpPosterior::log_marginal_likelihood() const {
  const double n = static_cast<double>(data_.size());
  const double fit_term = -0.5 * data_.values.dot(alpha_);
  const double log_det = 2.0 * chol_.diagonal().array().log().sum();
  return fit_term - 0.5 * log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

}  // namespace priorbo
