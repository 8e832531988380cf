#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "priorbo/errors.hpp"
#include "priorbo/gp.hpp"
#include "priorbo/random.hpp"

using namespace priorbo;

namespace {

Matrix random_points(std::size_t n, std::size_t d, Rng& rng) {
  Matrix p(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) p(i, j) = uniform01(rng);
  return p;
}

oracle::Mat rows(const Matrix& m) {
  oracle::Mat out(m.rows(), oracle::Vec(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

oracle::Vec vec(const Vector& v) { return oracle::Vec(v.data(), v.data() + v.size()); }

}  // namespace

TEST(DomainBox, RejectsInvertedBounds) {
  EXPECT_THROW(DomainBox(Vector::Constant(1, 1.0), Vector::Constant(1, 0.0)), ValidationError);
  EXPECT_THROW(DomainBox(Vector(0), Vector(0)), DimensionMismatch);
  const DomainBox b(Vector::Constant(2, -1.0), Vector::Constant(2, 3.0));
  EXPECT_DOUBLE_EQ(b.volume(), 16.0);
  EXPECT_TRUE(b.contains(Vector::Constant(2, 3.0)));
  EXPECT_FALSE(b.contains(Vector::Constant(2, 3.1)));
  EXPECT_EQ(b.project(Vector::Constant(2, 9.0)), Vector::Constant(2, 3.0));
}

TEST(Kernel, DiagonalEqualsSignalVariance) {
  const Kernel k(2.5, Vector::Constant(3, 0.3));
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    Vector x = random_points(1, 3, rng).row(0).transpose();
    EXPECT_DOUBLE_EQ(k(x, x), 2.5);
  }
  EXPECT_THROW(Kernel(0.0, Vector::Ones(1)), ValidationError);
  EXPECT_THROW(Kernel(1.0, Vector::Zero(1)), ValidationError);
}

TEST(Kernel, GramIsExactlySymmetric) {
  Rng rng(2);
  const Kernel k(1.3, (Vector(3) << 0.2, 0.5, 0.9).finished());
  const Matrix g = k.gram(random_points(40, 3, rng));
  EXPECT_TRUE((g.array() == g.transpose().array()).all());
}

TEST(Kernel, CrossMatchesOracle) {
  Rng rng(3);
  const Vector ls = (Vector(2) << 0.15, 0.4).finished();
  const Kernel k(0.7, ls);
  const Matrix p = random_points(37, 2, rng);
  const Vector x = random_points(1, 2, rng).row(0).transpose();
  const Vector c = k.cross(p, x);
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    EXPECT_NEAR(c[i], oracle::se(0.7, vec(ls), vec(p.row(i).transpose()), vec(x)), 1e-14);
}

TEST(Fit, SinglePointCoefficients) {
  const Dataset d(Matrix::Constant(1, 1, 0.5), Vector::Constant(1, 2.0), 0.0);
  const auto post = fit(Kernel::isotropic(1.0, 0.1, 1), d);
  ASSERT_EQ(post.solved_coeffs().size(), 1);
  EXPECT_DOUBLE_EQ(post.solved_coeffs()[0], 2.0);
}

TEST(Fit, DuplicateRowsWithoutJitterFail) {
  Matrix p(2, 1);
  p << 0.3, 0.3;
  const Dataset d(p, Vector::Ones(2), 0.0);
  FitOptions opts;
  opts.jitter = JitterPolicy::none();
  EXPECT_THROW(fit(Kernel::isotropic(1.0, 0.1, 1), d, opts), CholeskyFailure);
  // The default policy recovers with a small diagonal term.
  const auto post = fit(Kernel::isotropic(1.0, 0.1, 1), d);
  EXPECT_GT(post.jitter(), 0.0);
  EXPECT_LE(post.jitter(), 1e-4);
}

TEST(Fit, EmptyDataRejected) {
  EXPECT_THROW(fit(Kernel::isotropic(1.0, 0.1, 2), Dataset::empty(2, 0.0)), InsufficientData);
}

TEST(Fit, CholeskyReconstructsRegularizedGram) {
  Rng rng(4);
  const Kernel k(1.0, Vector::Constant(2, 0.3));
  const Dataset d(random_points(30, 2, rng), Vector::Random(30), 1e-3);
  const auto post = fit(k, d);
  Matrix reg = k.gram(d.points);
  reg.diagonal().array() += d.noise_variance + post.jitter();
  const Matrix rebuilt = post.chol() * post.chol().transpose();
  EXPECT_LT((rebuilt - reg).norm() / reg.norm(), 1e-8);
}

TEST(Predict, InterpolatesTrainingPoints) {
  Rng rng(5);
  const Kernel k(1.0, Vector::Constant(2, 0.3));
  const Matrix p = random_points(5, 2, rng);
  Vector y(5);
  for (int i = 0; i < 5; ++i) y[i] = std::sin(6 * p(i, 0)) + p(i, 1);
  const auto post = fit(k, Dataset(p, y, 1e-12));
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(post.predict(p.row(i).transpose()).mean, y[i], 1e-6);
}

TEST(Predict, RevertsToPriorFarAway) {
  const Kernel k(1.7, Vector::Constant(1, 0.1));
  const Dataset d(Matrix::Constant(1, 1, 0.0), Vector::Constant(1, 3.0), 1e-6);
  const auto p = fit(k, d).predict(Vector::Constant(1, 50.0));
  EXPECT_LT(std::abs(p.mean), 1e-6);
  EXPECT_NEAR(p.variance, 1.7, 1e-6);
}

TEST(Predict, WrongDimension) {
  const auto post = fit(Kernel::isotropic(1, 0.2, 2), Dataset(Matrix::Zero(1, 2), Vector::Zero(1), 0.0));
  EXPECT_THROW(post.predict(Vector::Zero(3)), DimensionMismatch);
}

TEST(Predict, MatchesNaiveDenseSolve) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 50;
    const std::size_t dim = 1 + rng() % 3;
    const double s2 = 0.5 + uniform01(rng);
    Vector ls(dim);
    for (std::size_t j = 0; j < dim; ++j) ls[j] = 0.2 + 0.5 * uniform01(rng);
    const double noise = 1e-3;
    const Matrix p = random_points(n, dim, rng);
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = standard_normal(rng);
    const auto post = fit(Kernel(s2, ls), Dataset(p, y, noise));
    ASSERT_EQ(post.jitter(), 0.0);
    for (int q = 0; q < 10; ++q) {
      const Vector x = random_points(1, dim, rng).row(0).transpose();
      const auto ours = post.predict(x);
      const auto [mean, var] = oracle::gp_predict(rows(p), vec(y), noise, s2, vec(ls), vec(x));
      EXPECT_NEAR(ours.mean, mean, 1e-8);
      EXPECT_NEAR(ours.variance, std::max(var, 0.0), 1e-8);
    }
  }
}

TEST(Predict, VarianceWithinBounds) {
  Rng rng(7);
  const Kernel k(2.0, Vector::Constant(2, 0.05));
  const Matrix p = random_points(60, 2, rng);
  const auto post = fit(k, Dataset(p, Vector::Random(60), 1e-10));
  for (int i = 0; i < 60; ++i) {
    const double v = post.predict(p.row(i).transpose()).variance;
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 2.0 + 1e-9);
  }
  for (int q = 0; q < 500; ++q) {
    const double v = post.predict(random_points(1, 2, rng).row(0).transpose()).variance;
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 2.0 + 1e-9);
  }
}

TEST(Predict, GradientMatchesFiniteDifference) {
  Rng rng(8);
  const Kernel k(1.2, (Vector(2) << 0.2, 0.35).finished());
  const auto post = fit(k, Dataset(random_points(12, 2, rng), Vector::Random(12), 1e-4));
  const double h = 1e-6;
  for (int q = 0; q < 10; ++q) {
    const Vector x = random_points(1, 2, rng).row(0).transpose();
    const auto g = post.predict_with_gradient(x);
    EXPECT_DOUBLE_EQ(g.mean, post.predict(x).mean);
    for (int d = 0; d < 2; ++d) {
      Vector a = x, b = x;
      a[d] += h;
      b[d] -= h;
      EXPECT_NEAR(g.mean_grad[d], (post.predict(a).mean - post.predict(b).mean) / (2 * h), 1e-5);
      EXPECT_NEAR(g.variance_grad[d], (post.predict(a).variance - post.predict(b).variance) / (2 * h), 1e-5);
    }
  }
}

TEST(Predict, BitIdenticalAcrossFits) {
  Rng rng(9);
  const Kernel k(1.0, Vector::Constant(3, 0.4));
  const Dataset d(random_points(25, 3, rng), Vector::Random(25), 1e-6);
  const Vector x = Vector::Constant(3, 0.37);
  const auto a = fit(k, d).predict(x);
  const auto b = fit(k, d).predict(x);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.variance, b.variance);
}

TEST(LogMarginalLikelihood, SinglePointClosedForm) {
  const auto post = fit(Kernel::isotropic(1.0, 0.1, 1), Dataset(Matrix::Zero(1, 1), Vector::Zero(1), 0.0));
  EXPECT_NEAR(post.log_marginal_likelihood(), -0.5 * std::log(2 * std::numbers::pi), 1e-15);
}

TEST(LogMarginalLikelihood, TwoByTwoClosedForm) {
  Matrix p(2, 1);
  p << 0.1, 0.4;
  const Vector y = (Vector(2) << 0.8, -0.3).finished();
  const double s2 = 1.5, l = 0.25, noise = 0.01;
  const double k12 = s2 * std::exp(-0.5 * 0.09 / (l * l));
  const double a = s2 + noise, det = a * a - k12 * k12;
  // inverse of [[a, k12], [k12, a]] = [[a, -k12], [-k12, a]] / det
  const double quad = (a * y[0] * y[0] - 2 * k12 * y[0] * y[1] + a * y[1] * y[1]) / det;
  const double expected = -0.5 * quad - 0.5 * std::log(det) - std::log(2 * std::numbers::pi);
  const auto post = fit(Kernel::isotropic(s2, l, 1), Dataset(p, y, noise));
  EXPECT_NEAR(post.log_marginal_likelihood(), expected, 1e-10);
}

TEST(LogMarginalLikelihood, NoiseScanIsUnimodal) {
  Rng rng(10);
  const std::size_t n = 40;
  Matrix p = random_points(n, 1, rng);
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = std::sin(8 * p(i, 0)) + 0.3 * standard_normal(rng);
  const Kernel k = Kernel::isotropic(1.0, 0.15, 1);
  std::vector<double> ll;
  for (double noise : log_space(1e-6, 10.0, 29)) ll.push_back(fit(k, Dataset(p, y, noise)).log_marginal_likelihood());
  std::size_t peak = 0;
  for (std::size_t i = 1; i < ll.size(); ++i)
    if (ll[i] > ll[peak]) peak = i;
  ASSERT_GT(peak, 0u);
  ASSERT_LT(peak, ll.size() - 1);
  for (std::size_t i = 1; i <= peak; ++i) EXPECT_GT(ll[i], ll[i - 1]) << i;
  for (std::size_t i = peak + 1; i < ll.size(); ++i) EXPECT_LT(ll[i], ll[i - 1]) << i;
}

TEST(SelectHyperparameters, RecoversGeneratingLengthscale) {
  const std::size_t n = 30;
  const DomainBox box = DomainBox::unit(1);
  GridSpec grid = GridSpec::standard();
  const double step = grid.lengthscale_fractions[1] / grid.lengthscale_fractions[0];
  Rng rng(11);
  Matrix p = random_points(n, 1, rng);
  const Kernel truth = Kernel::isotropic(1.0, 0.1, 1);
  Matrix g = truth.gram(p);
  g.diagonal().array() += 1e-8;
  const Matrix l = g.llt().matrixL();
  Vector z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = standard_normal(rng);
  const Vector y = l * z;
  const auto choice = select_hyperparameters(Dataset(p, y, 0.0), box, grid);
  const double selected = choice.kernel.lengthscales()[0];
  EXPECT_LE(std::abs(std::log(selected / 0.1)), std::log(step) + 1e-12) << selected;
}

TEST(SelectHyperparameters, ConstantDataPicksLargestLengthscale) {
  Rng rng(12);
  const DomainBox box(Vector::Constant(2, -2.0), Vector::Constant(2, 2.0));
  Matrix p = random_points(10, 2, rng).array() * 4.0 - 2.0;
  const auto choice = select_hyperparameters(Dataset(p, Vector::Constant(10, 0.7), 0.0), box);
  EXPECT_DOUBLE_EQ(choice.kernel.lengthscales()[0], 4.0 * GridSpec::standard().lengthscale_fractions.back());
}

TEST(SelectHyperparameters, NeedsThreePoints) {
  const Dataset d(Matrix::Zero(2, 1), Vector::Zero(2), 0.0);
  EXPECT_THROW(select_hyperparameters(d, DomainBox::unit(1)), InsufficientData);
}

TEST(SelectHyperparameters, FixedNoiseKeepsDatasetNoise) {
  Rng rng(13);
  const Matrix p = random_points(8, 1, rng);
  GridSpec grid = GridSpec::standard();
  grid.fixed_noise = true;
  const auto choice = select_hyperparameters(Dataset(p, Vector::Random(8), 1e-3), DomainBox::unit(1), grid);
  EXPECT_EQ(choice.noise_variance, 1e-3);
}

TEST(Dataset, ValidatesInsideBox) {
  const Dataset d(Matrix::Constant(1, 2, 1.5), Vector::Zero(1), 0.0);
  EXPECT_THROW(d.validate_inside(DomainBox::unit(2)), OutOfDomain);
  EXPECT_THROW(Dataset(Matrix::Zero(2, 1), Vector::Zero(3), 0.0), DimensionMismatch);
  EXPECT_THROW(Dataset(Matrix::Zero(1, 1), Vector::Constant(1, NAN), 0.0), NonFiniteValue);
}
