#pragma once

#include <Eigen/Dense>

namespace priorbo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Diagonal jitter schedule, expressed relative to a reference scale
/// (the kernel signal variance for Gram matrices).
struct JitterPolicy {
  double initial = 1e-10;
  double growth = 10.0;
  double maximum = 1e-4;

  /// No jitter at all: the first failed factorization is final.
  static JitterPolicy none() { return {0.0, 10.0, 0.0}; }
};

struct CholeskyResult {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;  // absolute diagonal jitter actually added
};

/// Factorizes `a` (symmetric, only the lower triangle is read). On failure,
/// retries with `scale * policy.initial` added to the diagonal, escalating by
/// `policy.growth` until `scale * policy.maximum`; throws CholeskyFailure after.
CholeskyResult jittered_cholesky(const Matrix& a, double scale, const JitterPolicy& policy = {});

}  // namespace priorbo
