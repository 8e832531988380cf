#include "priorbo/linalg.hpp"

#include <string>

#include "priorbo/errors.hpp"

namespace priorbo {

CholeskyResult jittered_cholesky(const Matrix& a, double scale, const JitterPolicy& policy) {
  CholeskyResult result;
  if (!a.allFinite()) throw CholeskyFailure("matrix contains non-finite entries");
  result.llt.compute(a);
  if (result.llt.info() == Eigen::Success) return result;

  const double top = scale * policy.maximum;
  for (double jitter = scale * policy.initial; jitter > 0.0 && jitter <= top * (1.0 + 1e-12);
       jitter *= policy.growth) {
    Matrix shifted = a;
    shifted.diagonal().array() += jitter;
    result.llt.compute(shifted);
    if (result.llt.info() == Eigen::Success) {
      result.jitter = jitter;
      return result;
    }
    if (policy.growth <= 1.0) break;
  }
  throw CholeskyFailure("Cholesky factorization failed after jitter up to " + std::to_string(top));
}

}  // namespace priorbo
