#pragma once

#include <algorithm>
#include <cmath>

#include "priorbo/gp.hpp"

namespace priorbo::detail {

struct AscentOptions {
  double initial_step = 0.05;  // fraction of the box width
  double max_step = 0.25;
  double min_step = 1e-5;
  int max_evaluations = 60;
};

struct AscentResult {
  Vector x;
  double value;
  int evaluations;
};

/// Projected normalized-gradient ascent with step halving on failure.
/// `f(x, grad)` returns the value at x and writes the gradient into grad.
/// Steps are taken in box-normalized coordinates so one tuning works for any box.
template <class F>
AscentResult projected_ascent(F&& f, const DomainBox& box, Vector x, const AscentOptions& opt = {}) {
  const Vector width = box.width();
  const auto dim = x.size();
  x = box.project(x);
  Vector grad(dim), trial_grad(dim), dir(dim);
  double value = f(x, grad);
  int evals = 1;
  double step = opt.initial_step;

  while (evals < opt.max_evaluations && step >= opt.min_step) {
    for (Eigen::Index d = 0; d < dim; ++d) {
      double g = grad[d] * width[d];
      if ((x[d] <= box.lower()[d] && g < 0.0) || (x[d] >= box.upper()[d] && g > 0.0)) g = 0.0;
      dir[d] = g;
    }
    const double norm = dir.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) break;
    dir /= norm;

    Vector trial = box.project(x + step * dir.cwiseProduct(width));
    const double trial_value = f(trial, trial_grad);
    ++evals;
    if (trial_value > value) {
      x = std::move(trial);
      value = trial_value;
      grad.swap(trial_grad);
      step = std::min(step * 1.5, opt.max_step);
    } else {
      step *= 0.5;
    }
  }
  return {std::move(x), value, evals};
}

}  // namespace priorbo::detail
