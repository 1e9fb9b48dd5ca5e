#pragma once

// Log-likelihood-ratio arithmetic for a unit-covariance Gaussian mean shift.
//
// Pre-change model N(0, I_d), post-change model N(theta, I_d). Every
// likelihood-ratio quantity in the library is carried in the log domain;
// the raw ratio overflows for d in the tens of thousands.

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "adaptcd/errors.hpp"
#include "adaptcd/summation.hpp"

namespace adaptcd {

using Vector = std::vector<double>;

inline void require_same_dimension(std::span<const double> expected, std::span<const double> actual,
                                   const char* what) {
  if (expected.size() != actual.size()) throw dimension_error(expected.size(), actual.size(), what);
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

/// theta'x - |theta|^2 / 2, the log of f_theta(x) / f_0(x).
inline double log_lr_increment(std::span<const double> theta, std::span<const double> x) {
  require_same_dimension(theta, x, "log_lr_increment");
  const auto [tx, tt] = pairwise_accumulate<2>(0, theta.size(), [&](std::size_t i) {
    return std::array<double, 2>{theta[i] * x[i], theta[i] * theta[i]};
  });
  return tx - 0.5 * tt;
}

/// Online loss |theta|^2 / 2 - theta'x; always the exact negation of log_lr_increment.
inline double loss(std::span<const double> theta, std::span<const double> x) {
  require_same_dimension(theta, x, "loss");
  return -log_lr_increment(theta, x);
}

/// Gradient of `loss` in theta: theta - x.
inline Vector loss_gradient(std::span<const double> theta, std::span<const double> x) {
  require_same_dimension(theta, x, "loss_gradient");
  Vector g(theta.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = theta[i] - x[i];
  return g;
}

}  // namespace adaptcd
