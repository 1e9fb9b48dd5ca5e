#pragma once

// One-sample-update online mirror descent (Euclidean mirror map) for the
// post-change mean. Each step takes a gradient step on the online loss
// |theta|^2/2 - theta'x and projects back onto the constraint set, either the
// l1 ball {|theta|_1 <= s} or all of R^d.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "adaptcd/errors.hpp"
#include "adaptcd/lrcore.hpp"
#include "adaptcd/summation.hpp"

namespace adaptcd {

enum class schedule_kind { inverse_count, constant, inverse_sqrt };

inline std::string to_string(schedule_kind k) {
  switch (k) {
    case schedule_kind::inverse_count: return "inverse-count";
    case schedule_kind::constant: return "constant";
    case schedule_kind::inverse_sqrt: return "inverse-sqrt";
  }
  return "?";
}

inline schedule_kind parse_schedule_kind(const std::string& s) {
  if (s == "inverse-count") return schedule_kind::inverse_count;
  if (s == "constant") return schedule_kind::constant;
  if (s == "inverse-sqrt") return schedule_kind::inverse_sqrt;
  throw config_error("unknown step schedule '" + s + "'");
}

/// Step sizes eta_i, i >= 1. Strictly positive and non-increasing.
struct step_schedule {
  schedule_kind kind = schedule_kind::inverse_count;
  double scale = 1.0;

  void validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw config_error("step schedule scale must be positive and finite");
  }
};

inline double step_size(const step_schedule& schedule, std::size_t i) {
  if (i == 0) throw config_error("step index starts at 1");
  const double c = schedule.scale;
  switch (schedule.kind) {
    case schedule_kind::inverse_count: return std::min(1.0, c / static_cast<double>(i));
    case schedule_kind::constant: return c;
    case schedule_kind::inverse_sqrt: return std::min(1.0, c / std::sqrt(static_cast<double>(i)));
  }
  return c;
}

struct constraint_set {
  enum class kind_type { unconstrained, l1_ball };

  kind_type kind = kind_type::unconstrained;
  double radius = std::numeric_limits<double>::infinity();

  static constraint_set unconstrained() { return {}; }

  static constraint_set l1_ball(double s) {
    constraint_set c{kind_type::l1_ball, s};
    c.validate();
    return c;
  }

  bool is_l1() const noexcept { return kind == kind_type::l1_ball; }

  void validate() const {
    if (is_l1() && !(radius > 0.0 && std::isfinite(radius)))
      throw config_error("l1 radius must be positive and finite");
  }
};

namespace detail {

// Points whose l1 norm overshoots s by less than this are treated as inside,
// which keeps projection idempotent under rounding.
inline double l1_slack(double s) { return std::min(1e-10, 1e-12 * std::max(s, 1.0)); }

// Soft-threshold level tau for |v|_1 > s by sorting magnitudes: tau is
// (sum of the rho largest - s) / rho for the largest rho whose rho-th
// magnitude still exceeds that value. O(d log d).
inline double l1_threshold_sorted(std::span<const double> v, double s) {
  std::vector<double> mags(v.size());
  std::transform(v.begin(), v.end(), mags.begin(), [](double x) { return std::abs(x); });
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < mags.size(); ++j) {
    cumulative += mags[j];
    const double candidate = (cumulative - s) / static_cast<double>(j + 1);
    if (mags[j] > candidate)
      tau = candidate;
    else
      break;
  }
  return tau;
}

// Same tau by repeated filtering: start from all magnitudes, drop those not
// above the current level, recompute, until the active set is stable. The
// level only grows, and each pass is linear; a handful of passes is typical.
inline double l1_threshold_filtered(std::span<const double> v, double s, std::vector<double>& work) {
  work.clear();
  double sum = 0.0;
  for (double x : v) {
    const double m = std::abs(x);
    if (m > 0.0) {
      work.push_back(m);
      sum += m;
    }
  }
  double tau = (sum - s) / static_cast<double>(work.size());
  while (true) {
    std::size_t kept = 0;
    double kept_sum = 0.0;
    for (double m : work)
      if (m > tau) {
        work[kept++] = m;
        kept_sum += m;
      }
    if (kept == work.size()) break;
    work.resize(kept);
    tau = (kept_sum - s) / static_cast<double>(kept);
  }
  return tau;
}

inline void soft_threshold(std::span<double> v, double tau) {
  for (double& x : v) {
    const double shrunk = std::abs(x) - tau;
    x = shrunk > 0.0 ? std::copysign(shrunk, x) : 0.0;
  }
}

inline void project_l1_with_norm(std::span<double> v, double s, double norm) {
  if (norm <= s + l1_slack(s)) return;
  thread_local std::vector<double> work;
  soft_threshold(v, l1_threshold_filtered(v, s, work));
}

}  // namespace detail

/// In-place Euclidean projection onto {u : |u|_1 <= s}.
inline void project_l1_inplace(std::span<double> v, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw config_error("l1 radius must be positive and finite");
  if (!all_finite(v)) throw numeric_error("project_l1: non-finite input");
  detail::project_l1_with_norm(v, s, l1_norm(v));
}

/// Euclidean projection onto {u : |u|_1 <= s} by soft-thresholding.
inline Vector project_l1(std::span<const double> v, double s) {
  Vector out(v.begin(), v.end());
  project_l1_inplace(out, s);
  return out;
}

/// Reference projection with the sort-based threshold search.
inline Vector project_l1_sorted(std::span<const double> v, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw config_error("l1 radius must be positive and finite");
  if (!all_finite(v)) throw numeric_error("project_l1: non-finite input");
  Vector out(v.begin(), v.end());
  if (l1_norm(out) <= s + detail::l1_slack(s)) return out;
  detail::soft_threshold(out, detail::l1_threshold_sorted(out, s));
  return out;
}

/// theta_hat for one candidate change point. steps_taken == 0 iff the
/// estimate is still the all-zero initialization.
struct estimator_state {
  Vector theta_hat;
  std::size_t steps_taken = 0;

  estimator_state() = default;
  explicit estimator_state(std::size_t dimension) : theta_hat(dimension, 0.0) {}
};

/// In-place dual step theta <- theta - eta (theta - x) followed by projection.
inline void omd_advance(estimator_state& state, std::span<const double> x, const step_schedule& schedule,
                        const constraint_set& gamma) {
  require_same_dimension(state.theta_hat, x, "omd_update");
  const double eta = step_size(schedule, state.steps_taken + 1);
  double* theta = state.theta_hat.data();
  const double norm = pairwise_accumulate<1>(0, x.size(), [&](std::size_t i) {
    theta[i] -= eta * (theta[i] - x[i]);
    return std::array<double, 1>{std::abs(theta[i])};
  })[0];
  if (!std::isfinite(norm)) throw numeric_error("omd_update: non-finite estimate");
  if (gamma.is_l1()) detail::project_l1_with_norm(state.theta_hat, gamma.radius, norm);
  ++state.steps_taken;
}

inline estimator_state omd_update(const estimator_state& state, std::span<const double> x,
                                  const step_schedule& schedule, const constraint_set& gamma) {
  estimator_state next = state;
  omd_advance(next, x, schedule, gamma);
  return next;
}

}  // namespace adaptcd
