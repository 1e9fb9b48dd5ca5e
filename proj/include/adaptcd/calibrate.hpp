#pragma once

// Monte Carlo machinery: synthetic Gaussian streams, ARL under the null,
// threshold calibration to a target ARL, and detection delay under a shift.
//
// Replicate i of a run with master seed s always draws its stream from
// derive_seed(s, i), so results do not depend on how replicates are spread
// over workers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adaptcd/detectors.hpp"
#include "adaptcd/errors.hpp"
#include "adaptcd/lrcore.hpp"
#include "adaptcd/parallel.hpp"
#include "adaptcd/random.hpp"
#include "adaptcd/summation.hpp"

namespace adaptcd {

/// X_1..X_nu ~ N(0, I_d), X_{nu+1}.. ~ N(shift, I_d). No change point means a
/// pure null stream.
struct stream_spec {
  std::size_t dimension = 1;
  std::optional<std::size_t> change_point;
  Vector shift;
  std::size_t horizon = 1000;
  std::uint64_t seed = 0;

  void validate() const {
    if (dimension == 0) throw config_error("stream dimension must be at least 1");
    if (horizon == 0) throw config_error("stream horizon must be at least 1");
    if (change_point) {
      if (*change_point >= horizon) throw config_error("change point must be before the horizon");
      if (shift.size() != dimension) throw dimension_error(dimension, shift.size(), "post-change mean");
      if (!all_finite(shift)) throw config_error("post-change mean must be finite");
    } else if (!shift.empty()) {
      throw config_error("post-change mean given without a change point");
    }
  }
};

/// Post-change mean with `support` leading coordinates equal to `magnitude`.
inline Vector sparse_shift(std::size_t dimension, std::size_t support, double magnitude) {
  if (support > dimension) throw config_error("shift support exceeds dimension");
  Vector theta(dimension, 0.0);
  std::fill_n(theta.begin(), support, magnitude);
  return theta;
}

/// Lazily generated stream; usable as an observation_source.
class gaussian_stream {
 public:
  explicit gaussian_stream(stream_spec spec) : spec_(std::move(spec)), normal_(spec_.seed) { spec_.validate(); }

  bool operator()(Vector& out) {
    if (emitted_ >= spec_.horizon) return false;
    out.resize(spec_.dimension);
    normal_.fill(out);
    if (spec_.change_point && emitted_ >= *spec_.change_point)
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += spec_.shift[j];
    ++emitted_;
    return true;
  }

  std::size_t emitted() const noexcept { return emitted_; }
  const stream_spec& spec() const noexcept { return spec_; }

 private:
  stream_spec spec_;
  normal_sampler normal_;
  std::size_t emitted_ = 0;
};

inline std::vector<Vector> generate_stream(const stream_spec& spec) {
  gaussian_stream source(spec);
  std::vector<Vector> out;
  out.reserve(spec.horizon);
  Vector x;
  while (source(x)) out.push_back(x);
  return out;
}

struct arl_options {
  std::size_t replicates = 500;
  /// Truncation horizon; 0 selects 20x the target ARL during calibration.
  std::size_t max_horizon = 0;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

struct calibration_result {
  double threshold = 0.0;
  double arl = 0.0;
  double standard_error = 0.0;
  std::size_t replicates = 0;
  std::size_t max_horizon = 0;
  std::size_t truncated = 0;
  std::uint64_t seed = 0;
  // Filled by calibrate_threshold only.
  std::optional<double> target_arl;
  std::optional<double> tolerance;
  bool converged = true;
  bool ci_exceeds_tolerance = false;
  std::size_t iterations = 0;

  /// Truncated runs contributed max_horizon, so arl is biased low.
  bool truncation_bias() const noexcept { return truncated > 0; }
};

struct delay_result {
  /// Mean of (stop time - change point) over runs that stopped; NaN if none did.
  double mean_delay = std::numeric_limits<double>::quiet_NaN();
  double standard_error = std::numeric_limits<double>::quiet_NaN();
  /// Mean with non-stopping runs counted at the horizon: a lower bound on
  /// the true delay whenever some runs did not stop.
  double censored_mean_delay = 0.0;
  double censored_standard_error = 0.0;
  std::size_t replicates = 0;
  std::size_t stopped = 0;
  std::size_t not_stopped = 0;
  std::size_t max_horizon = 0;
  double threshold = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

struct mean_and_error {
  double mean = 0.0;
  double standard_error = 0.0;
};

inline mean_and_error summarize(std::span<const double> values) {
  mean_and_error r;
  if (values.empty()) {
    r.mean = r.standard_error = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  const double n = static_cast<double>(values.size());
  r.mean = pairwise_sum(values) / n;
  if (values.size() > 1) {
    const double m = r.mean;
    const double ss = pairwise_accumulate<1>(0, values.size(), [&](std::size_t i) {
      const double d = values[i] - m;
      return std::array<double, 1>{d * d};
    })[0];
    r.standard_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return r;
}

inline detector_config single_threaded(detector_config cfg) {
  cfg.workers = 1;
  return cfg;
}

inline stream_spec null_spec(std::size_t dimension, std::size_t horizon, std::uint64_t seed) {
  stream_spec s;
  s.dimension = dimension;
  s.horizon = horizon;
  s.seed = seed;
  return s;
}

inline std::size_t resolve_horizon(std::size_t max_horizon, double target) {
  if (max_horizon != 0) return max_horizon;
  return static_cast<std::size_t>(std::ceil(20.0 * std::max(1.0, target)));
}

// Statistic paths of the null replicates, extended on demand. A path does
// not depend on the threshold, so each replicate is simulated once with an
// infinite threshold and only its running-maximum records are kept; the
// stop time for any b is the first record above b.
class null_path_bank {
 public:
  null_path_bank(const detector_config& cfg, const arl_options& opt, std::size_t horizon)
      : cfg_(single_threaded(cfg)), opt_(opt), horizon_(horizon), paths_(opt.replicates) {
    cfg_.threshold = std::numeric_limits<double>::infinity();
    cfg_.validate();
    const double state_bytes = 8.0 * static_cast<double>(cfg_.dimension) *
                               (cfg_.kind == detector_kind::mcusum ? 2.0 : cfg_.window + 2.0);
    keep_state_ = state_bytes * static_cast<double>(opt.replicates) <= state_budget_bytes;
  }

  calibration_result evaluate(double b) {
    std::vector<double> lengths(paths_.size());
    std::vector<char> truncated(paths_.size(), 0);
    parallel_for(paths_.size(), opt_.workers, [&](std::size_t i) {
      extend(i, b);
      const auto& rec = paths_[i].records;
      const auto it = std::upper_bound(rec.begin(), rec.end(), b,
                                       [](double v, const record& r) { return v < r.statistic; });
      if (it != rec.end()) {
        lengths[i] = static_cast<double>(it->t);
      } else {
        lengths[i] = static_cast<double>(horizon_);
        truncated[i] = 1;
      }
    });
    calibration_result r;
    const auto s = summarize(lengths);
    r.threshold = b;
    r.arl = s.mean;
    r.standard_error = s.standard_error;
    r.replicates = paths_.size();
    r.max_horizon = horizon_;
    r.truncated = static_cast<std::size_t>(std::count(truncated.begin(), truncated.end(), 1));
    r.seed = opt_.seed;
    return r;
  }

 private:
  static constexpr double state_budget_bytes = 512.0 * 1024 * 1024;

  struct record {
    std::size_t t;
    double statistic;
  };

  struct path {
    std::vector<record> records;  // strictly increasing statistics
    std::size_t steps = 0;
    std::optional<detector> det;
    std::optional<gaussian_stream> stream;
  };

  void extend(std::size_t i, double b) {
    path& p = paths_[i];
    auto satisfied = [&] { return p.steps >= horizon_ || (!p.records.empty() && p.records.back().statistic > b); };
    if (satisfied()) return;

    std::size_t replay = 0;
    if (!p.det) {
      p.det.emplace(cfg_);
      p.stream.emplace(null_spec(cfg_.dimension, horizon_, derive_seed(opt_.seed, i)));
      replay = p.steps;  // states were dropped; regenerate the known prefix
    }
    Vector x;
    for (std::size_t t = 1; t <= replay; ++t) {
      (*p.stream)(x);
      p.det->update(x);
    }
    while (!satisfied()) {
      (*p.stream)(x);
      const step_result s = p.det->update(x);
      p.steps = s.t;
      if (p.records.empty() || s.statistic > p.records.back().statistic) p.records.push_back({s.t, s.statistic});
    }
    if (!keep_state_) {
      p.det.reset();
      p.stream.reset();
    }
  }

  detector_config cfg_;
  arl_options opt_;
  std::size_t horizon_;
  std::vector<path> paths_;
  bool keep_state_ = true;
};

}  // namespace detail

/// ARL at threshold b: mean stop time over `replicates` null streams, runs
/// still going at max_horizon counted as max_horizon.
inline calibration_result estimate_arl(const detector_config& cfg, double b, const arl_options& opt) {
  if (opt.replicates == 0) throw config_error("replicates must be at least 1");
  if (opt.max_horizon == 0) throw config_error("max horizon must be at least 1");
  detector_config base = detail::single_threaded(cfg);
  base.threshold = b;
  base.validate();

  std::vector<double> lengths(opt.replicates);
  std::vector<char> truncated(opt.replicates, 0);
  parallel_for(opt.replicates, opt.workers, [&](std::size_t i) {
    detector det(base);
    gaussian_stream stream(detail::null_spec(base.dimension, opt.max_horizon, derive_seed(opt.seed, i)));
    run_detector(stream, det, 0);
    if (det.stopped()) {
      lengths[i] = static_cast<double>(*det.stop_time());
    } else {
      lengths[i] = static_cast<double>(opt.max_horizon);
      truncated[i] = 1;
    }
  });

  calibration_result r;
  const auto s = detail::summarize(lengths);
  r.threshold = b;
  r.arl = s.mean;
  r.standard_error = s.standard_error;
  r.replicates = opt.replicates;
  r.max_horizon = opt.max_horizon;
  r.truncated = static_cast<std::size_t>(std::count(truncated.begin(), truncated.end(), 1));
  r.seed = opt.seed;
  return r;
}

/// Bisection on b until the ARL estimate, together with its 95% interval,
/// lies within tolerance * target of the target.
///
/// All evaluations share the same null replicates, so the estimated ARL is a
/// non-decreasing step function of b. If the band falls inside one step the
/// search stops on a vanishing bracket with converged = false and returns the
/// upper end (ARL >= target). Throws calibration_error if no upper bracket is
/// found.
inline calibration_result calibrate_threshold(const detector_config& cfg, double target, double tolerance,
                                              const arl_options& opt) {
  if (!(target >= 1.0) || !std::isfinite(target)) throw config_error("target ARL must be at least 1");
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw config_error("tolerance must be in (0, 1)");
  if (opt.replicates == 0) throw config_error("replicates must be at least 1");

  const std::size_t horizon = detail::resolve_horizon(opt.max_horizon, target);
  detail::null_path_bank bank(cfg, opt, horizon);
  const double band = tolerance * target;
  std::size_t iterations = 0;

  auto finish = [&](calibration_result r, bool converged) {
    r.target_arl = target;
    r.tolerance = tolerance;
    r.converged = converged;
    r.ci_exceeds_tolerance = 1.96 * r.standard_error > band;
    r.iterations = iterations;
    return r;
  };
  // In band with its whole 95% interval, unless the interval alone is wider
  // than the band, in which case the point estimate decides.
  auto within = [&](const calibration_result& r) {
    const double half_ci = 1.96 * r.standard_error;
    if (half_ci >= band) return std::abs(r.arl - target) <= band;
    return std::abs(r.arl - target) + half_ci <= band;
  };

  constexpr std::size_t max_expansions = 64;
  constexpr std::size_t max_bisections = 200;

  double lo = -1.0;
  calibration_result at_lo = bank.evaluate(lo);
  ++iterations;
  for (std::size_t e = 0; at_lo.arl > target; ++e) {
    if (within(at_lo)) return finish(at_lo, true);
    if (e == max_expansions) throw calibration_error("could not bracket target ARL from below", lo, lo);
    lo *= 2.0;
    at_lo = bank.evaluate(lo);
    ++iterations;
  }
  if (within(at_lo)) return finish(at_lo, true);

  double hi = 1.0;
  calibration_result at_hi = bank.evaluate(hi);
  ++iterations;
  for (std::size_t e = 0; at_hi.arl < target; ++e) {
    if (within(at_hi)) return finish(at_hi, true);
    if (e == max_expansions)
      throw calibration_error("could not bracket target ARL from above (ARL " + std::to_string(at_hi.arl) +
                                  " at b=" + std::to_string(hi) + ")",
                              lo, hi);
    lo = hi;
    hi += std::max(1.0, hi / 2.0);
    at_hi = bank.evaluate(hi);
    ++iterations;
  }
  if (within(at_hi)) return finish(at_hi, true);

  for (std::size_t it = 0; it < max_bisections; ++it) {
    if (hi - lo <= 1e-9 * std::max(1.0, std::abs(hi))) break;
    const double mid = 0.5 * (lo + hi);
    calibration_result at_mid = bank.evaluate(mid);
    ++iterations;
    if (within(at_mid)) return finish(at_mid, true);
    if (at_mid.arl < target) {
      lo = mid;
    } else {
      hi = mid;
      at_hi = at_mid;
    }
  }
  return finish(at_hi, false);
}

/// Detection delay with the change active from the first sample (nu = 0).
inline delay_result estimate_edd(const detector_config& cfg, double b, const stream_spec& spec,
                                 std::size_t replicates, std::uint64_t seed, std::size_t workers = 1) {
  spec.validate();
  if (!spec.change_point || *spec.change_point != 0)
    throw config_error("delay estimation requires a change point at 0");
  if (replicates == 0) throw config_error("replicates must be at least 1");
  detector_config base = detail::single_threaded(cfg);
  base.threshold = b;
  base.validate();
  if (base.dimension != spec.dimension) throw dimension_error(base.dimension, spec.dimension, "stream spec");

  const std::size_t nu = *spec.change_point;
  std::vector<double> delays(replicates);
  std::vector<char> stopped(replicates, 0);
  parallel_for(replicates, workers, [&](std::size_t i) {
    stream_spec s = spec;
    s.seed = derive_seed(seed, i);
    detector det(base);
    gaussian_stream stream(std::move(s));
    run_detector(stream, det, 0);
    if (det.stopped()) {
      delays[i] = static_cast<double>(*det.stop_time() - nu);
      stopped[i] = 1;
    } else {
      delays[i] = static_cast<double>(spec.horizon - nu);
    }
  });

  delay_result r;
  r.replicates = replicates;
  r.max_horizon = spec.horizon;
  r.threshold = b;
  r.seed = seed;
  std::vector<double> stopped_delays;
  for (std::size_t i = 0; i < replicates; ++i)
    if (stopped[i]) stopped_delays.push_back(delays[i]);
  r.stopped = stopped_delays.size();
  r.not_stopped = replicates - r.stopped;
  const auto conditional = detail::summarize(stopped_delays);
  r.mean_delay = conditional.mean;
  r.standard_error = stopped_delays.size() > 1 ? conditional.standard_error
                                                : std::numeric_limits<double>::quiet_NaN();
  if (stopped_delays.size() == 1) r.standard_error = 0.0;
  const auto censored = detail::summarize(delays);
  r.censored_mean_delay = censored.mean;
  r.censored_standard_error = censored.standard_error;
  return r;
}

}  // namespace adaptcd
