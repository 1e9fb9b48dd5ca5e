#pragma once

// Window-limited sequential detectors behind one stopping interface:
//
//   acm     max_k log Lambda_{k,t} over k in [max(1, t-w), t]
//   asr     log sum_k Lambda_{k,t} over the same window
//   mcusum  S_t = max(0, S_{t-1} + log LR(theta_1, x_t)), fixed theta_1
//   glr     max_k (t-k+1) |mean(X_k..X_t)|^2 / 2, exact windowed MLE
//
// acm/asr share one hypothesis bank. Each hypothesis k keeps its own OMD
// estimate theta_hat_{k,t} and log Lambda_{k,t}; the likelihood factor for
// X_t always uses the estimate from before X_t was seen.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "adaptcd/errors.hpp"
#include "adaptcd/lrcore.hpp"
#include "adaptcd/omd.hpp"
#include "adaptcd/parallel.hpp"
#include "adaptcd/summation.hpp"

namespace adaptcd {

enum class detector_kind { acm, asr, mcusum, glr };

inline std::string to_string(detector_kind k) {
  switch (k) {
    case detector_kind::acm: return "acm";
    case detector_kind::asr: return "asr";
    case detector_kind::mcusum: return "mcusum";
    case detector_kind::glr: return "glr";
  }
  return "?";
}

inline detector_kind parse_detector_kind(const std::string& s) {
  if (s == "acm") return detector_kind::acm;
  if (s == "asr") return detector_kind::asr;
  if (s == "mcusum") return detector_kind::mcusum;
  if (s == "glr") return detector_kind::glr;
  throw config_error("unknown detector '" + s + "'");
}

struct detector_config {
  detector_kind kind = detector_kind::acm;
  std::size_t dimension = 1;
  std::size_t window = 50;
  double threshold = 0.0;
  step_schedule schedule{};
  constraint_set constraint = constraint_set::unconstrained();
  /// MCUSUM post-change mean; empty means the all-one vector.
  Vector mcusum_mean{};
  /// Cap on threads used for per-hypothesis updates within one step.
  std::size_t workers = 1;

  void validate() const {
    if (dimension == 0) throw config_error("dimension must be at least 1");
    if (window == 0) throw config_error("window must be at least 1");
    if (std::isnan(threshold)) throw config_error("threshold must not be NaN");
    schedule.validate();
    constraint.validate();
    if (!mcusum_mean.empty()) {
      if (mcusum_mean.size() != dimension)
        throw dimension_error(dimension, mcusum_mean.size(), "mcusum post-change mean");
      if (!all_finite(mcusum_mean)) throw config_error("mcusum post-change mean must be finite");
    }
  }

  Vector resolved_mcusum_mean() const {
    return mcusum_mean.empty() ? Vector(dimension, 1.0) : mcusum_mean;
  }
};

/// Candidate change point k with its estimator and log Lambda_{k,t}.
struct hypothesis_state {
  std::size_t birth = 0;
  estimator_state estimator;
  double log_lambda = 0.0;
};

/// What one update produced.
struct step_result {
  std::size_t t = 0;
  double statistic = 0.0;
  /// Smallest maximizing candidate change point (acm/asr/glr) or one past the
  /// last reset (mcusum).
  std::size_t estimated_k = 0;
  bool stopped = false;
};

/// Numerically stable log(sum(exp(v))) for non-empty v, max-shifted.
inline double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

namespace detail {

// Below this many scalar operations per step, threads cost more than they save.
inline constexpr std::size_t parallel_work_floor = std::size_t{1} << 16;

class adaptive_engine {
 public:
  explicit adaptive_engine(const detector_config& cfg) : cfg_(cfg) {}

  std::pair<double, std::size_t> advance(std::span<const double> x, std::size_t t) {
    spawn(t);
    const std::size_t n = hypotheses_.size();
    const std::size_t workers = n * x.size() >= parallel_work_floor ? cfg_.workers : 1;
    parallel_for(n, workers, [&](std::size_t i) {
      hypothesis_state& h = hypotheses_[i];
      h.log_lambda += log_lr_increment(h.estimator.theta_hat, x);
      omd_advance(h.estimator, x, cfg_.schedule, cfg_.constraint);
    });
    while (hypotheses_.front().birth + cfg_.window < t) {
      spare_ = std::move(hypotheses_.front().estimator.theta_hat);
      hypotheses_.pop_front();
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < hypotheses_.size(); ++i)
      if (hypotheses_[i].log_lambda > hypotheses_[best].log_lambda) best = i;
    double statistic = hypotheses_[best].log_lambda;
    if (cfg_.kind == detector_kind::asr) {
      scratch_.resize(hypotheses_.size());
      for (std::size_t i = 0; i < hypotheses_.size(); ++i) scratch_[i] = hypotheses_[i].log_lambda;
      statistic = log_sum_exp(scratch_);
    }
    if (!std::isfinite(statistic)) throw numeric_error("adaptive detector: non-finite statistic");
    return {statistic, hypotheses_[best].birth};
  }

  const std::deque<hypothesis_state>& hypotheses() const noexcept { return hypotheses_; }

 private:
  void spawn(std::size_t t) {
    hypothesis_state h;
    h.birth = t;
    if (spare_.size() == cfg_.dimension) {
      std::fill(spare_.begin(), spare_.end(), 0.0);
      h.estimator.theta_hat = std::move(spare_);
      spare_ = Vector{};
    } else {
      h.estimator = estimator_state(cfg_.dimension);
    }
    hypotheses_.push_back(std::move(h));
  }

  detector_config cfg_;
  std::deque<hypothesis_state> hypotheses_;
  Vector spare_;
  Vector scratch_;
};

class mcusum_engine {
 public:
  explicit mcusum_engine(const detector_config& cfg) : mean_(cfg.resolved_mcusum_mean()) {}

  std::pair<double, std::size_t> advance(std::span<const double> x, std::size_t t) {
    statistic_ = std::max(0.0, statistic_ + log_lr_increment(mean_, x));
    if (statistic_ == 0.0) last_reset_ = t;
    return {statistic_, last_reset_ + 1};
  }

  double statistic() const noexcept { return statistic_; }

 private:
  Vector mean_;
  double statistic_ = 0.0;
  std::size_t last_reset_ = 0;
};

class glr_engine {
 public:
  explicit glr_engine(const detector_config& cfg) : window_(cfg.window), sum_(cfg.dimension) {}

  // Walks the stored window backward from k = t, accumulating the suffix sum.
  std::pair<double, std::size_t> advance(std::span<const double> x, std::size_t t) {
    samples_.emplace_back(x.begin(), x.end());
    if (samples_.size() > window_ + 1) samples_.pop_front();

    std::fill(sum_.begin(), sum_.end(), 0.0);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_k = t;
    const std::size_t count = samples_.size();
    for (std::size_t back = 0; back < count; ++back) {
      const Vector& sample = samples_[count - 1 - back];
      for (std::size_t j = 0; j < sum_.size(); ++j) sum_[j] += sample[j];
      const double n = static_cast<double>(back + 1);
      const double term = squared_norm(sum_) / (2.0 * n);
      if (term >= best) {
        best = term;
        best_k = t - back;
      }
    }
    if (!std::isfinite(best)) throw numeric_error("glr detector: non-finite statistic");
    return {best, best_k};
  }

 private:
  std::size_t window_;
  std::deque<Vector> samples_;
  Vector sum_;
};

}  // namespace detail

/// Incrementally updated detector. Once the statistic exceeds the threshold
/// the detector is stopped and rejects further input.
class detector {
 public:
  explicit detector(detector_config cfg) : cfg_(std::move(cfg)), engine_(make_engine(cfg_)) {}

  step_result update(std::span<const double> x) {
    if (stop_time_) throw state_error("detector already stopped at t=" + std::to_string(*stop_time_));
    if (x.size() != cfg_.dimension) throw dimension_error(cfg_.dimension, x.size(), "observation");
    if (!all_finite(x)) throw numeric_error("observation contains non-finite values");

    const std::size_t t = time_ + 1;
    const auto [statistic, k] = std::visit([&](auto& e) { return e.advance(x, t); }, engine_);
    time_ = t;
    statistic_ = statistic;
    estimated_k_ = k;
    if (statistic > cfg_.threshold) stop_time_ = t;
    return {t, statistic, k, stop_time_.has_value()};
  }

  const detector_config& config() const noexcept { return cfg_; }
  detector_kind kind() const noexcept { return cfg_.kind; }
  double threshold() const noexcept { return cfg_.threshold; }
  std::size_t time() const noexcept { return time_; }
  double statistic() const noexcept { return statistic_; }
  std::size_t estimated_change_point() const noexcept { return estimated_k_; }
  bool stopped() const noexcept { return stop_time_.has_value(); }
  std::optional<std::size_t> stop_time() const noexcept { return stop_time_; }

  /// Active hypotheses in ascending birth order; empty for mcusum and glr.
  const std::deque<hypothesis_state>& hypotheses() const {
    static const std::deque<hypothesis_state> none;
    if (const auto* a = std::get_if<detail::adaptive_engine>(&engine_)) return a->hypotheses();
    return none;
  }

 private:
  using engine_type = std::variant<detail::adaptive_engine, detail::mcusum_engine, detail::glr_engine>;

  static engine_type make_engine(const detector_config& cfg) {
    cfg.validate();
    switch (cfg.kind) {
      case detector_kind::acm:
      case detector_kind::asr: return detail::adaptive_engine(cfg);
      case detector_kind::mcusum: return detail::mcusum_engine(cfg);
      case detector_kind::glr: return detail::glr_engine(cfg);
    }
    throw config_error("unknown detector kind");
  }

  detector_config cfg_;
  engine_type engine_;
  std::size_t time_ = 0;
  double statistic_ = 0.0;
  std::size_t estimated_k_ = 0;
  std::optional<std::size_t> stop_time_;
};

struct trace_row {
  std::size_t t = 0;
  double statistic = 0.0;
  std::size_t estimated_k = 0;
};

struct detection_report {
  bool stopped = false;
  std::optional<std::size_t> stop_time;
  std::vector<trace_row> statistic_trace;
  std::optional<std::size_t> change_point_estimate;
  std::size_t samples_consumed = 0;
  double threshold = 0.0;
};

/// Pull source: `source(out)` fills `out` with the next observation and
/// returns false at end of stream.
template <class Source>
concept observation_source = requires(Source s, Vector& out) {
  { s(out) } -> std::convertible_to<bool>;
};

/// Feeds `source` into `det` until it stops or the source runs dry. Every
/// `trace_every`-th step is traced, plus the stopping step. trace_every = 0
/// disables tracing.
template <observation_source Source>
detection_report run_detector(Source&& source, detector& det, std::size_t trace_every = 1) {
  detection_report report;
  report.threshold = det.threshold();
  Vector x;
  while (!det.stopped() && source(x)) {
    const step_result r = det.update(x);
    ++report.samples_consumed;
    if (trace_every != 0 && (r.t % trace_every == 0 || r.stopped))
      report.statistic_trace.push_back({r.t, r.statistic, r.estimated_k});
  }
  report.stopped = det.stopped();
  report.stop_time = det.stop_time();
  if (report.stopped) report.change_point_estimate = det.estimated_change_point();
  return report;
}

inline detection_report run_detector(std::span<const Vector> stream, detector& det, std::size_t trace_every = 1) {
  std::size_t next = 0;
  return run_detector(
      [&](Vector& out) {
        if (next >= stream.size()) return false;
        out = stream[next++];
        return true;
      },
      det, trace_every);
}

}  // namespace adaptcd
