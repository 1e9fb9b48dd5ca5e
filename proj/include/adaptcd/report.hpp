#pragma once

// JSON documents for configs and results, and the statistic-trace CSV.

#include <ostream>
#include <span>

#include "json.hpp"

#include "adaptcd/calibrate.hpp"
#include "adaptcd/csv.hpp"
#include "adaptcd/detectors.hpp"
#include "adaptcd/diffraction.hpp"

namespace adaptcd {

using json = nlohmann::ordered_json;

namespace detail {
// NaN and infinities have no JSON spelling.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
}  // namespace detail

/// Worker count is left out: it never changes a result.
inline json to_json(const detector_config& c) {
  json j;
  j["detector"] = to_string(c.kind);
  j["dimension"] = c.dimension;
  j["window"] = c.window;
  j["threshold"] = detail::number_or_null(c.threshold);
  j["schedule"] = {{"kind", to_string(c.schedule.kind)}, {"scale", c.schedule.scale}};
  if (c.constraint.is_l1())
    j["constraint"] = {{"kind", "l1-ball"}, {"radius", c.constraint.radius}};
  else
    j["constraint"] = {{"kind", "unconstrained"}};
  if (c.kind == detector_kind::mcusum) j["mcusum_mean"] = c.resolved_mcusum_mean();
  return j;
}

inline json to_json(const calibration_result& r) {
  json j;
  j["threshold"] = detail::number_or_null(r.threshold);
  j["arl"] = detail::number_or_null(r.arl);
  j["standard_error"] = detail::number_or_null(r.standard_error);
  j["replicates"] = r.replicates;
  j["max_horizon"] = r.max_horizon;
  j["truncated_runs"] = r.truncated;
  j["truncation_bias"] = r.truncation_bias();
  j["seed"] = r.seed;
  j["rng"] = rng_description;
  if (r.target_arl) {
    j["target_arl"] = *r.target_arl;
    j["tolerance"] = r.tolerance.value_or(0.0);
    j["converged"] = r.converged;
    j["ci_exceeds_tolerance"] = r.ci_exceeds_tolerance;
    j["iterations"] = r.iterations;
  }
  return j;
}

inline json to_json(const delay_result& r) {
  json j;
  j["threshold"] = detail::number_or_null(r.threshold);
  j["mean_delay"] = detail::number_or_null(r.mean_delay);
  j["standard_error"] = detail::number_or_null(r.standard_error);
  j["censored_mean_delay"] = detail::number_or_null(r.censored_mean_delay);
  j["censored_standard_error"] = detail::number_or_null(r.censored_standard_error);
  j["replicates"] = r.replicates;
  j["stopped"] = r.stopped;
  j["not_stopped"] = r.not_stopped;
  j["max_horizon"] = r.max_horizon;
  j["seed"] = r.seed;
  j["rng"] = rng_description;
  return j;
}

/// Report summary; the trace goes to its own CSV.
inline json to_json(const detection_report& r) {
  json j;
  j["stopped"] = r.stopped;
  j["stop_time"] = r.stop_time ? json(*r.stop_time) : json(nullptr);
  j["change_point_estimate"] = r.change_point_estimate ? json(*r.change_point_estimate) : json(nullptr);
  j["samples_consumed"] = r.samples_consumed;
  j["threshold"] = detail::number_or_null(r.threshold);
  return j;
}

inline json to_json(const intensity_interval& i) { return json::array({i.lo, i.hi}); }

inline json to_json(const diffraction_geometry& g) {
  json j;
  j["center"] = {g.center.x, g.center.y};
  j["ring_radius"] = g.ring_radius;
  j["probe_radius"] = g.probe_radius;
  json bands = json::array();
  for (const auto& b : g.bands) bands.push_back(to_json(b));
  j["bands"] = bands;
  json centers = json::array();
  for (const auto& c : g.band_centers)
    centers.push_back({{"center", {c.center.x, c.center.y}}, {"radius", c.radius}, {"votes", c.votes}});
  j["band_centers"] = centers;
  return j;
}

inline void write_trace_csv(std::ostream& out, std::span<const trace_row> trace) {
  out << "t,statistic,estimated_k\n";
  for (const auto& row : trace) out << row.t << ',' << format_double(row.statistic) << ',' << row.estimated_k << '\n';
}

}  // namespace adaptcd
