#pragma once

// Frame sequence -> observation vectors.
//
// Real space: every pixel standardized against the first m frames.
// Diffraction: ring geometry fitted on the first frame, one 360-entry
// angular signal per frame, then the signals standardized per angle against
// the first m frames exactly like real-space pixels.

#include <span>
#include <vector>

#include "adaptcd/diffraction.hpp"
#include "adaptcd/errors.hpp"
#include "adaptcd/frame.hpp"
#include "adaptcd/standardize.hpp"

namespace adaptcd {

struct real_space_result {
  baseline fitted;
  std::vector<Vector> observations;
};

inline real_space_result preprocess_real_space(std::span<const frame> frames, std::size_t training) {
  if (training > frames.size())
    throw data_error("need " + std::to_string(training) + " training frames, have " + std::to_string(frames.size()));
  real_space_result r;
  r.fitted = standardize_fit(frames.first(training));
  r.observations.reserve(frames.size());
  for (const frame& f : frames) r.observations.push_back(standardize_apply(r.fitted, f));
  return r;
}

struct diffraction_result {
  diffraction_geometry geometry;
  baseline fitted;
  std::vector<polar_signal> signals;
  std::vector<Vector> observations;
};

inline frame polar_signal_frame(const polar_signal& s) {
  return frame(360, 1, std::vector<double>(s.values.begin(), s.values.end()));
}

inline diffraction_result preprocess_diffraction(std::span<const frame> frames, std::size_t training,
                                                 const diffraction_config& cfg) {
  if (training > frames.size())
    throw data_error("need " + std::to_string(training) + " training frames, have " + std::to_string(frames.size()));
  if (frames.empty()) throw data_error("no frames");
  diffraction_result r;
  r.geometry = fit_diffraction_geometry(frames.front(), cfg);
  std::vector<frame> as_frames;
  as_frames.reserve(frames.size());
  for (const frame& f : frames) {
    if (!f.same_shape(frames.front())) throw data_error("frame shape changes within the sequence");
    r.signals.push_back(extract_polar_signal(f, r.geometry, cfg));
    as_frames.push_back(polar_signal_frame(r.signals.back()));
  }
  r.fitted = standardize_fit(std::span<const frame>(as_frames).first(training));
  for (const frame& f : as_frames) r.observations.push_back(standardize_apply(r.fitted, f));
  return r;
}

}  // namespace adaptcd
