#pragma once

// Subcommand implementations behind the adaptcd command line. Each command
// takes a fully resolved run_config and returns the process exit status.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "adaptcd/adaptcd.hpp"

namespace adaptcd::cli {

namespace fs = std::filesystem;

enum exit_status : int {
  stopped = 0,          // detect: stopped; other commands: success
  exhausted = 1,        // detect: clean end of stream without a stop
  config_failure = 2,
  data_failure = 3,
  calibration_failure = 4,
};

enum class frame_mode { real, diffraction };

struct run_config {
  // detector
  detector_kind detector = detector_kind::acm;
  std::optional<std::size_t> dimension;
  std::size_t window = 50;
  std::optional<double> threshold;
  std::optional<double> target_arl;
  std::optional<double> l1_radius;
  schedule_kind schedule = schedule_kind::inverse_count;
  double step_scale = 1.0;
  double mcusum_level = 1.0;

  // calibration
  std::size_t replicates = 500;
  std::size_t max_horizon = 0;
  double tolerance = 0.1;
  std::size_t edd_replicates = 0;

  // input: exactly one of input / frames / synthetic
  std::optional<fs::path> input;
  std::optional<fs::path> frames;
  bool synthetic = false;
  frame_mode mode = frame_mode::real;
  std::size_t training_frames = 5;
  diffraction_config diffraction{};

  // synthetic stream
  std::optional<std::size_t> change_point;
  std::size_t horizon = 1000;
  std::size_t support = 5;
  double magnitude = 1.0;

  // output
  std::optional<fs::path> out;
  std::optional<fs::path> trace;
  std::optional<fs::path> baseline_out;
  std::optional<fs::path> sidecar;
  std::size_t trace_every = 1;

  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

inline std::string to_string(frame_mode m) { return m == frame_mode::real ? "real" : "diffraction"; }

inline json source_json(const run_config& c) {
  json j;
  if (c.input) {
    j["kind"] = "csv";
    j["path"] = c.input->string();
  } else if (c.frames) {
    j["kind"] = "frames";
    j["path"] = c.frames->string();
    j["mode"] = to_string(c.mode);
    j["training_frames"] = c.training_frames;
    if (c.mode == frame_mode::diffraction) {
      const auto& d = c.diffraction;
      j["diffraction"] = {{"bins", d.bins},
                          {"min_gap_bins", d.min_gap_bins},
                          {"skip_darkest_band", d.skip_darkest_band},
                          {"hough", {{"r_min", d.hough.r_min}, {"r_max", d.hough.r_max}, {"step", d.hough.step}}},
                          {"ring_min_radius", d.ring_min_radius},
                          {"probe_offset", d.probe_offset},
                          {"half_width", d.half_width}};
    }
  } else if (c.synthetic) {
    j["kind"] = "synthetic";
    j["dimension"] = c.dimension ? json(*c.dimension) : json(nullptr);
    j["change_point"] = c.change_point ? json(*c.change_point) : json(nullptr);
    j["horizon"] = c.horizon;
    j["support"] = c.support;
    j["magnitude"] = c.magnitude;
    j["seed"] = c.seed;
  }
  return j;
}

/// Every field that can change a result. Output paths and worker count are
/// excluded so the document only depends on what was computed.
inline json config_json(const run_config& c) {
  json j;
  j["detector"] = adaptcd::to_string(c.detector);
  j["dimension"] = c.dimension ? json(*c.dimension) : json(nullptr);
  j["window"] = c.window;
  j["threshold"] = c.threshold ? json(*c.threshold) : json(nullptr);
  j["target_arl"] = c.target_arl ? json(*c.target_arl) : json(nullptr);
  j["l1_radius"] = c.l1_radius ? json(*c.l1_radius) : json(nullptr);
  j["schedule"] = adaptcd::to_string(c.schedule);
  j["step_scale"] = c.step_scale;
  j["mcusum_level"] = c.mcusum_level;
  j["replicates"] = c.replicates;
  j["max_horizon"] = c.max_horizon;
  j["tolerance"] = c.tolerance;
  j["edd_replicates"] = c.edd_replicates;
  j["source"] = source_json(c);
  j["trace_every"] = c.trace_every;
  j["seed"] = c.seed;
  return j;
}

inline detector_config make_detector_config(const run_config& c, std::size_t dimension, double threshold) {
  detector_config d;
  d.kind = c.detector;
  d.dimension = dimension;
  d.window = c.window;
  d.threshold = threshold;
  d.schedule = {c.schedule, c.step_scale};
  d.constraint = c.l1_radius ? constraint_set::l1_ball(*c.l1_radius) : constraint_set::unconstrained();
  if (c.detector == detector_kind::mcusum) d.mcusum_mean = Vector(dimension, c.mcusum_level);
  d.workers = c.workers;
  d.validate();
  return d;
}

inline arl_options make_arl_options(const run_config& c) {
  arl_options o;
  o.replicates = c.replicates;
  o.max_horizon = c.max_horizon;
  o.seed = c.seed;
  o.workers = c.workers;
  return o;
}

inline stream_spec make_stream_spec(const run_config& c) {
  if (!c.dimension) throw config_error("synthetic streams need --dim");
  stream_spec s;
  s.dimension = *c.dimension;
  s.horizon = c.horizon;
  s.seed = c.seed;
  if (c.change_point) {
    s.change_point = c.change_point;
    s.shift = sparse_shift(s.dimension, c.support, c.magnitude);
  }
  s.validate();
  return s;
}

inline void write_document(const std::optional<fs::path>& path, const json& doc) {
  if (!path) {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  std::ofstream out(*path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path->string());
  out << doc.dump(2) << '\n';
}

namespace detail {

inline std::vector<frame> load_frames(const run_config& c) { return load_frame_directory(*c.frames); }

struct preprocessed {
  std::vector<Vector> observations;
  json artifacts;
  std::optional<baseline> fitted;
};

inline preprocessed run_preprocessing(const run_config& c) {
  const std::vector<frame> frames = load_frames(c);
  preprocessed p;
  if (c.mode == frame_mode::real) {
    auto r = preprocess_real_space(frames, c.training_frames);
    p.observations = std::move(r.observations);
    p.artifacts = {{"mode", "real"},
                   {"frames", frames.size()},
                   {"width", frames.front().width},
                   {"height", frames.front().height},
                   {"masked_pixels", r.fitted.masked_count()}};
    p.fitted = std::move(r.fitted);
  } else {
    auto r = preprocess_diffraction(frames, c.training_frames, c.diffraction);
    p.observations = std::move(r.observations);
    p.artifacts = {{"mode", "diffraction"}, {"frames", frames.size()}, {"geometry", to_json(r.geometry)}};
    json empty_degrees = json::array();
    for (std::size_t i = 0; i < r.signals.size(); ++i) {
      std::size_t n = 0;
      for (bool e : r.signals[i].empty) n += e;
      empty_degrees.push_back(n);
    }
    p.artifacts["empty_degrees_per_frame"] = empty_degrees;
    p.fitted = std::move(r.fitted);
  }
  return p;
}

inline int count_sources(const run_config& c) {
  return static_cast<int>(c.input.has_value()) + static_cast<int>(c.frames.has_value()) +
         static_cast<int>(c.synthetic);
}

}  // namespace detail

inline int cmd_detect(const run_config& c) {
  if (c.threshold.has_value() == c.target_arl.has_value())
    throw config_error("give exactly one of --threshold and --target-arl");
  if (detail::count_sources(c) != 1) throw config_error("give exactly one of --input, --frames and --synthetic");

  // Materialize the source up to the point where the dimension is known.
  std::vector<Vector> buffered;
  std::optional<std::ifstream> csv_file;
  std::optional<csv_observation_reader> csv;
  std::optional<gaussian_stream> synthetic;
  json artifacts;
  std::size_t dimension = 0;

  if (c.input) {
    csv_file.emplace(*c.input);
    if (!*csv_file) throw data_error("cannot open " + c.input->string());
    csv.emplace(*csv_file, c.dimension);
    Vector first;
    if ((*csv)(first)) buffered.push_back(std::move(first));
    if (csv->dimension())
      dimension = *csv->dimension();
    else if (c.dimension)
      dimension = *c.dimension;
    else
      throw data_error("empty input and no --dim to size the detector");
  } else if (c.frames) {
    auto p = detail::run_preprocessing(c);
    buffered = std::move(p.observations);
    artifacts = std::move(p.artifacts);
    dimension = buffered.front().size();
    if (c.dimension && *c.dimension != dimension) throw dimension_error(*c.dimension, dimension, "--dim");
  } else {
    synthetic.emplace(make_stream_spec(c));
    dimension = *c.dimension;
  }

  json doc;
  doc["command"] = "detect";
  doc["config"] = config_json(c);

  double b = c.threshold.value_or(0.0);
  if (c.target_arl) {
    const auto cal = calibrate_threshold(make_detector_config(c, dimension, 0.0), *c.target_arl, c.tolerance,
                                         make_arl_options(c));
    b = cal.threshold;
    doc["calibration"] = to_json(cal);
  }

  detector det(make_detector_config(c, dimension, b));
  doc["detector"] = to_json(det.config());
  std::size_t next = 0;
  auto source = [&](Vector& out) -> bool {
    if (next < buffered.size()) {
      out = buffered[next++];
      return true;
    }
    if (csv) return (*csv)(out);
    if (synthetic) return (*synthetic)(out);
    return false;
  };
  const detection_report report = run_detector(source, det, c.trace ? c.trace_every : 0);

  doc["result"] = to_json(report);
  if (!artifacts.is_null()) doc["preprocessing"] = artifacts;
  if (c.trace) {
    std::ofstream t(*c.trace, std::ios::binary);
    if (!t) throw data_error("cannot write " + c.trace->string());
    write_trace_csv(t, report.statistic_trace);
  }
  write_document(c.out, doc);
  return report.stopped ? stopped : exhausted;
}

inline int cmd_calibrate(const run_config& c) {
  if (!c.target_arl) throw config_error("calibrate needs --target-arl");
  if (!c.dimension) throw config_error("calibrate needs --dim");
  const detector_config cfg = make_detector_config(c, *c.dimension, 0.0);

  json doc;
  doc["command"] = "calibrate";
  doc["config"] = config_json(c);
  doc["detector"] = to_json(cfg);
  int status = stopped;
  try {
    const auto cal = calibrate_threshold(cfg, *c.target_arl, c.tolerance, make_arl_options(c));
    doc["calibration"] = to_json(cal);
    if (!cal.converged) status = calibration_failure;
    if (c.edd_replicates > 0) {
      stream_spec s;
      s.dimension = *c.dimension;
      s.change_point = 0;
      s.shift = sparse_shift(s.dimension, c.support, c.magnitude);
      s.horizon = cal.max_horizon;
      const auto edd = estimate_edd(cfg, cal.threshold, s, c.edd_replicates, derive_seed(c.seed, 0xedd), c.workers);
      json e = to_json(edd);
      e["support"] = c.support;
      e["magnitude"] = c.magnitude;
      doc["delay"] = e;
    }
  } catch (const calibration_error& e) {
    doc["error"] = {{"message", e.what()}, {"last_interval", {e.last_lo(), e.last_hi()}}};
    status = calibration_failure;
  }
  write_document(c.out, doc);
  return status;
}

inline int cmd_preprocess(const run_config& c) {
  if (!c.frames) throw config_error("preprocess needs --frames");
  auto p = detail::run_preprocessing(c);

  std::ostringstream body;
  body << "# mode=" << to_string(c.mode) << " d=" << p.observations.front().size()
       << " frames=" << p.observations.size() << " training=" << c.training_frames << '\n';
  write_observations(body, p.observations);
  if (c.out) {
    std::ofstream out(*c.out, std::ios::binary);
    if (!out) throw data_error("cannot write " + c.out->string());
    out << body.str();
  } else {
    std::cout << body.str();
  }

  if (c.baseline_out) save_baseline(*c.baseline_out, *p.fitted);
  std::optional<fs::path> sidecar = c.sidecar;
  if (!sidecar && c.out) sidecar = fs::path(c.out->string() + ".json");
  if (sidecar) {
    json doc;
    doc["command"] = "preprocess";
    doc["config"] = config_json(c);
    doc["artifacts"] = p.artifacts;
    std::ofstream out(*sidecar, std::ios::binary);
    if (!out) throw data_error("cannot write " + sidecar->string());
    out << doc.dump(2) << '\n';
  }
  return stopped;
}

inline int cmd_simulate(const run_config& c) {
  const stream_spec spec = make_stream_spec(c);
  std::ostringstream body;
  body << "# d=" << spec.dimension << " nu=" << (spec.change_point ? std::to_string(*spec.change_point) : "none")
       << " seed=" << spec.seed << '\n';
  gaussian_stream stream(spec);
  Vector x;
  while (stream(x)) write_observation(body, x);
  if (c.out) {
    std::ofstream out(*c.out, std::ios::binary);
    if (!out) throw data_error("cannot write " + c.out->string());
    out << body.str();
  } else {
    std::cout << body.str();
  }
  return stopped;
}

/// Runs `command`, mapping library exceptions onto exit statuses.
template <class Command>
int run_guarded(Command&& command, const run_config& c, std::ostream& err) {
  try {
    return command(c);
  } catch (const calibration_error& e) {
    err << "calibration error: " << e.what() << '\n';
    return calibration_failure;
  } catch (const config_error& e) {
    err << "config error: " << e.what() << '\n';
    return config_failure;
  } catch (const dimension_error& e) {
    err << "data error: " << e.what() << '\n';
    return data_failure;
  } catch (const data_error& e) {
    err << "data error: " << e.what() << '\n';
    return data_failure;
  } catch (const numeric_error& e) {
    err << "data error: " << e.what() << '\n';
    return data_failure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return data_failure;
  }
}

}  // namespace adaptcd::cli
