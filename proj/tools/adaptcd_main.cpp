#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "commands.hpp"

namespace {

using namespace adaptcd;
using namespace adaptcd::cli;

void add_detector_flags(CLI::App& app, run_config& c, std::string& detector, std::string& schedule) {
  app.add_option("--detector", detector, "acm | asr | mcusum | glr")
      ->check(CLI::IsMember({"acm", "asr", "mcusum", "glr"}))
      ->capture_default_str();
  app.add_option("--dim", c.dimension, "Observation dimension");
  app.add_option("--window", c.window, "Window size w (candidate change points per step: w + 1)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--l1-radius", c.l1_radius, "Radius s of the l1-ball constraint; omit for unconstrained");
  app.add_option("--schedule", schedule, "inverse-count | constant | inverse-sqrt")
      ->check(CLI::IsMember({"inverse-count", "constant", "inverse-sqrt"}))
      ->capture_default_str();
  app.add_option("--step-scale", c.step_scale, "Step schedule scale c")->capture_default_str();
  app.add_option("--mcusum-level", c.mcusum_level, "MCUSUM post-change mean value on every coordinate")
      ->capture_default_str();
  app.add_option("--seed", c.seed, "Master RNG seed")->capture_default_str();
  app.add_option("--workers", c.workers, "Thread cap")->check(CLI::PositiveNumber)->capture_default_str();
}

void add_calibration_flags(CLI::App& app, run_config& c) {
  app.add_option("--replicates", c.replicates, "Monte Carlo replicates")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--max-horizon", c.max_horizon, "Truncation horizon (0: 20x target ARL)")->capture_default_str();
  app.add_option("--tolerance", c.tolerance, "Relative ARL tolerance")->capture_default_str();
}

void add_synthetic_flags(CLI::App& app, run_config& c) {
  app.add_option("--nu", c.change_point, "Change point (number of pre-change samples); omit for a null stream");
  app.add_option("--horizon", c.horizon, "Stream length")->capture_default_str();
  app.add_option("--support", c.support, "Number of shifted coordinates")->capture_default_str();
  app.add_option("--magnitude", c.magnitude, "Shift on each shifted coordinate")->capture_default_str();
}

void add_frame_flags(CLI::App& app, run_config& c, std::string& mode) {
  app.add_option("--frames", c.frames, "Directory of .pgm / .raw frames (lexicographic order)");
  app.add_option("--mode", mode, "real | diffraction")->check(CLI::IsMember({"real", "diffraction"}))->capture_default_str();
  app.add_option("--train", c.training_frames, "Training frames for the baseline")->capture_default_str();
  app.add_option("--bins", c.diffraction.bins, "Histogram bins (diffraction)")->capture_default_str();
  app.add_option("--min-gap", c.diffraction.min_gap_bins, "Minimum gap width in bins (diffraction)")
      ->capture_default_str();
  app.add_option("--hough-rmin", c.diffraction.hough.r_min, "Smallest Hough radius")->capture_default_str();
  app.add_option("--hough-rmax", c.diffraction.hough.r_max, "Largest Hough radius (0: half the frame)")
      ->capture_default_str();
  app.add_option("--ring-min-radius", c.diffraction.ring_min_radius, "Smallest ring radius searched")
      ->capture_default_str();
  app.add_option("--probe-offset", c.diffraction.probe_offset, "Probe radius minus ring radius")->capture_default_str();
  app.add_option("--half-width", c.diffraction.half_width, "Annulus half-width")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse mean-shift change detection for high-dimensional streams"};
  app.require_subcommand(1);

  run_config c;
  std::string detector = "acm";
  std::string schedule = "inverse-count";
  std::string mode = "real";

  auto* detect = app.add_subcommand("detect", "Run a detector over a stream");
  add_detector_flags(*detect, c, detector, schedule);
  add_calibration_flags(*detect, c);
  add_frame_flags(*detect, c, mode);
  add_synthetic_flags(*detect, c);
  detect->add_option("--threshold", c.threshold, "Detection threshold b");
  detect->add_option("--target-arl", c.target_arl, "Calibrate b to this ARL first");
  detect->add_option("--input", c.input, "Observation CSV");
  detect->add_flag("--synthetic", c.synthetic, "Use a generated Gaussian stream");
  detect->add_option("--out", c.out, "Report JSON (default stdout)");
  detect->add_option("--trace", c.trace, "Statistic trace CSV");
  detect->add_option("--trace-every", c.trace_every, "Trace decimation")->capture_default_str();

  auto* calibrate = app.add_subcommand("calibrate", "Calibrate a threshold to a target ARL");
  add_detector_flags(*calibrate, c, detector, schedule);
  add_calibration_flags(*calibrate, c);
  calibrate->add_option("--target-arl", c.target_arl, "Target ARL")->required();
  calibrate->add_option("--edd-replicates", c.edd_replicates, "Also estimate delay under a shift at t=0")
      ->capture_default_str();
  calibrate->add_option("--support", c.support, "Shifted coordinates for the delay estimate")->capture_default_str();
  calibrate->add_option("--magnitude", c.magnitude, "Shift per coordinate for the delay estimate")
      ->capture_default_str();
  calibrate->add_option("--out", c.out, "Result JSON (default stdout)");

  auto* preprocess = app.add_subcommand("preprocess", "Turn frames into observation CSV");
  add_frame_flags(*preprocess, c, mode);
  preprocess->add_option("--out", c.out, "Observation CSV (default stdout)");
  preprocess->add_option("--report", c.sidecar, "Sidecar JSON (default <out>.json)");
  preprocess->add_option("--baseline-out", c.baseline_out, "Persist the fitted baseline");

  auto* simulate = app.add_subcommand("simulate", "Write a synthetic Gaussian stream as CSV");
  simulate->add_option("--dim", c.dimension, "Observation dimension")->required();
  add_synthetic_flags(*simulate, c);
  simulate->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  simulate->add_option("--out", c.out, "Stream CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : config_failure;
  }

  try {
    c.detector = parse_detector_kind(detector);
    c.schedule = parse_schedule_kind(schedule);
    c.mode = mode == "real" ? frame_mode::real : frame_mode::diffraction;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_failure;
  }

  if (*detect) return run_guarded(cmd_detect, c, std::cerr);
  if (*calibrate) return run_guarded(cmd_calibrate, c, std::cerr);
  if (*preprocess) return run_guarded(cmd_preprocess, c, std::cerr);
  return run_guarded(cmd_simulate, c, std::cerr);
}
