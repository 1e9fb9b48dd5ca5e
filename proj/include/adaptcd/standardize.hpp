#pragma once

// Per-pixel standardization against a baseline fitted on the first m frames.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "adaptcd/errors.hpp"
#include "adaptcd/frame.hpp"
#include "adaptcd/lrcore.hpp"

namespace adaptcd {

/// Pixels whose training std falls below this are masked.
inline constexpr double std_floor = 1e-6;

struct baseline {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> mean;
  std::vector<double> std;  // >= std_floor
  std::vector<bool> mask;   // true where the raw std was below std_floor
  std::size_t training_frames = 0;

  std::size_t masked_count() const {
    std::size_t n = 0;
    for (bool m : mask) n += m;
    return n;
  }
};

/// Mean and sample std (denominator m - 1) per pixel, Welford accumulation.
inline baseline standardize_fit(std::span<const frame> training) {
  if (training.size() < 2) throw data_error("baseline needs at least 2 training frames");
  const frame& first = training.front();
  baseline b;
  b.width = first.width;
  b.height = first.height;
  b.training_frames = training.size();
  const std::size_t n = first.size();
  b.mean.assign(n, 0.0);
  std::vector<double> m2(n, 0.0);
  std::size_t count = 0;
  for (const frame& f : training) {
    if (!f.same_shape(first)) throw data_error("training frames differ in shape");
    ++count;
    for (std::size_t i = 0; i < n; ++i) {
      const double delta = f.intensities[i] - b.mean[i];
      b.mean[i] += delta / static_cast<double>(count);
      m2[i] += delta * (f.intensities[i] - b.mean[i]);
    }
  }
  b.std.resize(n);
  b.mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = std::sqrt(m2[i] / static_cast<double>(count - 1));
    b.mask[i] = s < std_floor;
    b.std[i] = b.mask[i] ? std_floor : s;
  }
  return b;
}

/// Row-major (value - mean) / std; masked pixels give 0.
inline Vector standardize_apply(const baseline& b, const frame& f) {
  if (f.width != b.width || f.height != b.height)
    throw data_error("frame " + std::to_string(f.width) + "x" + std::to_string(f.height) +
                     " does not match baseline " + std::to_string(b.width) + "x" + std::to_string(b.height));
  Vector out(f.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = b.mask[i] ? 0.0 : (f.intensities[i] - b.mean[i]) / b.std[i];
  return out;
}

/// Raw float32 layout with header "width height 3": mean, std, mask (0/1).
inline void save_baseline(std::ostream& out, const baseline& b) {
  const std::size_t n = b.width * b.height;
  std::vector<float> values;
  values.reserve(3 * n);
  for (double v : b.mean) values.push_back(static_cast<float>(v));
  for (double v : b.std) values.push_back(static_cast<float>(v));
  for (bool m : b.mask) values.push_back(m ? 1.0f : 0.0f);
  write_raw_payload(out, {b.width, b.height, 3}, values);
}

inline void save_baseline(const std::filesystem::path& path, const baseline& b) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path.string());
  save_baseline(out, b);
}

inline baseline load_baseline(std::istream& in) {
  const raw_header h = read_raw_header(in);
  if (h.count != 3) throw data_error("baseline file must hold 3 arrays");
  const std::vector<float> values = read_raw_payload(in, h);
  const std::size_t n = h.width * h.height;
  baseline b;
  b.width = h.width;
  b.height = h.height;
  b.mean.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n));
  b.std.assign(values.begin() + static_cast<std::ptrdiff_t>(n), values.begin() + static_cast<std::ptrdiff_t>(2 * n));
  b.mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    b.mask[i] = values[2 * n + i] != 0.0f;
    if (!(b.std[i] > 0.0) || !std::isfinite(b.std[i]) || !std::isfinite(b.mean[i]))
      throw data_error("baseline holds an invalid entry at pixel " + std::to_string(i));
  }
  return b;
}

inline baseline load_baseline(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  return load_baseline(in);
}

}  // namespace adaptcd
