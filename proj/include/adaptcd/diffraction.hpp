#pragma once

// Diffraction-frame background analysis: intensity histogram gaps split the
// concentric rings into brightness bands, circle Hough voting on each band
// locates the common ring center, a radial profile finds the outermost ring,
// and a 360-bin angular signal is read just outside it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "adaptcd/errors.hpp"
#include "adaptcd/frame.hpp"

namespace adaptcd {

/// Intensity interval [lo, hi); closed on the right when hi == 1.
struct intensity_interval {
  double lo = 0.0;
  double hi = 1.0;

  bool contains(double v) const noexcept { return (v >= lo && v < hi) || (hi >= 1.0 && v == hi); }
  friend bool operator==(const intensity_interval&, const intensity_interval&) = default;
};

/// Bin j counts intensities in [j/bins, (j+1)/bins); the last bin is closed.
inline std::vector<std::size_t> intensity_histogram(const frame& f, std::size_t bins) {
  if (bins < 2) throw config_error("histogram needs at least 2 bins");
  std::vector<std::size_t> counts(bins, 0);
  const double scale = static_cast<double>(bins);
  for (double v : f.intensities) {
    const auto j = static_cast<std::size_t>(std::clamp(v, 0.0, 1.0) * scale);
    ++counts[std::min(j, bins - 1)];
  }
  return counts;
}

/// Maximal runs of empty bins at least `min_width` bins long, as intensity
/// intervals in increasing order.
inline std::vector<intensity_interval> find_gaps(std::span<const std::size_t> counts, std::size_t min_width) {
  std::vector<intensity_interval> gaps;
  const double bins = static_cast<double>(counts.size());
  std::size_t j = 0;
  while (j < counts.size()) {
    if (counts[j] != 0) {
      ++j;
      continue;
    }
    std::size_t end = j;
    while (end < counts.size() && counts[end] == 0) ++end;
    if (end - j >= std::max<std::size_t>(1, min_width))
      gaps.push_back({static_cast<double>(j) / bins, static_cast<double>(end) / bins});
    j = end;
  }
  return gaps;
}

/// Complement of `gaps` in [0, 1], dropping pieces with no histogram mass.
inline std::vector<intensity_interval> bands_between_gaps(std::span<const std::size_t> counts,
                                                          std::span<const intensity_interval> gaps) {
  std::vector<intensity_interval> pieces;
  double lo = 0.0;
  for (const auto& g : gaps) {
    if (g.lo > lo) pieces.push_back({lo, g.lo});
    lo = g.hi;
  }
  if (lo < 1.0) pieces.push_back({lo, 1.0});

  const double bins = static_cast<double>(counts.size());
  std::vector<intensity_interval> bands;
  for (const auto& p : pieces) {
    const auto first = static_cast<std::size_t>(std::lround(p.lo * bins));
    const auto last = static_cast<std::size_t>(std::lround(p.hi * bins));
    std::size_t mass = 0;
    for (std::size_t j = first; j < last && j < counts.size(); ++j) mass += counts[j];
    if (mass > 0) bands.push_back(p);
  }
  return bands;
}

struct binary_image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  binary_image() = default;
  binary_image(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h, 0) {}

  bool at(std::size_t x, std::size_t y) const { return pixels[y * width + x] != 0; }
  void set(std::size_t x, std::size_t y, bool v = true) { pixels[y * width + x] = v ? 1 : 0; }
  std::size_t count() const {
    return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), std::uint8_t{1}));
  }
};

inline binary_image band_threshold(const frame& f, const intensity_interval& band) {
  if (!(band.hi > band.lo)) throw config_error("empty intensity interval");
  if (band.lo < 0.0 || band.hi > 1.0) throw config_error("intensity interval outside [0, 1]");
  binary_image out(f.width, f.height);
  for (std::size_t i = 0; i < f.size(); ++i) out.pixels[i] = band.contains(f.intensities[i]) ? 1 : 0;
  return out;
}

struct point {
  double x = 0.0;
  double y = 0.0;
};

struct hough_params {
  std::size_t r_min = 5;
  std::size_t r_max = 0;  // 0: min(width, height) / 2
  std::size_t step = 1;
};

struct hough_result {
  point center;
  std::size_t radius = 0;
  std::size_t votes = 0;
};

/// Offsets (dx, dy) with round(|(dx, dy)|) == r.
inline std::vector<std::array<int, 2>> circle_offsets(std::size_t r) {
  std::vector<std::array<int, 2>> out;
  const double lo = (static_cast<double>(r) - 0.5) * (static_cast<double>(r) - 0.5);
  const double hi = (static_cast<double>(r) + 0.5) * (static_cast<double>(r) + 0.5);
  const int ri = static_cast<int>(r) + 1;
  for (int dy = -ri; dy <= ri; ++dy)
    for (int dx = -ri; dx <= ri; ++dx) {
      const double d2 = static_cast<double>(dx * dx + dy * dy);
      if (d2 >= lo && d2 < hi) out.push_back({dx, dy});
    }
  return out;
}

/// Circle Hough transform. Every true pixel votes for each grid center lying
/// at distance r from it, for every candidate radius; the accumulator maximum
/// wins, ties going to the smallest (r, cy, cx).
inline hough_result hough_circle_center(const binary_image& img, hough_params params) {
  if (params.step == 0) throw config_error("Hough quantization step must be at least 1");
  if (params.r_min == 0) throw config_error("Hough r_min must be at least 1");
  const std::size_t half = std::min(img.width, img.height) / 2;
  if (params.r_max == 0) params.r_max = half;
  if (params.r_max > half) throw config_error("Hough r_max exceeds half the image extent");
  if (params.r_max < params.r_min) throw config_error("Hough radius range is empty");
  if (img.count() == 0) throw data_error("Hough transform on an empty binary image");

  const std::size_t step = params.step;
  const std::size_t nx = (img.width - 1) / step + 1;
  const std::size_t ny = (img.height - 1) / step + 1;
  std::vector<std::size_t> radii;
  for (std::size_t r = params.r_min; r <= params.r_max; r += step) radii.push_back(r);

  std::vector<std::uint32_t> acc(radii.size() * nx * ny, 0);
  std::vector<std::array<int, 2>> on;
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      if (img.at(x, y)) on.push_back({static_cast<int>(x), static_cast<int>(y)});

  const auto w = static_cast<long>(img.width);
  const auto h = static_cast<long>(img.height);
  const auto s = static_cast<long>(step);
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    const auto offsets = circle_offsets(radii[ri]);
    std::uint32_t* plane = acc.data() + ri * nx * ny;
    for (const auto& p : on)
      for (const auto& o : offsets) {
        const long cx = p[0] + o[0];
        const long cy = p[1] + o[1];
        if (cx < 0 || cy < 0 || cx >= w || cy >= h) continue;
        const auto gx = static_cast<std::size_t>((cx + s / 2) / s);
        const auto gy = static_cast<std::size_t>((cy + s / 2) / s);
        if (gx >= nx || gy >= ny) continue;
        ++plane[gy * nx + gx];
      }
  }

  hough_result best;
  std::uint32_t best_votes = 0;
  bool found = false;
  for (std::size_t ri = 0; ri < radii.size(); ++ri)
    for (std::size_t gy = 0; gy < ny; ++gy)
      for (std::size_t gx = 0; gx < nx; ++gx) {
        const std::uint32_t v = acc[(ri * ny + gy) * nx + gx];
        if (!found || v > best_votes) {
          found = true;
          best_votes = v;
          best.center = {static_cast<double>(gx * step), static_cast<double>(gy * step)};
          best.radius = radii[ri];
        }
      }
  best.votes = best_votes;
  return best;
}

inline point average_centers(std::span<const point> centers) {
  if (centers.empty()) throw data_error("no centers to average");
  point m;
  for (const auto& c : centers) {
    m.x += c.x;
    m.y += c.y;
  }
  m.x /= static_cast<double>(centers.size());
  m.y /= static_cast<double>(centers.size());
  return m;
}

class no_ring_found : public data_error {
 public:
  no_ring_found() : data_error("no ring found in radial profile") {}
};

/// Mean intensity of each integer-radius annulus (width 1) around `center`.
/// Entry r is NaN where the annulus holds no pixel.
inline std::vector<double> radial_profile(const frame& f, point center) {
  std::vector<double> sums;
  std::vector<std::size_t> counts;
  for (std::size_t y = 0; y < f.height; ++y)
    for (std::size_t x = 0; x < f.width; ++x) {
      const double d = std::hypot(static_cast<double>(x) - center.x, static_cast<double>(y) - center.y);
      const auto r = static_cast<std::size_t>(std::lround(d));
      if (r >= sums.size()) {
        sums.resize(r + 1, 0.0);
        counts.resize(r + 1, 0);
      }
      sums[r] += f.at(x, y);
      ++counts[r];
    }
  std::vector<double> profile(sums.size());
  for (std::size_t r = 0; r < sums.size(); ++r)
    profile[r] = counts[r] ? sums[r] / static_cast<double>(counts[r]) : std::numeric_limits<double>::quiet_NaN();
  return profile;
}

namespace detail {
inline double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace detail

/// Largest radius >= min_radius whose profile value is a local maximum above
/// median + 2 * MAD of the searched profile. Only annuli lying wholly inside
/// the frame are searched. A flat-topped peak reports the middle of its
/// plateau.
inline std::size_t largest_ring_radius(const frame& f, point center, std::size_t min_radius) {
  if (min_radius == 0) throw config_error("minimum ring radius must be at least 1");
  if (center.x < 0.0 || center.y < 0.0 || center.x > static_cast<double>(f.width - 1) ||
      center.y > static_cast<double>(f.height - 1))
    throw config_error("ring center outside the frame");

  std::vector<double> profile = radial_profile(f, center);
  const double inner_extent = std::min({center.x, center.y, static_cast<double>(f.width - 1) - center.x,
                                        static_cast<double>(f.height - 1) - center.y});
  profile.resize(std::min(profile.size(), static_cast<std::size_t>(std::floor(inner_extent)) + 1));
  std::vector<double> searched;
  for (std::size_t r = min_radius; r < profile.size(); ++r)
    if (!std::isnan(profile[r])) searched.push_back(profile[r]);
  if (searched.size() < 3) throw no_ring_found();

  const double med = detail::median_of(searched);
  std::vector<double> dev(searched.size());
  std::transform(searched.begin(), searched.end(), dev.begin(), [med](double v) { return std::abs(v - med); });
  const double cutoff = med + 2.0 * detail::median_of(dev) + 1e-9 * std::max(1.0, std::abs(med));

  auto value = [&](std::size_t r) { return std::isnan(profile[r]) ? -std::numeric_limits<double>::infinity() : profile[r]; };
  std::optional<std::size_t> found;
  std::size_t a = min_radius;
  const std::size_t end = profile.size();
  while (a < end) {
    std::size_t b = a;
    while (b + 1 < end && value(b + 1) == value(a)) ++b;
    const bool left_ok = a > min_radius && value(a - 1) < value(a);
    const bool right_ok = b + 1 == end || value(b + 1) < value(b);
    if (left_ok && right_ok && value(a) > cutoff) found = (a + b) / 2;
    a = b + 1;
  }
  if (!found) throw no_ring_found();
  return *found;
}

/// Mean annulus intensity per integer degree, counterclockwise from +x with
/// image y pointing down. Degrees without pixels take the annulus mean and
/// are flagged in `empty`.
struct polar_signal {
  std::array<double, 360> values{};
  std::array<bool, 360> empty{};

  std::size_t argmax() const {
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
  }
};

inline polar_signal angular_signal(const frame& f, point center, double radius, double half_width) {
  if (!(radius > 0.0) || !(half_width >= 0.0) || !std::isfinite(radius) || !std::isfinite(half_width))
    throw config_error("annulus radius must be positive and half-width non-negative");
  const double outer = radius + half_width;
  if (center.x - outer < 0.0 || center.y - outer < 0.0 || center.x + outer > static_cast<double>(f.width - 1) ||
      center.y + outer > static_cast<double>(f.height - 1))
    throw data_error("annulus outside frame");

  std::array<double, 360> sums{};
  std::array<std::size_t, 360> counts{};
  double total = 0.0;
  std::size_t total_count = 0;
  const auto x0 = static_cast<std::size_t>(std::floor(center.x - outer));
  const auto x1 = static_cast<std::size_t>(std::ceil(center.x + outer));
  const auto y0 = static_cast<std::size_t>(std::floor(center.y - outer));
  const auto y1 = static_cast<std::size_t>(std::ceil(center.y + outer));
  for (std::size_t y = y0; y <= y1; ++y)
    for (std::size_t x = x0; x <= x1; ++x) {
      const double dx = static_cast<double>(x) - center.x;
      const double dy = center.y - static_cast<double>(y);
      const double d = std::hypot(dx, dy);
      if (d < radius - half_width || d > radius + half_width) continue;
      const double deg = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
      long a = std::lround(deg) % 360;
      if (a < 0) a += 360;
      sums[static_cast<std::size_t>(a)] += f.at(x, y);
      ++counts[static_cast<std::size_t>(a)];
      total += f.at(x, y);
      ++total_count;
    }
  if (total_count == 0) throw data_error("annulus contains no pixels");

  polar_signal out;
  const double annulus_mean = total / static_cast<double>(total_count);
  for (std::size_t a = 0; a < 360; ++a) {
    out.empty[a] = counts[a] == 0;
    out.values[a] = counts[a] ? sums[a] / static_cast<double>(counts[a]) : annulus_mean;
  }
  return out;
}

struct diffraction_config {
  std::size_t bins = 256;
  std::size_t min_gap_bins = 3;
  /// Drop the darkest band (beam-stop shadow) before center voting.
  bool skip_darkest_band = true;
  hough_params hough{};
  std::size_t ring_min_radius = 5;
  double probe_offset = 3.0;
  double half_width = 2.0;
};

struct diffraction_geometry {
  std::vector<intensity_interval> bands;
  std::vector<hough_result> band_centers;
  point center;
  std::size_t ring_radius = 0;
  double probe_radius = 0.0;
};

/// Ring center (average of one Hough center per usable band), outermost ring
/// radius and probe radius, estimated on one reference frame.
inline diffraction_geometry fit_diffraction_geometry(const frame& f, const diffraction_config& cfg) {
  diffraction_geometry g;
  const auto counts = intensity_histogram(f, cfg.bins);
  const auto gaps = find_gaps(counts, cfg.min_gap_bins);
  g.bands = bands_between_gaps(counts, gaps);

  std::vector<point> centers;
  const std::size_t first = cfg.skip_darkest_band && g.bands.size() > 1 ? 1 : 0;
  for (std::size_t i = first; i < g.bands.size(); ++i) {
    const binary_image mask = band_threshold(f, g.bands[i]);
    if (mask.count() == 0) continue;
    const hough_result r = hough_circle_center(mask, cfg.hough);
    g.band_centers.push_back(r);
    centers.push_back(r.center);
  }
  if (centers.empty()) throw data_error("no band produced a Hough center");
  g.center = average_centers(centers);
  g.ring_radius = largest_ring_radius(f, g.center, cfg.ring_min_radius);
  g.probe_radius = static_cast<double>(g.ring_radius) + cfg.probe_offset;
  return g;
}

inline polar_signal extract_polar_signal(const frame& f, const diffraction_geometry& g,
                                         const diffraction_config& cfg) {
  return angular_signal(f, g.center, g.probe_radius, cfg.half_width);
}

}  // namespace adaptcd
