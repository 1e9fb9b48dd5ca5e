#pragma once

// Test-only oracles and synthetic image fixtures. Nothing here calls the
// code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "adaptcd/diffraction.hpp"
#include "adaptcd/frame.hpp"
#include "adaptcd/lrcore.hpp"

namespace adaptcd::testing {

/// Euclidean projection onto the l1 ball by enumerating every signed support.
/// Each face of the ball is {u : u_j = 0 off S, sign(u_j) = sigma_j on S,
/// sum sigma_j u_j = s}; the minimizer over a face's affine hull is a shift of
/// v along sigma. The nearest feasible candidate is the projection.
inline Vector brute_force_l1_projection(const Vector& v, double s) {
  const std::size_t d = v.size();
  double l1 = 0;
  for (double x : v) l1 += std::abs(x);
  if (l1 <= s) return v;

  std::size_t patterns = 1;
  for (std::size_t i = 0; i < d; ++i) patterns *= 3;
  Vector best;
  double best_dist = 1e300;
  std::vector<int> sigma(d);
  for (std::size_t code = 0; code < patterns; ++code) {
    std::size_t c = code;
    std::size_t support = 0;
    double projected = 0;
    for (std::size_t i = 0; i < d; ++i) {
      sigma[i] = static_cast<int>(c % 3) - 1;
      c /= 3;
      if (sigma[i] != 0) {
        ++support;
        projected += sigma[i] * v[i];
      }
    }
    if (support == 0) continue;
    const double lambda = (projected - s) / static_cast<double>(support);
    Vector u(d, 0.0);
    bool ok = true;
    for (std::size_t i = 0; i < d && ok; ++i) {
      if (sigma[i] == 0) continue;
      u[i] = v[i] - lambda * sigma[i];
      if (u[i] * sigma[i] < -1e-15) ok = false;
    }
    if (!ok) continue;
    double dist = 0;
    for (std::size_t i = 0; i < d; ++i) dist += (u[i] - v[i]) * (u[i] - v[i]);
    if (dist < best_dist) {
      best_dist = dist;
      best = u;
    }
  }
  return best;
}

inline Vector random_vector(std::mt19937_64& rng, std::size_t d, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vector v(d);
  for (double& x : v) x = n(rng);
  return v;
}

inline std::vector<Vector> random_stream(std::mt19937_64& rng, std::size_t length, std::size_t d,
                                         double shift = 0.0) {
  std::vector<Vector> out;
  for (std::size_t t = 0; t < length; ++t) {
    Vector v = random_vector(rng, d);
    for (double& x : v) x += shift;
    out.push_back(std::move(v));
  }
  return out;
}

/// Plain sum of theta'x - |theta|^2/2 with no blocking.
inline double naive_increment(const Vector& theta, const Vector& x) {
  long double tx = 0, tt = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    tx += static_cast<long double>(theta[i]) * x[i];
    tt += static_cast<long double>(theta[i]) * theta[i];
  }
  return static_cast<double>(tx - tt / 2);
}

/// log Lambda_{k,t} from a stored replay, estimates being running means of
/// X_k..X_{i-1} (unconstrained OMD with 1/i steps). k and t are 1-based.
inline double batch_log_lambda_running_mean(const std::vector<Vector>& xs, std::size_t k, std::size_t t) {
  const std::size_t d = xs.front().size();
  Vector sum(d, 0.0);
  double total = 0;
  for (std::size_t i = k; i <= t; ++i) {
    Vector theta(d, 0.0);
    const std::size_t n = i - k;
    if (n > 0)
      for (std::size_t j = 0; j < d; ++j) theta[j] = sum[j] / static_cast<double>(n);
    total += naive_increment(theta, xs[i - 1]);
    for (std::size_t j = 0; j < d; ++j) sum[j] += xs[i - 1][j];
  }
  return total;
}

/// Naive windowed GLR: recompute every window mean from the stored samples.
inline double naive_glr(const std::vector<Vector>& xs, std::size_t t, std::size_t w) {
  const std::size_t d = xs.front().size();
  const std::size_t k0 = t > w ? t - w : 1;
  double best = -1e300;
  for (std::size_t k = k0; k <= t; ++k) {
    const double n = static_cast<double>(t - k + 1);
    double sq = 0;
    for (std::size_t j = 0; j < d; ++j) {
      double m = 0;
      for (std::size_t i = k; i <= t; ++i) m += xs[i - 1][j];
      m /= n;
      sq += m * m;
    }
    best = std::max(best, n * sq / 2);
  }
  return best;
}

/// One-pixel-thin circle drawn by sampling angles finely and rounding.
inline void draw_circle(binary_image& img, double cx, double cy, double r) {
  const int steps = static_cast<int>(std::ceil(16 * r)) + 16;
  for (int i = 0; i < steps; ++i) {
    const double a = 2 * std::numbers::pi * i / steps;
    const long x = std::lround(cx + r * std::cos(a));
    const long y = std::lround(cy + r * std::sin(a));
    if (x >= 0 && y >= 0 && x < static_cast<long>(img.width) && y < static_cast<long>(img.height))
      img.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
  }
}

/// Frame with background `bg` and rings of given radii / half-widths / levels.
struct ring_spec {
  double radius;
  double half_width;
  double level;
};

inline frame ring_frame(std::size_t w, std::size_t h, double cx, double cy, const std::vector<ring_spec>& rings,
                        double bg = 0.0) {
  frame f(w, h, bg);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double d = std::hypot(x - cx, y - cy);
      for (const auto& r : rings)
        if (std::abs(d - r.radius) <= r.half_width) f.at(x, y) = r.level;
    }
  return f;
}

/// Brightens the annulus pixels whose polar angle lies within half a degree
/// of `degrees` (counterclockwise from +x, image y down).
inline void inject_spot(frame& f, double cx, double cy, double radius, double half_width, double degrees,
                        double level) {
  for (std::size_t y = 0; y < f.height; ++y)
    for (std::size_t x = 0; x < f.width; ++x) {
      const double dx = x - cx, dy = cy - y;
      const double d = std::hypot(dx, dy);
      if (std::abs(d - radius) > half_width) continue;
      double a = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
      double diff = std::fmod(a - degrees + 540.0, 360.0) - 180.0;
      if (std::abs(diff) < 0.5) f.at(x, y) = level;
    }
}

/// Rotates a square frame by 90 degrees counterclockwise about its center pixel.
inline frame rotate90(const frame& f) {
  frame out(f.width, f.height, 0.0);
  const long c = static_cast<long>(f.width / 2);
  for (std::size_t y = 0; y < f.height; ++y)
    for (std::size_t x = 0; x < f.width; ++x) {
      const long dx = static_cast<long>(x) - c, dy = c - static_cast<long>(y);
      // (dx, dy) -> (-dy, dx) in math orientation.
      const long nx = c - dy, ny = c - dx;
      if (nx >= 0 && ny >= 0 && nx < static_cast<long>(f.width) && ny < static_cast<long>(f.height))
        out.at(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny)) = f.at(x, y);
    }
  return out;
}

}  // namespace adaptcd::testing
