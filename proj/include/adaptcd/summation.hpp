#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>

namespace adaptcd {

namespace detail {
inline constexpr std::size_t pairwise_block = 128;
}

/// Pairwise (cascade) summation of K parallel accumulators.
///
/// `term(i)` returns a std::array<double, K> contribution for index i. The
/// split points depend only on the range length, so results are bit-stable
/// for a given input regardless of the caller. Error grows as O(log n).
template <std::size_t K, class Term>
std::array<double, K> pairwise_accumulate(std::size_t first, std::size_t last, Term&& term) {
  std::array<double, K> acc{};
  const std::size_t n = last - first;
  if (n <= detail::pairwise_block) {
    // Four interleaved lanes, combined as (l0 + l1) + (l2 + l3).
    std::array<std::array<double, K>, 4> lanes{};
    std::size_t i = first;
    for (; i + 4 <= last; i += 4) {
      const std::array<double, K> t0 = term(i);
      const std::array<double, K> t1 = term(i + 1);
      const std::array<double, K> t2 = term(i + 2);
      const std::array<double, K> t3 = term(i + 3);
      for (std::size_t k = 0; k < K; ++k) {
        lanes[0][k] += t0[k];
        lanes[1][k] += t1[k];
        lanes[2][k] += t2[k];
        lanes[3][k] += t3[k];
      }
    }
    for (std::size_t lane = 0; i < last; ++i, ++lane) {
      const std::array<double, K> t = term(i);
      for (std::size_t k = 0; k < K; ++k) lanes[lane][k] += t[k];
    }
    for (std::size_t k = 0; k < K; ++k) acc[k] = (lanes[0][k] + lanes[1][k]) + (lanes[2][k] + lanes[3][k]);
    return acc;
  }
  const std::size_t mid = first + n / 2;
  const auto lhs = pairwise_accumulate<K>(first, mid, term);
  const auto rhs = pairwise_accumulate<K>(mid, last, term);
  for (std::size_t k = 0; k < K; ++k) acc[k] = lhs[k] + rhs[k];
  return acc;
}

inline double pairwise_sum(std::span<const double> v) {
  return pairwise_accumulate<1>(0, v.size(), [v](std::size_t i) {
    return std::array<double, 1>{v[i]};
  })[0];
}

inline double squared_norm(std::span<const double> v) {
  return pairwise_accumulate<1>(0, v.size(), [v](std::size_t i) {
    return std::array<double, 1>{v[i] * v[i]};
  })[0];
}

inline double l1_norm(std::span<const double> v) {
  return pairwise_accumulate<1>(0, v.size(), [v](std::size_t i) {
    return std::array<double, 1>{std::abs(v[i])};
  })[0];
}

/// Caller guarantees equal lengths.
inline double dot(std::span<const double> a, std::span<const double> b) {
  return pairwise_accumulate<1>(0, a.size(), [a, b](std::size_t i) {
    return std::array<double, 1>{a[i] * b[i]};
  })[0];
}

}  // namespace adaptcd
