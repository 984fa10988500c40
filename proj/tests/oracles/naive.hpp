#pragma once

// Reference implementations written straight from the definitions. They share
// no code with the library beyond the container types, and favour clarity over
// speed.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "mkmh/core.hpp"

namespace mkmh::oracle {

inline double l2(VectorView a, VectorView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

inline std::vector<double> distances(VectorView x, const VectorSet& centroids) {
  std::vector<double> d;
  for (std::size_t j = 0; j < centroids.size(); ++j) d.push_back(l2(x, centroids[j]));
  return d;
}

/// Bit j set iff d_j <= delta, delta the arithmetic or geometric mean.
inline std::vector<bool> threshold_bits(const std::vector<double>& d, bool geometric) {
  const double k = static_cast<double>(d.size());
  double delta;
  if (geometric) {
    if (*std::min_element(d.begin(), d.end()) == 0.0) {
      delta = 0.0;
    } else {
      double logs = 0.0;
      for (double v : d) logs += std::log(v);
      delta = std::exp(logs / k);
    }
  } else {
    delta = std::accumulate(d.begin(), d.end(), 0.0) / k;
  }
  // The nearest centroid always passes; the mean of equal values is that value.
  const double lo = *std::min_element(d.begin(), d.end());
  const double hi = *std::max_element(d.begin(), d.end());
  delta = std::min(std::max(delta, lo), hi);
  std::vector<bool> bits(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) bits[j] = d[j] <= delta;
  return bits;
}

/// Bits of the n nearest centroids, equal distances ordered by index.
inline std::vector<bool> nearest_bits(const std::vector<double>& d, std::size_t n) {
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t j = 0; j < d.size(); ++j) order.emplace_back(d[j], j);
  std::sort(order.begin(), order.end());
  std::vector<bool> bits(d.size());
  for (std::size_t r = 0; r < n; ++r) bits[order[r].second] = true;
  return bits;
}

inline std::vector<bool> to_bits(const HashCode& c) {
  std::vector<bool> bits(c.length());
  for (std::size_t j = 0; j < c.length(); ++j) bits[j] = c.test(j);
  return bits;
}

inline std::size_t hamming(const HashCode& a, const HashCode& b) {
  std::size_t h = 0;
  for (std::size_t j = 0; j < a.length(); ++j) h += a.test(j) != b.test(j) ? 1 : 0;
  return h;
}

/// First L positions of a full sort by (hamming, id).
inline std::vector<std::uint64_t> shortlist(const std::vector<HashCode>& codes,
                                            const std::vector<std::uint64_t>& ids,
                                            const HashCode& q, std::size_t L) {
  std::vector<std::pair<std::size_t, std::uint64_t>> all;
  for (std::size_t i = 0; i < codes.size(); ++i) all.emplace_back(hamming(codes[i], q), ids[i]);
  std::sort(all.begin(), all.end());
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < L; ++i) out.push_back(all[i].second);
  return out;
}

/// Exact K nearest base rows by Euclidean distance, ties by row.
inline std::vector<std::pair<double, std::uint64_t>> knn(const VectorSet& base, VectorView q,
                                                         std::size_t K) {
  std::vector<std::pair<double, std::uint64_t>> all;
  for (std::size_t i = 0; i < base.size(); ++i) all.emplace_back(l2(q, base[i]), i);
  std::sort(all.begin(), all.end());
  all.resize(K);
  return all;
}

}  // namespace mkmh::oracle
