#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mkmh/core.hpp"

namespace mkmh {

struct TrainParams {
  std::size_t max_iters = 100;
  double rel_tol = 1e-4;
  std::uint64_t seed = 0;
};

struct TrainMeta {
  std::size_t iterations = 0;
  double objective = 0.0;
  std::uint64_t seed = 0;
  /// Objective at the seeds followed by the objective after each iteration.
  std::vector<double> objective_history;
};

/**
 * k centroids of one dimension. Centroid j owns hash bit j, so the order of
 * centroids is part of the quantizer's identity.
 */
class Codebook {
 public:
  Codebook() = default;
  /// Throws std::invalid_argument when fewer than two centroids are given.
  explicit Codebook(VectorSet centroids, TrainMeta meta = {});

  std::size_t k() const noexcept { return centroids_.size(); }
  std::size_t dim() const noexcept { return centroids_.dim(); }
  const VectorSet& centroids() const noexcept { return centroids_; }
  VectorView centroid(std::size_t j) const { return centroids_[j]; }
  const TrainMeta& meta() const noexcept { return meta_; }

  bool operator==(const Codebook& o) const { return centroids_ == o.centroids_; }

 private:
  VectorSet centroids_;
  TrainMeta meta_;
};

/// k-means++ D^2 seeding. The first seed is uniform over the data; each
/// further seed is drawn with probability proportional to its squared distance
/// to the closest seed chosen so far. Returned rows are distinct data rows.
/// When every remaining point coincides with a chosen seed (all weights zero)
/// the next seed is drawn uniformly from the rows not yet chosen.
VectorSet kmeanspp_seed(const VectorSet& data, std::size_t k, std::uint64_t seed);

/// Sum over points of the squared distance to the nearest centroid.
double objective(const VectorSet& data, const VectorSet& centroids);

/// Index of the nearest centroid; ties go to the lowest index.
std::size_t nearest_centroid(VectorView x, const VectorSet& centroids);

/**
 * Lloyd iterations from k-means++ seeds.
 *
 * Stops when the relative objective improvement of an iteration falls below
 * params.rel_tol or after params.max_iters iterations. A cluster left empty by
 * an assignment step is moved onto the point that is currently farthest from
 * its own centroid, so k never shrinks.
 */
Codebook train(const VectorSet& data, std::size_t k, const TrainParams& params);

/// Euclidean distances from x to each centroid, index-aligned.
std::vector<double> distances_to_centroids(VectorView x, const Codebook& cb);

// Binary record: "MKMC", u32 version, u32 k, u32 dim, u64 seed, k*dim f32.
void write_codebook(std::ostream& os, const Codebook& cb);
Codebook read_codebook(std::istream& is);
void save_codebook(const std::string& path, const Codebook& cb);
Codebook load_codebook(const std::string& path);

}  // namespace mkmh
