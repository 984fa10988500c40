#include "mkmh/kmeans.hpp"

#include <fstream>
#include <limits>
#include <numeric>

#include "binio.hpp"
#include "mkmh/parallel.hpp"
#include "mkmh/random.hpp"

namespace mkmh {

namespace {

constexpr std::uint32_t kCodebookVersion = 1;

void validate_seeding(const VectorSet& data, std::size_t k) {
  if (k < 2) throw std::invalid_argument("k-means: k must be at least 2");
  if (data.size() < k) {
    throw std::invalid_argument("k-means: need at least k=" + std::to_string(k) +
                                " points, got " + std::to_string(data.size()));
  }
}

struct Assignment {
  std::vector<std::uint32_t> cluster;
  std::vector<double> sqdist;
};

void assign_all(const VectorSet& data, const VectorSet& centroids, Assignment& out) {
  out.cluster.resize(data.size());
  out.sqdist.resize(data.size());
  parallel_for(data.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t arg = 0;
      for (std::size_t j = 0; j < centroids.size(); ++j) {
        const double d = squared_euclidean_distance(data[i], centroids[j]);
        if (d < best) {
          best = d;
          arg = static_cast<std::uint32_t>(j);
        }
      }
      out.cluster[i] = arg;
      out.sqdist[i] = best;
    }
  });
}

double sum_sequential(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

Codebook::Codebook(VectorSet centroids, TrainMeta meta)
    : centroids_(std::move(centroids)), meta_(std::move(meta)) {
  if (centroids_.size() < 2) {
    throw std::invalid_argument("Codebook: at least two centroids are required");
  }
}

VectorSet kmeanspp_seed(const VectorSet& data, std::size_t k, std::uint64_t seed) {
  validate_seeding(data, k);
  const std::size_t n = data.size();
  Rng rng(seed);

  std::vector<char> chosen(n, 0);
  std::vector<double> mind2(n);
  VectorSet seeds(data.dim());
  seeds.reserve(k);

  auto take = [&](std::size_t idx) {
    chosen[idx] = 1;
    seeds.append(data[idx]);
    const VectorView c = data[idx];
    for (std::size_t i = 0; i < n; ++i) {
      const double d = chosen[i] ? 0.0 : squared_euclidean_distance(data[i], c);
      mind2[i] = seeds.size() == 1 ? d : std::min(mind2[i], d);
    }
  };

  take(static_cast<std::size_t>(rng.index(n)));
  while (seeds.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += mind2[i];

    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      std::size_t last_positive = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (mind2[i] <= 0.0) continue;
        last_positive = i;
        cum += mind2[i];
        if (cum > target) {
          pick = i;
          break;
        }
      }
      if (pick == n) pick = last_positive;
    } else {
      std::size_t remaining = 0;
      for (char c : chosen) remaining += c ? 0 : 1;
      std::size_t r = static_cast<std::size_t>(rng.index(remaining));
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        if (r-- == 0) {
          pick = i;
          break;
        }
      }
    }
    take(pick);
  }
  return seeds;
}

double objective(const VectorSet& data, const VectorSet& centroids) {
  if (data.empty()) throw std::invalid_argument("objective: empty data");
  if (centroids.empty()) throw std::invalid_argument("objective: no centroids");
  if (data.dim() != centroids.dim()) {
    throw std::invalid_argument("objective: data and centroid dimensions differ");
  }
  Assignment a;
  assign_all(data, centroids, a);
  return sum_sequential(a.sqdist);
}

std::size_t nearest_centroid(VectorView x, const VectorSet& centroids) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    const double d = squared_euclidean_distance(x, centroids[j]);
    if (d < best) {
      best = d;
      arg = j;
    }
  }
  return arg;
}

Codebook train(const VectorSet& data, std::size_t k, const TrainParams& params) {
  if (params.max_iters < 1) throw std::invalid_argument("train: max_iters must be >= 1");
  if (params.rel_tol < 0.0) throw std::invalid_argument("train: rel_tol must be >= 0");

  VectorSet centroids = kmeanspp_seed(data, k, params.seed);
  const std::size_t n = data.size();
  const std::size_t dim = data.dim();

  TrainMeta meta;
  meta.seed = params.seed;

  Assignment a;
  assign_all(data, centroids, a);
  double prev = sum_sequential(a.sqdist);
  meta.objective_history.push_back(prev);

  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);

  for (std::size_t iter = 1; iter <= params.max_iters; ++iter) {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = a.cluster[i];
      ++counts[c];
      const VectorView x = data[i];
      double* s = sums.data() + c * dim;
      for (std::size_t d = 0; d < dim; ++d) s[d] += x[d];
    }

    std::vector<std::size_t> empty;
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] == 0) {
        empty.push_back(j);
        continue;
      }
      auto row = centroids.mutable_row(j);
      const double inv = 1.0 / static_cast<double>(counts[j]);
      for (std::size_t d = 0; d < dim; ++d) {
        row[d] = static_cast<float>(sums[j * dim + d] * inv);
      }
    }

    if (!empty.empty()) {
      // Distances to the updated centroid of each point's own cluster.
      std::vector<double> own(n);
      for (std::size_t i = 0; i < n; ++i) {
        own[i] = squared_euclidean_distance(data[i], centroids[a.cluster[i]]);
      }
      for (std::size_t j : empty) {
        std::size_t far = 0;
        for (std::size_t i = 1; i < n; ++i) {
          if (own[i] > own[far]) far = i;
        }
        auto row = centroids.mutable_row(j);
        std::copy(data[far].begin(), data[far].end(), row.begin());
        own[far] = 0.0;
        a.cluster[far] = static_cast<std::uint32_t>(j);
      }
    }

    assign_all(data, centroids, a);
    const double cur = sum_sequential(a.sqdist);
    meta.objective_history.push_back(cur);
    meta.iterations = iter;

    const bool converged = (prev - cur) <= params.rel_tol * prev;
    prev = cur;
    if (converged) break;
  }
  meta.objective = prev;
  return Codebook(std::move(centroids), std::move(meta));
}

std::vector<double> distances_to_centroids(VectorView x, const Codebook& cb) {
  if (x.size() != cb.dim()) {
    throw std::invalid_argument("distances_to_centroids: vector dimension " +
                                std::to_string(x.size()) + " does not match codebook dimension " +
                                std::to_string(cb.dim()));
  }
  std::vector<double> out(cb.k());
  for (std::size_t j = 0; j < cb.k(); ++j) out[j] = euclidean_distance(x, cb.centroid(j));
  return out;
}

// ----------------------------------------------------------------------------

void write_codebook(std::ostream& os, const Codebook& cb) {
  binio::put_magic(os, "MKMC");
  binio::put_le<std::uint32_t>(os, kCodebookVersion);
  binio::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(cb.k()));
  binio::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(cb.dim()));
  binio::put_le<std::uint64_t>(os, cb.meta().seed);
  for (float v : cb.centroids().data()) binio::put_f32(os, v);
}

Codebook read_codebook(std::istream& is) {
  binio::Reader r(is);
  r.expect_magic("MKMC");
  const std::int64_t at_version = r.offset();
  const auto version = r.get_le<std::uint32_t>("codebook version");
  if (version != kCodebookVersion) {
    throw FormatError("unsupported codebook version " + std::to_string(version), at_version);
  }
  const std::int64_t at_k = r.offset();
  const auto k = r.get_le<std::uint32_t>("codebook k");
  const auto dim = r.get_le<std::uint32_t>("codebook dim");
  if (k < 2 || dim == 0) {
    throw FormatError("invalid codebook shape k=" + std::to_string(k) +
                          " dim=" + std::to_string(dim),
                      at_k);
  }
  TrainMeta meta;
  meta.seed = r.get_le<std::uint64_t>("codebook seed");
  std::vector<float> values(static_cast<std::size_t>(k) * dim);
  for (auto& v : values) {
    const std::int64_t at = r.offset();
    v = r.get_f32("codebook centroid");
    if (!std::isfinite(v)) throw FormatError("non-finite centroid component", at);
  }
  return Codebook(VectorSet(dim, std::move(values)), std::move(meta));
}

void save_codebook(const std::string& path, const Codebook& cb) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  write_codebook(os, cb);
  if (!os) throw DataError("write failed: " + path);
}

Codebook load_codebook(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  return read_codebook(is);
}

}  // namespace mkmh
