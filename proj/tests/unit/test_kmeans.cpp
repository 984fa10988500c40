#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "mkmh/kmeans.hpp"
#include "mkmh/random.hpp"
#include "unit/test_support.hpp"

using namespace mkmh;

namespace {

double naive_objective(const VectorSet& data, const VectorSet& c) {
  double total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c.size(); ++j) {
      double s = 0;
      for (std::size_t d = 0; d < data.dim(); ++d) {
        const double diff = static_cast<double>(data[i][d]) - c[j][d];
        s += diff * diff;
      }
      best = std::min(best, s);
    }
    total += best;
  }
  return total;
}

std::vector<float> row_of(const VectorSet& s, std::size_t i) { return {s[i].begin(), s[i].end()}; }

VectorSet tight_clusters(std::size_t k, std::size_t per, std::size_t dim, double spread,
                         std::uint64_t seed, VectorSet* means = nullptr) {
  Rng rng(seed);
  VectorSet data(dim);
  if (means) *means = VectorSet(dim);
  std::vector<float> centre(dim), x(dim);
  for (std::size_t c = 0; c < k; ++c) {
    for (auto& v : centre) v = static_cast<float>(20.0 * rng.uniform() - 10.0);
    std::vector<double> acc(dim, 0.0);
    for (std::size_t p = 0; p < per; ++p) {
      for (std::size_t d = 0; d < dim; ++d) {
        x[d] = static_cast<float>(centre[d] + spread * rng.normal());
        acc[d] += x[d];
      }
      data.append(x);
    }
    if (means) {
      std::vector<float> m(dim);
      for (std::size_t d = 0; d < dim; ++d) m[d] = static_cast<float>(acc[d] / per);
      means->append(m);
    }
  }
  return data;
}

}  // namespace

TEST(KmeansppSeed, ErrorsOnBadK) {
  const auto data = test::random_vectors(5, 2, 1);
  EXPECT_THROW(kmeanspp_seed(data, 1, 0), std::invalid_argument);
  EXPECT_THROW(kmeanspp_seed(data, 6, 0), std::invalid_argument);
}

TEST(KmeansppSeed, ForcedSelectionReturnsAllPoints) {
  const auto data = test::random_vectors(6, 3, 2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto seeds = kmeanspp_seed(data, 6, seed);
    std::set<std::vector<float>> got, want;
    for (std::size_t i = 0; i < 6; ++i) {
      got.insert(row_of(seeds, i));
      want.insert(row_of(data, i));
    }
    EXPECT_EQ(got, want);
  }
}

TEST(KmeansppSeed, DistinctRowsEvenWithDuplicates) {
  VectorSet data(1);
  for (float x : {0.0F, 0.0F, 0.0F, 1.0F}) data.append(std::vector<float>{x});
  const auto seeds = kmeanspp_seed(data, 3, 4);
  ASSERT_EQ(seeds.size(), 3U);
}

TEST(KmeansppSeed, Deterministic) {
  const auto data = test::random_vectors(200, 8, 3);
  EXPECT_EQ(kmeanspp_seed(data, 10, 77), kmeanspp_seed(data, 10, 77));
  EXPECT_FALSE(kmeanspp_seed(data, 10, 77) == kmeanspp_seed(data, 10, 78));
}

TEST(KmeansppSeed, OutlierFrequencyMatchesD2Probability) {
  // 20 points near the origin, one far outlier at index 20.
  const std::size_t n = 21;
  VectorSet data(2);
  Rng rng(123);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    data.append(std::vector<float>{static_cast<float>(rng.normal()), static_cast<float>(rng.normal())});
  }
  const std::vector<float> outlier{15.0F, 15.0F};
  data.append(outlier);
  const std::size_t o = n - 1;

  // Exact probability that the outlier is one of the two seeds.
  double p = 1.0 / n;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == o) continue;
    double total = 0;
    for (std::size_t j = 0; j < n; ++j) total += squared_euclidean_distance(data[j], data[i]);
    p += (1.0 / n) * squared_euclidean_distance(data[o], data[i]) / total;
  }
  ASSERT_GT(p, 5.0 / n);

  const int runs = 1000;
  int hits = 0;
  for (int s = 0; s < runs; ++s) {
    const auto seeds = kmeanspp_seed(data, 2, static_cast<std::uint64_t>(s));
    for (std::size_t j = 0; j < 2; ++j) {
      if (row_of(seeds, j) == outlier) ++hits;
    }
  }
  const double freq = static_cast<double>(hits) / runs;
  const double sigma = std::sqrt(p * (1 - p) / runs);
  EXPECT_NEAR(freq, p, 4 * sigma) << "p=" << p;
  EXPECT_GT(freq, 5.0 / n);
}

TEST(Objective, HandExamples) {
  VectorSet data(1, {0.0F, 2.0F});
  VectorSet c(1, {1.0F});
  EXPECT_DOUBLE_EQ(objective(data, c), 2.0);
  VectorSet same(1, {0.0F, 2.0F});
  EXPECT_EQ(objective(data, same), 0.0);
  EXPECT_THROW(objective(VectorSet(1), c), std::invalid_argument);
}

TEST(Objective, MatchesNaiveDoubleLoop) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto data = test::random_vectors(300, 12, s);
    const auto c = test::random_vectors(7, 12, s + 100);
    const double ref = naive_objective(data, c);
    EXPECT_NEAR(objective(data, c), ref, 1e-9 * ref);
  }
}

TEST(NearestCentroid, TiesGoToLowestIndex) {
  VectorSet c(1, {-1.0F, 1.0F, 1.0F});
  EXPECT_EQ(nearest_centroid(std::vector<float>{0.0F}, c), 0U);
  EXPECT_EQ(nearest_centroid(std::vector<float>{2.0F}, c), 1U);
}

TEST(Train, RecoversSeparatedClusterMeans) {
  VectorSet means;
  const std::size_t k = 5, per = 40, dim = 4;
  const double spread = 0.05;
  const auto data = tight_clusters(k, per, dim, spread, 9, &means);
  TrainParams params;
  params.seed = 3;
  const Codebook cb = train(data, k, params);
  ASSERT_EQ(cb.k(), k);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t j = nearest_centroid(means[c], cb.centroids());
    EXPECT_LT(euclidean_distance(means[c], cb.centroid(j)), 1e-4);
  }
  // Within-cluster scatter around the true sample means.
  const double expected = naive_objective(data, means);
  EXPECT_NEAR(cb.meta().objective, expected, 1e-6 * expected);
}

TEST(Train, KEqualsNGivesZeroObjective) {
  const auto data = test::random_vectors(12, 3, 5);
  const Codebook cb = train(data, 12, {});
  EXPECT_EQ(cb.meta().objective, 0.0);
  EXPECT_EQ(objective(data, cb.centroids()), 0.0);
}

TEST(Train, DeterministicForSeed) {
  const auto data = test::random_vectors(500, 6, 8);
  TrainParams p;
  p.seed = 21;
  const Codebook a = train(data, 8, p);
  const Codebook b = train(data, 8, p);
  EXPECT_EQ(a.centroids().data(), b.centroids().data());
  EXPECT_EQ(a.meta().objective_history, b.meta().objective_history);
}

TEST(Train, ObjectiveNonIncreasingAndKPreserved) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto data = test::random_vectors(400, 5, 1000 + s);
    TrainParams p;
    p.seed = s;
    p.rel_tol = 0.0;
    p.max_iters = 30;
    const Codebook cb = train(data, 9, p);
    EXPECT_EQ(cb.k(), 9U);
    const auto& h = cb.meta().objective_history;
    ASSERT_GE(h.size(), 2U);
    for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1] * (1 + 1e-9));
    EXPECT_NEAR(h.back(), objective(data, cb.centroids()), 1e-9 * h.back());
  }
}

TEST(Train, EmptyClusterRepairKeepsKDistinct) {
  // Heavy duplication makes empty clusters likely after the first update.
  VectorSet data(1);
  for (int i = 0; i < 50; ++i) data.append(std::vector<float>{0.0F});
  for (int i = 0; i < 3; ++i) data.append(std::vector<float>{static_cast<float>(10 + i)});
  TrainParams p;
  p.seed = 1;
  const Codebook cb = train(data, 4, p);
  EXPECT_EQ(cb.k(), 4U);
  EXPECT_EQ(cb.meta().objective, 0.0);
}

TEST(Train, MaxItersRespected) {
  const auto data = test::random_vectors(300, 4, 2);
  TrainParams p;
  p.max_iters = 1;
  p.rel_tol = 0.0;
  EXPECT_EQ(train(data, 6, p).meta().iterations, 1U);
}

TEST(Distances, AlignedWithCentroids) {
  const auto data = test::random_vectors(50, 7, 4);
  const Codebook cb(test::random_vectors(5, 7, 9));
  const auto x = cb.centroid(3);
  const auto d = distances_to_centroids(x, cb);
  ASSERT_EQ(d.size(), 5U);
  EXPECT_EQ(d[3], 0.0);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(d[j], euclidean_distance(x, cb.centroid(j)));
  EXPECT_THROW(distances_to_centroids(std::vector<float>(6), cb), std::invalid_argument);
}

TEST(Codebook, RequiresTwoCentroids) {
  EXPECT_THROW(Codebook(VectorSet(2, {1.0F, 2.0F})), std::invalid_argument);
}

TEST(CodebookIO, RoundTripAndLayout) {
  TrainMeta meta;
  meta.seed = 0x0102030405060708ULL;
  const Codebook cb(test::random_vectors(3, 2, 1), meta);
  std::stringstream ss;
  write_codebook(ss, cb);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 4 + 4 + 4 + 4 + 8 + 3 * 2 * 4U);
  EXPECT_EQ(bytes.substr(0, 4), "MKMC");
  EXPECT_EQ(bytes[8], 3);   // k
  EXPECT_EQ(bytes[12], 2);  // dim
  EXPECT_EQ(static_cast<unsigned char>(bytes[16]), 0x08);
  const Codebook back = read_codebook(ss);
  EXPECT_EQ(back.centroids().data(), cb.centroids().data());
  EXPECT_EQ(back.meta().seed, meta.seed);
}

TEST(CodebookIO, TruncationAndBadMagic) {
  const Codebook cb(test::random_vectors(3, 2, 1));
  std::stringstream ss;
  write_codebook(ss, cb);
  std::string bytes = ss.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_codebook(cut), FormatError);
  bytes[0] = 'X';
  std::stringstream bad(bytes);
  EXPECT_THROW(read_codebook(bad), FormatError);
}
