#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mkmh/core.hpp"
#include "mkmh/index.hpp"

namespace mkmh {

/// Exact K nearest neighbours per query, best first.
struct GroundTruth {
  std::size_t k = 0;
  std::vector<std::vector<std::uint64_t>> neighbors;
  /// Scores aligned with `neighbors`; empty when loaded from an ivecs file.
  std::vector<std::vector<double>> scores;

  std::size_t num_queries() const noexcept { return neighbors.size(); }
};

/// Full scan per query. Ties are ordered by ascending id.
GroundTruth brute_force_gt(const VectorSet& base, const VectorSet& queries, std::size_t K,
                           Metric metric = Metric::Euclidean);

/// Fraction of queries whose true first neighbour appears in the first R
/// ranked ids. Throws if some result list is shorter than R.
double recall_at_r(std::span<const std::vector<std::uint64_t>> ranked_ids, const GroundTruth& gt,
                   std::size_t R);
double recall_at_r(std::span<const SearchResult> results, const GroundTruth& gt, std::size_t R);

struct AveragePrecision {
  double value = 0.0;
  /// Set when the universe held no relevant item; value is then 0.
  bool no_relevant = false;
};

/// Sum of precision@i over relevant ranks i, divided by total_relevant.
AveragePrecision average_precision(std::span<const std::uint8_t> rel, std::size_t total_relevant);

/// Depth-limited AP: the total relevant count is the number of relevant
/// items inside `rel` itself.
AveragePrecision average_precision(std::span<const std::uint8_t> rel);

/// Arithmetic mean of per-query AP values.
double mean_average_precision(std::span<const double> aps);

/// rel[i] = 1 iff labels[result_ids[i]] == query_label.
std::vector<std::uint8_t> label_relevance(std::int64_t query_label,
                                          std::span<const std::uint64_t> result_ids,
                                          std::span<const std::int32_t> labels);

struct MeanStd {
  double mean = 0.0;
  /// Sample standard deviation; 0 for a single run.
  double stddev = 0.0;
};

MeanStd mean_std(std::span<const double> values);

using ConfigValue = std::variant<std::int64_t, double, std::string, std::vector<std::int64_t>>;

struct RunMetrics {
  std::uint64_t seed = 0;
  std::vector<double> recall_at;  // aligned with EvalReport::recall_r
  double map_value = 0.0;
};

/// Results of one evaluation, possibly averaged over several seeded runs.
struct EvalReport {
  enum class Mode { Recall, Map };
  Mode mode = Mode::Recall;
  std::vector<std::size_t> recall_r;
  std::vector<RunMetrics> runs;
  std::vector<std::pair<std::string, ConfigValue>> config;

  std::size_t runs_averaged() const noexcept { return runs.size(); }
  std::vector<MeanStd> recall_summary() const;
  MeanStd map_summary() const;

  /// Deterministic JSON text: identical inputs give identical bytes.
  std::string to_json() const;
  /// Console table with one row per run plus a mean/std row.
  std::string to_table() const;
};

}  // namespace mkmh
