#include "mkmh/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "mkmh/parallel.hpp"

namespace mkmh {

GroundTruth brute_force_gt(const VectorSet& base, const VectorSet& queries, std::size_t K,
                           Metric metric) {
  if (base.empty()) throw std::invalid_argument("brute_force_gt: empty base");
  if (!queries.empty() && queries.dim() != base.dim()) {
    throw std::invalid_argument("brute_force_gt: query and base dimensions differ");
  }
  if (K < 1 || K > base.size()) {
    throw std::invalid_argument("brute_force_gt: K=" + std::to_string(K) + " outside [1, " +
                                std::to_string(base.size()) + "]");
  }
  GroundTruth gt;
  gt.k = K;
  gt.neighbors.resize(queries.size());
  gt.scores.resize(queries.size());
  const std::size_t n = base.size();
  parallel_for(
      queries.size(),
      [&](std::size_t begin, std::size_t end) {
        std::vector<ScoredId> all(n);
        for (std::size_t q = begin; q < end; ++q) {
          for (std::size_t i = 0; i < n; ++i) {
            const double s = metric == Metric::Euclidean ? euclidean_distance(queries[q], base[i])
                                                         : cosine_similarity(queries[q], base[i]);
            all[i] = {i, s};
          }
          const auto cmp = [metric](const ScoredId& a, const ScoredId& b) {
            if (a.score != b.score) {
              return metric == Metric::Euclidean ? a.score < b.score : a.score > b.score;
            }
            return a.id < b.id;
          };
          std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(K), all.end(),
                            cmp);
          auto& ids = gt.neighbors[q];
          auto& sc = gt.scores[q];
          ids.resize(K);
          sc.resize(K);
          for (std::size_t r = 0; r < K; ++r) {
            ids[r] = all[r].id;
            sc[r] = all[r].score;
          }
        }
      },
      1);
  return gt;
}

double recall_at_r(std::span<const std::vector<std::uint64_t>> ranked_ids, const GroundTruth& gt,
                   std::size_t R) {
  if (ranked_ids.empty()) throw std::invalid_argument("recall_at_r: no queries");
  if (ranked_ids.size() != gt.num_queries()) {
    throw std::invalid_argument("recall_at_r: " + std::to_string(ranked_ids.size()) +
                                " result lists for " + std::to_string(gt.num_queries()) +
                                " ground-truth queries");
  }
  if (R < 1) throw std::invalid_argument("recall_at_r: R must be >= 1");
  std::size_t hits = 0;
  for (std::size_t q = 0; q < ranked_ids.size(); ++q) {
    const auto& ids = ranked_ids[q];
    if (ids.size() < R) {
      throw std::invalid_argument("recall_at_r: query " + std::to_string(q) + " has only " +
                                  std::to_string(ids.size()) + " results, R=" + std::to_string(R) +
                                  " (shortlist too small?)");
    }
    if (gt.neighbors[q].empty()) {
      throw std::invalid_argument("recall_at_r: query " + std::to_string(q) +
                                  " has no ground-truth neighbour");
    }
    const auto nn = gt.neighbors[q].front();
    if (std::find(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(R), nn) !=
        ids.begin() + static_cast<std::ptrdiff_t>(R)) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(ranked_ids.size());
}

double recall_at_r(std::span<const SearchResult> results, const GroundTruth& gt, std::size_t R) {
  std::vector<std::vector<std::uint64_t>> ids;
  ids.reserve(results.size());
  for (const auto& r : results) ids.push_back(r.ids());
  return recall_at_r(std::span<const std::vector<std::uint64_t>>(ids), gt, R);
}

AveragePrecision average_precision(std::span<const std::uint8_t> rel, std::size_t total_relevant) {
  if (rel.empty()) throw std::invalid_argument("average_precision: empty ranking");
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < rel.size(); ++i) {
    if (rel[i] > 1) throw std::invalid_argument("average_precision: relevance must be 0 or 1");
    if (rel[i]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  if (hits > total_relevant) {
    throw std::invalid_argument("average_precision: ranking holds " + std::to_string(hits) +
                                " relevant items but total_relevant=" +
                                std::to_string(total_relevant));
  }
  if (total_relevant == 0) return {0.0, true};
  return {sum / static_cast<double>(total_relevant), false};
}

AveragePrecision average_precision(std::span<const std::uint8_t> rel) {
  std::size_t total = 0;
  for (auto r : rel) total += r ? 1 : 0;
  return average_precision(rel, total);
}

double mean_average_precision(std::span<const double> aps) {
  if (aps.empty()) throw std::invalid_argument("mean_average_precision: Q must be >= 1");
  double s = 0.0;
  for (double a : aps) s += a;
  return s / static_cast<double>(aps.size());
}

std::vector<std::uint8_t> label_relevance(std::int64_t query_label,
                                          std::span<const std::uint64_t> result_ids,
                                          std::span<const std::int32_t> labels) {
  std::vector<std::uint8_t> rel;
  rel.reserve(result_ids.size());
  for (auto id : result_ids) {
    if (id >= labels.size()) {
      throw std::invalid_argument("label_relevance: no label for id " + std::to_string(id));
    }
    rel.push_back(labels[id] == query_label ? 1 : 0);
  }
  return rel;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) return {};
  double m = 0.0;
  for (double v : values) m += v;
  m /= static_cast<double>(values.size());
  if (values.size() == 1) return {m, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return {m, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

// ----------------------------------------------------------------------------

std::vector<MeanStd> EvalReport::recall_summary() const {
  std::vector<MeanStd> out;
  for (std::size_t c = 0; c < recall_r.size(); ++c) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.recall_at.at(c));
    out.push_back(mean_std(v));
  }
  return out;
}

MeanStd EvalReport::map_summary() const {
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r.map_value);
  return mean_std(v);
}

std::string EvalReport::to_json() const {
  using nlohmann::ordered_json;
  ordered_json j;
  j["mode"] = mode == Mode::Recall ? "recall" : "map";
  ordered_json cfg = ordered_json::object();
  for (const auto& [key, value] : config) {
    std::visit([&](const auto& v) { cfg[key] = v; }, value);
  }
  j["config"] = cfg;
  j["runs_averaged"] = runs.size();

  ordered_json runs_json = ordered_json::array();
  for (const auto& r : runs) {
    ordered_json rj;
    rj["seed"] = r.seed;
    if (mode == Mode::Recall) {
      ordered_json ra = ordered_json::object();
      for (std::size_t c = 0; c < recall_r.size(); ++c) {
        ra[std::to_string(recall_r[c])] = r.recall_at.at(c);
      }
      rj["recall_at"] = ra;
    } else {
      rj["map"] = r.map_value;
    }
    runs_json.push_back(rj);
  }
  j["runs"] = runs_json;

  if (mode == Mode::Recall) {
    ordered_json ra = ordered_json::object();
    const auto summary = recall_summary();
    for (std::size_t c = 0; c < recall_r.size(); ++c) {
      ra[std::to_string(recall_r[c])] = {{"mean", summary[c].mean}, {"std", summary[c].stddev}};
    }
    j["recall_at"] = ra;
  } else {
    const auto s = map_summary();
    j["map"] = {{"mean", s.mean}, {"std", s.stddev}};
  }
  return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << "#";
  for (const auto& [key, value] : config) {
    os << ' ' << key << '=';
    std::visit(
        [&](const auto& v) {
          using V = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<V, std::vector<std::int64_t>>) {
            for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
          } else {
            os << v;
          }
        },
        value);
  }
  os << '\n';
  char buf[64];
  if (mode == Mode::Recall) {
    os << "seed                ";
    for (auto r : recall_r) {
      std::snprintf(buf, sizeof buf, "%10s", ("R@" + std::to_string(r)).c_str());
      os << buf;
    }
    os << '\n';
    for (const auto& run : runs) {
      std::snprintf(buf, sizeof buf, "%-20llu", static_cast<unsigned long long>(run.seed));
      os << buf;
      for (double v : run.recall_at) {
        std::snprintf(buf, sizeof buf, "%10.4f", v);
        os << buf;
      }
      os << '\n';
    }
    if (runs.size() > 1) {
      const auto summary = recall_summary();
      os << "mean                ";
      for (const auto& s : summary) {
        std::snprintf(buf, sizeof buf, "%10.4f", s.mean);
        os << buf;
      }
      os << "\nstd                 ";
      for (const auto& s : summary) {
        std::snprintf(buf, sizeof buf, "%10.4f", s.stddev);
        os << buf;
      }
      os << '\n';
    }
  } else {
    os << "seed                       MAP\n";
    for (const auto& run : runs) {
      std::snprintf(buf, sizeof buf, "%-20llu%10.4f\n", static_cast<unsigned long long>(run.seed),
                    run.map_value);
      os << buf;
    }
    const auto s = map_summary();
    std::snprintf(buf, sizeof buf, "mean +- std         %.4f +- %.4f\n", s.mean, s.stddev);
    os << buf;
  }
  return os.str();
}

}  // namespace mkmh
