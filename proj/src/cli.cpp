#include "mkmh/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>

#include "CLI11.hpp"
#include "mkmh/parallel.hpp"
#include "mkmh/random.hpp"

namespace mkmh::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void require_path(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing required option ") + flag);
}

std::size_t or_all(std::size_t limit) {
  return limit == 0 ? std::numeric_limits<std::size_t>::max() : limit;
}

template <typename T>
std::vector<std::int64_t> as_i64(const std::vector<T>& v) {
  std::vector<std::int64_t> out;
  for (auto x : v) out.push_back(static_cast<std::int64_t>(x));
  return out;
}

/// Stratified sample of `per_class` query rows per label, ascending rows.
std::vector<std::size_t> sample_queries(const std::vector<std::int32_t>& labels,
                                        std::size_t per_class, std::uint64_t seed) {
  std::vector<std::size_t> rows;
  if (per_class == 0) {
    rows.resize(labels.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
  }
  std::map<std::int32_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng(seed);
  for (auto& [label, members] : by_class) {
    if (members.size() < per_class) {
      throw DataError("class " + std::to_string(label) + " has only " +
                      std::to_string(members.size()) + " queries, " + std::to_string(per_class) +
                      " requested");
    }
    for (std::size_t i = members.size() - 1; i > 0; --i) {
      std::swap(members[i], members[static_cast<std::size_t>(rng.index(i + 1))]);
    }
    rows.insert(rows.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(per_class));
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace

void RunConfig::validate() const {
  if (seeds.empty()) throw ConfigError("--seeds must list at least one seed");
  if (k < 2) throw ConfigError("--k must be at least 2");
  if (is_dual(variant)) {
    if (k % 2 != 0 || k < 4) {
      throw ConfigError("--k must be even and >= 4 for " + to_string(variant) +
                        " (each sub-codebook gets k/2 centroids)");
    }
  }
  if (variant == Variant::N && (n < 1 || n > k)) {
    throw ConfigError("--n must lie in [1, k] for variant n");
  }
  if (variant == Variant::N2 && (n < 2 || n % 2 != 0 || n / 2 > k / 2)) {
    throw ConfigError("--n must be even and n/2 <= k/2 for variant n2");
  }
  if (shortlist < 1) throw ConfigError("--shortlist must be >= 1");
  if (!base_labels.empty() || !query_labels.empty()) {
    if (map_depth > shortlist) throw ConfigError("--map-depth exceeds --shortlist");
  } else {
    validate_recall_list();
  }
  if (max_iters < 1) throw ConfigError("--max-iters must be >= 1");
  if (rel_tol < 0.0) throw ConfigError("--rel-tol must be >= 0");
}

void RunConfig::validate_recall_list() const {
  if (recall_at.empty()) throw ConfigError("--recall-at must list at least one R");
  if (!std::is_sorted(recall_at.begin(), recall_at.end()) ||
      std::adjacent_find(recall_at.begin(), recall_at.end()) != recall_at.end()) {
    throw ConfigError("--recall-at values must be strictly ascending");
  }
  if (recall_at.front() < 1) throw ConfigError("--recall-at values must be >= 1");
  if (recall_at.back() > shortlist) {
    throw ConfigError("largest --recall-at value " + std::to_string(recall_at.back()) +
                      " exceeds --shortlist " + std::to_string(shortlist));
  }
}

EncoderSpec RunConfig::encoder_spec() const {
  EncoderSpec spec;
  spec.variant = variant;
  spec.mean_kind = mean;
  spec.n_nearest = static_cast<std::uint32_t>(variant == Variant::N2 ? n / 2 : n);
  if (variant == Variant::T || variant == Variant::T2) spec.n_nearest = 1;
  return spec;
}

std::size_t RunConfig::codebook_k() const { return is_dual(variant) ? k / 2 : k; }

Encoder train_encoder(const RunConfig& cfg, const VectorSet& learning, std::uint64_t seed) {
  TrainParams params;
  params.max_iters = cfg.max_iters;
  params.rel_tol = cfg.rel_tol;
  if (is_dual(cfg.variant)) {
    params.seed = seed;
    return Encoder(cfg.encoder_spec(), train_dual(learning, cfg.codebook_k(), params));
  }
  params.seed = derive_seed(seed, streams::kCodebook);
  return Encoder(cfg.encoder_spec(), train(learning, cfg.codebook_k(), params));
}

// ----------------------------------------------------------------------------

void cmd_gen(const SyntheticSpec& spec, const std::string& out_dir, std::ostream& log) {
  require_path(out_dir, "--out");
  std::filesystem::create_directories(out_dir);
  const auto t0 = Clock::now();
  const SyntheticData data = generate_synthetic(spec);
  const std::filesystem::path dir(out_dir);
  write_vectors((dir / "base.fvecs").string(), data.base, ElementKind::Float32);
  write_vectors((dir / "query.fvecs").string(), data.queries, ElementKind::Float32);
  write_vectors((dir / "learn.fvecs").string(), data.learning, ElementKind::Float32);
  write_ground_truth((dir / "groundtruth.ivecs").string(), data.gt);
  write_labels((dir / "base.labels").string(), data.base_labels);
  write_labels((dir / "query.labels").string(), data.query_labels);
  write_labels((dir / "learn.labels").string(), data.learning_labels);
  log << "generated " << data.base.size() << " base, " << data.queries.size() << " query, "
      << data.learning.size() << " learning vectors (dim " << spec.dim << ") in " << std::fixed
      << std::setprecision(2) << seconds_since(t0) << " s\n";
}

void cmd_gt(const RunConfig& cfg, std::size_t gt_k, std::ostream& log) {
  require_path(cfg.base, "--base");
  require_path(cfg.queries, "--queries");
  require_path(cfg.out, "--out");
  const VectorSet base = read_vectors(cfg.base);
  const VectorSet queries = read_vectors(cfg.queries, {0, or_all(cfg.max_queries)});
  if (gt_k > base.size()) throw ConfigError("--gt-k exceeds the base size");
  const auto t0 = Clock::now();
  const GroundTruth gt = brute_force_gt(base, queries, gt_k, cfg.metric);
  write_ground_truth(cfg.out, gt);
  log << "ground truth for " << queries.size() << " queries (K=" << gt_k << ") in " << std::fixed
      << std::setprecision(2) << seconds_since(t0) << " s\n";
}

void cmd_train(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  require_path(cfg.learn, "--learn");
  require_path(cfg.out, "--out");
  const VectorSet learning = read_vectors(cfg.learn, {0, or_all(cfg.learn_limit)});
  const auto t0 = Clock::now();
  const Encoder enc = train_encoder(cfg, learning, cfg.seeds.front());
  if (const auto* d = enc.dual()) {
    save_dual_codebook(cfg.out, *d);
    log << "trained 2 x " << d->first().k() << " centroids (objectives "
        << d->first().meta().objective << ", " << d->second().meta().objective << ")";
  } else {
    save_codebook(cfg.out, *enc.single());
    log << "trained " << enc.single()->k() << " centroids in " << enc.single()->meta().iterations
        << " iterations (objective " << enc.single()->meta().objective << ")";
  }
  log << " on " << learning.size() << " vectors in " << std::fixed << std::setprecision(2)
      << seconds_since(t0) << " s\n";
}

void cmd_index(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  require_path(cfg.codebook, "--codebook");
  require_path(cfg.base, "--base");
  require_path(cfg.out, "--out");
  auto books = load_any_codebook(cfg.codebook);
  const EncoderSpec spec = cfg.encoder_spec();
  if (is_dual(spec.variant) != std::holds_alternative<DualCodebook>(books)) {
    throw ConfigError("variant " + to_string(spec.variant) + " does not match codebook file " +
                      cfg.codebook);
  }
  std::optional<Encoder> enc;
  try {
    if (auto* d = std::get_if<DualCodebook>(&books)) {
      enc.emplace(spec, std::move(*d));
    } else {
      enc.emplace(spec, std::move(std::get<Codebook>(books)));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const MappedVectorFile base(cfg.base);
  const auto t0 = Clock::now();
  const SearchIndex index = encode_and_build(std::move(*enc), base);
  const double secs = seconds_since(t0);
  index.save(cfg.out);
  log << "indexed " << index.size() << " vectors into " << index.code_length() << "-bit codes in "
      << std::fixed << std::setprecision(2) << secs << " s ("
      << std::setprecision(0) << (secs > 0 ? static_cast<double>(index.size()) / secs : 0.0)
      << " vectors/s)\n";
}

void cmd_query(const RunConfig& cfg, std::size_t query_row, std::size_t top, std::ostream& out) {
  require_path(cfg.index, "--index");
  require_path(cfg.base, "--base");
  require_path(cfg.queries, "--queries");
  if (top < 1 || top > cfg.shortlist) throw ConfigError("--top must lie in [1, --shortlist]");
  const SearchIndex index = SearchIndex::load(cfg.index);
  if (cfg.shortlist > index.size()) {
    throw ConfigError("--shortlist " + std::to_string(cfg.shortlist) + " exceeds index size " +
                      std::to_string(index.size()));
  }
  const MappedVectorFile base(cfg.base);
  const VectorSet q = read_vectors(cfg.queries, {query_row, 1});
  if (q.size() != 1) throw ConfigError("--query-row is beyond the end of " + cfg.queries);
  const SearchResult res = search(index, base, q[0], cfg.shortlist, top, cfg.metric);
  out << "# query " << query_row << ", shortlist " << res.shortlist_size << ", metric "
      << to_string(res.metric) << "\n";
  out << std::setprecision(9);
  for (std::size_t r = 0; r < res.ranked.size(); ++r) {
    out << (r + 1) << ' ' << res.ranked[r].id << ' ' << res.ranked[r].score << '\n';
  }
}

EvalReport cmd_eval(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  require_path(cfg.base, "--base");
  require_path(cfg.queries, "--queries");
  const bool label_mode = !cfg.base_labels.empty() || !cfg.query_labels.empty();
  if (label_mode && !cfg.gt.empty()) {
    throw ConfigError("give either --gt (recall) or --base-labels/--query-labels (MAP), not both");
  }
  if (!label_mode && cfg.gt.empty()) {
    throw ConfigError("missing --gt (recall mode) or --base-labels/--query-labels (MAP mode)");
  }
  if (label_mode) {
    require_path(cfg.base_labels, "--base-labels");
    require_path(cfg.query_labels, "--query-labels");
  }
  if (cfg.index.empty()) require_path(cfg.learn, "--learn (or --index)");

  const MappedVectorFile base(cfg.base);
  const VectorSet queries = read_vectors(cfg.queries, {0, or_all(cfg.max_queries)});
  if (queries.dim() != base.dim()) {
    throw DataError("query dimension " + std::to_string(queries.dim()) +
                    " != base dimension " + std::to_string(base.dim()));
  }

  GroundTruth gt;
  std::vector<std::int32_t> base_labels;
  std::vector<std::int32_t> query_labels;
  if (label_mode) {
    base_labels = read_labels(cfg.base_labels);
    query_labels = read_labels(cfg.query_labels);
    if (base_labels.size() != base.size()) throw DataError("base label count != base size");
    if (query_labels.size() < queries.size()) throw DataError("fewer query labels than queries");
    query_labels.resize(queries.size());
  } else {
    gt = read_ground_truth(cfg.gt);
    if (gt.num_queries() < queries.size()) {
      throw DataError("ground truth covers " + std::to_string(gt.num_queries()) + " queries, " +
                      std::to_string(queries.size()) + " given");
    }
    gt.neighbors.resize(queries.size());
  }

  std::optional<SearchIndex> prebuilt;
  VectorSet learning;
  if (!cfg.index.empty()) {
    prebuilt.emplace(SearchIndex::load(cfg.index));
  } else {
    learning = read_vectors(cfg.learn, {0, or_all(cfg.learn_limit)});
  }

  EvalReport report;
  report.mode = label_mode ? EvalReport::Mode::Map : EvalReport::Mode::Recall;
  report.recall_r = label_mode ? std::vector<std::size_t>{} : cfg.recall_at;
  const std::size_t depth = cfg.map_depth == 0 ? cfg.shortlist : cfg.map_depth;

  for (const auto seed : cfg.seeds) {
    const auto t0 = Clock::now();
    std::optional<SearchIndex> trained;
    if (!prebuilt) trained.emplace(encode_and_build(train_encoder(cfg, learning, seed), base));
    const SearchIndex& index = prebuilt ? *prebuilt : *trained;
    if (cfg.shortlist > index.size()) {
      throw ConfigError("--shortlist " + std::to_string(cfg.shortlist) + " exceeds index size " +
                        std::to_string(index.size()));
    }
    const double build_s = seconds_since(t0);

    RunMetrics run;
    run.seed = seed;
    const auto t1 = Clock::now();
    std::size_t n_queries = 0;
    if (label_mode) {
      const auto rows =
          sample_queries(query_labels, cfg.queries_per_class, derive_seed(seed, streams::kQuerySample));
      VectorSet picked(queries.dim());
      for (auto r : rows) picked.append(queries[r]);
      const auto results = search_batch(index, base, picked, cfg.shortlist, depth, cfg.metric);
      std::vector<double> aps;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto ids = results[i].ids();
        aps.push_back(average_precision(label_relevance(query_labels[rows[i]], ids, base_labels)).value);
      }
      run.map_value = mean_average_precision(aps);
      n_queries = rows.size();
    } else {
      const auto results =
          search_batch(index, base, queries, cfg.shortlist, cfg.recall_at.back(), cfg.metric);
      for (auto R : cfg.recall_at) run.recall_at.push_back(recall_at_r(results, gt, R));
      n_queries = results.size();
    }
    const double query_s = seconds_since(t1);
    log << "seed " << seed << ": build " << std::fixed << std::setprecision(2) << build_s
        << " s, " << n_queries << " queries in " << query_s << " s\n";
    report.runs.push_back(std::move(run));
  }

  report.config = {
      {"variant", to_string(cfg.variant)},
      {"k", static_cast<std::int64_t>(cfg.k)},
      {"n", static_cast<std::int64_t>(cfg.variant == Variant::N || cfg.variant == Variant::N2 ? cfg.n : 0)},
      {"mean", to_string(cfg.mean)},
      {"shortlist", static_cast<std::int64_t>(cfg.shortlist)},
      {"metric", to_string(cfg.metric)},
      {"seeds", as_i64(cfg.seeds)},
      {"max_iters", static_cast<std::int64_t>(cfg.max_iters)},
      {"rel_tol", cfg.rel_tol},
      {"learn", cfg.learn},
      {"learn_limit", static_cast<std::int64_t>(cfg.learn_limit)},
      {"index", cfg.index},
      {"base", cfg.base},
      {"queries", cfg.queries},
      {"max_queries", static_cast<std::int64_t>(cfg.max_queries)},
  };
  if (label_mode) {
    report.config.emplace_back("base_labels", cfg.base_labels);
    report.config.emplace_back("query_labels", cfg.query_labels);
    report.config.emplace_back("map_depth", static_cast<std::int64_t>(depth));
    report.config.emplace_back("queries_per_class", static_cast<std::int64_t>(cfg.queries_per_class));
  } else {
    report.config.emplace_back("gt", cfg.gt);
    report.config.emplace_back("recall_at", as_i64(cfg.recall_at));
  }

  if (!cfg.out.empty()) {
    std::ofstream os(cfg.out, std::ios::trunc);
    if (!os) throw DataError("cannot open for writing: " + cfg.out);
    os << report.to_json();
  }
  return report;
}

// ----------------------------------------------------------------------------

namespace {

void add_model_options(CLI::App* sub, RunConfig& cfg, std::string& variant, std::string& mean) {
  sub->add_option("--variant", variant, "Encoder variant")
      ->check(CLI::IsMember({"t", "n", "t2", "n2"}))
      ->capture_default_str();
  sub->add_option("--k", cfg.k, "Total code length in bits (centroids; k/2 per codebook for t2/n2)")
      ->capture_default_str();
  sub->add_option("--n", cfg.n, "Nearest centroids per code for n/n2 (n/2 per codebook for n2)")
      ->capture_default_str();
  sub->add_option("--mean", mean, "Threshold mean for t/t2")
      ->check(CLI::IsMember({"arith", "geom"}))
      ->capture_default_str();
}

void add_search_options(CLI::App* sub, RunConfig& cfg, std::string& metric) {
  sub->add_option("--shortlist", cfg.shortlist, "Hamming shortlist size L")->capture_default_str();
  sub->add_option("--metric", metric, "Re-rank metric")
      ->check(CLI::IsMember({"l2", "cosine"}))
      ->capture_default_str();
}

void add_training_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--max-iters", cfg.max_iters, "Lloyd iteration cap")->capture_default_str();
  sub->add_option("--rel-tol", cfg.rel_tol, "Relative objective improvement to stop at")
      ->capture_default_str();
  sub->add_option("--learn-limit", cfg.learn_limit, "Use only the first N learning vectors (0: all)")
      ->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-k-means compact hash codes: train, index, query and evaluate"};
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags override it");
  app.require_subcommand(1);

  RunConfig cfg;
  std::string variant = "t";
  std::string mean = "arith";
  std::string metric = "l2";
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (0: all cores)")->capture_default_str();

  SyntheticSpec syn;
  std::string out_dir;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic clustered dataset");
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--clusters", syn.n_clusters)->capture_default_str();
  gen->add_option("--points-per-cluster", syn.points_per_cluster)->capture_default_str();
  gen->add_option("--dim", syn.dim)->capture_default_str();
  gen->add_option("--spread", syn.cluster_spread, "Within-cluster standard deviation")
      ->capture_default_str();
  gen->add_option("--center-scale", syn.center_scale)->capture_default_str();
  gen->add_option("--queries", syn.n_queries)->capture_default_str();
  gen->add_option("--learning", syn.n_learning)->capture_default_str();
  gen->add_option("--gt-k", syn.gt_k)->capture_default_str();
  gen->add_option("--seed", syn.seed)->capture_default_str();

  std::size_t gt_k = 100;
  auto* gt = app.add_subcommand("gt", "Exact K-NN ground truth by full scan");
  gt->add_option("--base", cfg.base)->required();
  gt->add_option("--queries", cfg.queries)->required();
  gt->add_option("--gt-k", gt_k)->capture_default_str();
  gt->add_option("--max-queries", cfg.max_queries)->capture_default_str();
  gt->add_option("--out", cfg.out)->required();
  gt->add_option("--metric", metric)->check(CLI::IsMember({"l2", "cosine"}))->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "Train a codebook (t/n) or dual codebook (t2/n2)");
  train_cmd->add_option("--learn", cfg.learn, "Learning vectors (.fvecs/.bvecs)")->required();
  train_cmd->add_option("--out", cfg.out, "Codebook file")->required();
  train_cmd->add_option("--seeds", cfg.seeds, "Run seed (first value is used)")->delimiter(',');
  add_model_options(train_cmd, cfg, variant, mean);
  add_training_options(train_cmd, cfg);

  auto* index_cmd = app.add_subcommand("index", "Encode a base set into a search index");
  index_cmd->add_option("--codebook", cfg.codebook)->required();
  index_cmd->add_option("--base", cfg.base)->required();
  index_cmd->add_option("--out", cfg.out, "Index file")->required();
  add_model_options(index_cmd, cfg, variant, mean);

  std::size_t query_row = 0;
  std::size_t top = 10;
  auto* query_cmd = app.add_subcommand("query", "Run one query and print ranked ids");
  query_cmd->add_option("--index", cfg.index)->required();
  query_cmd->add_option("--base", cfg.base)->required();
  query_cmd->add_option("--queries", cfg.queries)->required();
  query_cmd->add_option("--query-row", query_row)->capture_default_str();
  query_cmd->add_option("--top", top, "Results to print (R)")->capture_default_str();
  add_search_options(query_cmd, cfg, metric);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate recall@R or MAP, averaged over seeds");
  eval_cmd->add_option("--learn", cfg.learn, "Learning vectors; one codebook is trained per seed");
  eval_cmd->add_option("--index", cfg.index, "Prebuilt index instead of training per seed");
  eval_cmd->add_option("--base", cfg.base)->required();
  eval_cmd->add_option("--queries", cfg.queries)->required();
  eval_cmd->add_option("--gt", cfg.gt, "Ground-truth ivecs (recall mode)");
  eval_cmd->add_option("--base-labels", cfg.base_labels, "Base label file (MAP mode)");
  eval_cmd->add_option("--query-labels", cfg.query_labels, "Query label file (MAP mode)");
  eval_cmd->add_option("--recall-at", cfg.recall_at, "R values")->delimiter(',');
  eval_cmd->add_option("--seeds", cfg.seeds, "Run seeds")->delimiter(',');
  eval_cmd->add_option("--max-queries", cfg.max_queries, "Use the first N queries (0: all)");
  eval_cmd->add_option("--map-depth", cfg.map_depth, "Ranked results per query entering AP (0: L)");
  eval_cmd->add_option("--queries-per-class", cfg.queries_per_class,
                       "Sample this many queries per class each run (0: all)");
  eval_cmd->add_option("--out", cfg.out, "EvalReport JSON file");
  add_model_options(eval_cmd, cfg, variant, mean);
  add_search_options(eval_cmd, cfg, metric);
  add_training_options(eval_cmd, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    cfg.variant = parse_variant(variant);
    cfg.mean = parse_mean_kind(mean);
    cfg.metric = parse_metric(metric);
    cfg.threads = threads;
    if (eval_cmd->count("--recall-at") == 0) {
      // The default R grid stops at the shortlist size.
      std::erase_if(cfg.recall_at, [&](std::size_t r) { return r > cfg.shortlist; });
    }
    set_max_threads(threads);

    if (gen->parsed()) {
      cmd_gen(syn, out_dir, err);
    } else if (gt->parsed()) {
      cmd_gt(cfg, gt_k, err);
    } else if (train_cmd->parsed()) {
      cmd_train(cfg, err);
    } else if (index_cmd->parsed()) {
      cmd_index(cfg, err);
    } else if (query_cmd->parsed()) {
      cmd_query(cfg, query_row, top, out);
    } else if (eval_cmd->parsed()) {
      out << cmd_eval(cfg, err).to_table();
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace mkmh::cli
