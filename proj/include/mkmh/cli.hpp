#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mkmh/dataio.hpp"
#include "mkmh/encoder.hpp"
#include "mkmh/eval.hpp"
#include "mkmh/index.hpp"

namespace mkmh::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

/// Invalid or inconsistent command-line configuration (exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/**
 * Everything a pipeline run needs. `k` and `n` describe the whole code: for
 * the dual variants each sub-codebook gets k/2 centroids and, for n2, n/2
 * nearest bits.
 */
struct RunConfig {
  // Inputs
  std::string learn;
  std::string base;
  std::string queries;
  std::string gt;
  std::string base_labels;
  std::string query_labels;
  std::string codebook;
  std::string index;
  // Outputs
  std::string out;

  Variant variant = Variant::T;
  std::size_t k = 64;
  std::size_t n = 32;
  MeanKind mean = MeanKind::Arithmetic;

  std::size_t shortlist = 10000;
  std::vector<std::size_t> recall_at = {1, 10, 100, 1000, 10000};
  Metric metric = Metric::Euclidean;
  std::vector<std::uint64_t> seeds = {0};
  unsigned threads = 0;

  std::size_t max_iters = 100;
  double rel_tol = 1e-4;
  std::size_t learn_limit = 0;   // 0: use every learning vector
  std::size_t max_queries = 0;   // 0: every query
  std::size_t map_depth = 0;     // 0: the shortlist size
  std::size_t queries_per_class = 0;  // 0: every query, no sampling

  /// Checks the invariants shared by all commands (seeds nonempty, k and n
  /// consistent with the variant). R must be sorted with max R <= L unless
  /// label files select MAP mode.
  void validate() const;
  void validate_recall_list() const;
  /// Encoder spec for this config; n is halved for n2.
  EncoderSpec encoder_spec() const;
  /// Centroids per codebook: k, or k/2 for dual variants.
  std::size_t codebook_k() const;
};

/// Trains the codebook(s) for `cfg` with run seed `seed` and returns the
/// bound encoder. Single codebooks use the kCodebook stream of the seed; dual
/// codebooks follow train_dual().
Encoder train_encoder(const RunConfig& cfg, const VectorSet& learning, std::uint64_t seed);

/// Writes base/query/learn fvecs, gt ivecs and label files into out_dir.
void cmd_gen(const SyntheticSpec& spec, const std::string& out_dir, std::ostream& log);
void cmd_gt(const RunConfig& cfg, std::size_t gt_k, std::ostream& log);
void cmd_train(const RunConfig& cfg, std::ostream& log);
void cmd_index(const RunConfig& cfg, std::ostream& log);
/// Prints "rank id score" lines for one query row.
void cmd_query(const RunConfig& cfg, std::size_t query_row, std::size_t top, std::ostream& out);
EvalReport cmd_eval(const RunConfig& cfg, std::ostream& log);

/// Parses argv and dispatches; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mkmh::cli
