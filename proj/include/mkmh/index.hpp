#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mkmh/core.hpp"
#include "mkmh/encoder.hpp"

namespace mkmh {

enum class Metric : std::uint8_t { Euclidean = 0, Cosine = 1 };

std::string to_string(Metric m);
Metric parse_metric(const std::string& s);

struct ScoredId {
  std::uint64_t id;
  double score;
  bool operator==(const ScoredId&) const = default;
};

/// Re-ranked neighbours. Euclidean scores ascend, cosine scores descend; equal
/// scores are ordered by ascending id.
struct SearchResult {
  std::vector<ScoredId> ranked;
  Metric metric = Metric::Euclidean;
  std::size_t shortlist_size = 0;

  std::vector<std::uint64_t> ids() const;
  bool operator==(const SearchResult&) const = default;
};

/**
 * Packed hash codes of a database with their vector ids.
 *
 * Codes are kept in input order, ceil(code_length / 64) words each. The index
 * owns the encoder so that queries are hashed with the same codebook(s) the
 * database was.
 */
class SearchIndex {
 public:
  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t code_length() const noexcept { return code_length_; }
  std::size_t words_per_code() const noexcept { return words_per_code_; }
  const Encoder& encoder() const noexcept { return encoder_; }
  std::span<const std::uint64_t> ids() const noexcept { return ids_; }
  std::span<const std::uint64_t> packed_codes() const noexcept { return codes_; }
  HashCode code(std::size_t pos) const;

  void write(std::ostream& os) const;
  static SearchIndex read(std::istream& is);
  void save(const std::string& path) const;
  static SearchIndex load(const std::string& path);

 private:
  friend SearchIndex build_index(const std::vector<HashCode>& codes,
                                 std::vector<std::uint64_t> ids, Encoder encoder);
  SearchIndex(Encoder encoder, std::size_t code_length, std::vector<std::uint64_t> codes,
              std::vector<std::uint64_t> ids);

  Encoder encoder_;
  std::size_t code_length_ = 0;
  std::size_t words_per_code_ = 0;
  std::vector<std::uint64_t> codes_;
  std::vector<std::uint64_t> ids_;
};

/// Throws std::invalid_argument on misaligned or empty inputs, duplicate ids,
/// or codes whose length differs from the encoder's.
SearchIndex build_index(const std::vector<HashCode>& codes, std::vector<std::uint64_t> ids,
                        Encoder encoder);

/// Encodes every base vector (id = position) and builds the index.
SearchIndex encode_and_build(Encoder encoder, const VectorStore& base);
SearchIndex encode_and_build(Encoder encoder, const VectorSet& base);

/// The L ids with the smallest Hamming distance to q, ordered by (distance,
/// id). Linear scan; ties at the cut go to the smaller ids.
std::vector<std::uint64_t> shortlist(const SearchIndex& index, const HashCode& q, std::size_t L);

/// Exact re-rank of `candidates` against q_vec; returns the best R.
SearchResult rerank(const VectorStore& base, VectorView q_vec,
                    std::span<const std::uint64_t> candidates, std::size_t R, Metric metric);

/// Encode q_vec, shortlist L candidates by Hamming distance, re-rank them
/// exactly and keep the top R.
SearchResult search(const SearchIndex& index, const VectorStore& base, VectorView q_vec,
                    std::size_t L, std::size_t R, Metric metric);

/// search() for every row of `queries`, parallel over queries.
std::vector<SearchResult> search_batch(const SearchIndex& index, const VectorStore& base,
                                       const VectorSet& queries, std::size_t L, std::size_t R,
                                       Metric metric);

}  // namespace mkmh
