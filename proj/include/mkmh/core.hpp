#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mkmh {

// ============================================================================
// Errors
// ============================================================================

/// Malformed or inconsistent on-disk data. Carries the byte offset at which
/// the problem was detected when one is known.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what, std::int64_t offset = -1);
  std::int64_t offset() const noexcept { return offset_; }

 private:
  std::int64_t offset_;
};

/// A store or index refers to data that is not there.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ============================================================================
// Dense vectors
// ============================================================================

using VectorView = std::span<const float>;

/**
 * Row-major set of equal-dimension float descriptors.
 *
 * Every stored component is finite; append() rejects NaN/Inf.
 */
class VectorSet {
 public:
  VectorSet() = default;
  explicit VectorSet(std::size_t dim);
  VectorSet(std::size_t dim, std::vector<float> data);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const noexcept { return data_.empty(); }

  VectorView operator[](std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<float> mutable_row(std::size_t i) {
    return {data_.data() + i * dim_, dim_};
  }

  void append(VectorView v);
  void reserve(std::size_t n) { data_.reserve(n * dim_); }

  const std::vector<float>& data() const noexcept { return data_; }

  bool operator==(const VectorSet&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

/// Throws std::invalid_argument unless every component is finite.
void require_finite(VectorView v);

double squared_euclidean_distance(VectorView a, VectorView b);
double euclidean_distance(VectorView a, VectorView b);
double dot(VectorView a, VectorView b);
double norm(VectorView a);

/// dot(a,b) / (|a| |b|). Throws std::invalid_argument on a zero-norm input.
double cosine_similarity(VectorView a, VectorView b);

// ============================================================================
// Hash codes
// ============================================================================

/**
 * Fixed-length bit signature packed into 64-bit words.
 *
 * Bit j lives in bit (j % 64) of word (j / 64). Bits at positions >= length()
 * are always zero so word-wise popcount gives the logical Hamming weight.
 */
class HashCode {
 public:
  HashCode() = default;
  explicit HashCode(std::size_t length);
  /// Adopts packed words; throws if padding bits are set or the word count
  /// does not match the length.
  HashCode(std::size_t length, std::vector<std::uint64_t> words);

  static std::size_t words_for(std::size_t length) { return (length + 63) / 64; }

  std::size_t length() const noexcept { return length_; }
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  void set(std::size_t j);
  bool test(std::size_t j) const;
  std::size_t popcount() const noexcept;

  /// Appends `other` after the last bit of this code.
  void append(const HashCode& other);

  bool operator==(const HashCode&) const = default;

  /// Bits as a '0'/'1' string, bit 0 first.
  std::string to_string() const;

 private:
  std::size_t length_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Throws std::invalid_argument on length mismatch.
std::size_t hamming_distance(const HashCode& a, const HashCode& b);

inline std::size_t hamming_words(const std::uint64_t* a, const std::uint64_t* b,
                                 std::size_t n_words) {
  std::size_t d = 0;
  for (std::size_t w = 0; w < n_words; ++w) {
    d += static_cast<std::size_t>(std::popcount(a[w] ^ b[w]));
  }
  return d;
}

// ============================================================================
// Random-access descriptor sources
// ============================================================================

/// Random access to original descriptors by id, used at re-rank time.
class VectorStore {
 public:
  virtual ~VectorStore() = default;
  virtual std::size_t dim() const = 0;
  virtual std::size_t size() const = 0;
  /// Copies vector `id` into out (out.size() == dim()). Throws DataError when
  /// id is not present.
  virtual void fetch(std::uint64_t id, std::span<float> out) const = 0;
};

/// Non-owning store over a VectorSet; id i is row i.
class InMemoryStore final : public VectorStore {
 public:
  explicit InMemoryStore(const VectorSet& vectors) : vectors_(&vectors) {}
  std::size_t dim() const override { return vectors_->dim(); }
  std::size_t size() const override { return vectors_->size(); }
  void fetch(std::uint64_t id, std::span<float> out) const override;

 private:
  const VectorSet* vectors_;
};

}  // namespace mkmh
