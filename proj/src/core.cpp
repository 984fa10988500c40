#include "mkmh/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mkmh {

namespace {

void require_same_dim(VectorView a, VectorView b) {
  if (a.size() != b.size()) {
    std::ostringstream os;
    os << "incompatible vectors: dimension " << a.size() << " vs " << b.size();
    throw std::invalid_argument(os.str());
  }
}

std::uint64_t tail_mask(std::size_t length) {
  const std::size_t r = length % 64;
  return r == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << r) - 1;
}

}  // namespace

FormatError::FormatError(const std::string& what, std::int64_t offset)
    : std::runtime_error(offset >= 0 ? what + " (at byte offset " + std::to_string(offset) + ")"
                                     : what),
      offset_(offset) {}

// ----------------------------------------------------------------------------

VectorSet::VectorSet(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("VectorSet: dimension must be positive");
}

VectorSet::VectorSet(std::size_t dim, std::vector<float> data) : dim_(dim), data_(std::move(data)) {
  if (dim == 0) throw std::invalid_argument("VectorSet: dimension must be positive");
  if (data_.size() % dim != 0) {
    throw std::invalid_argument("VectorSet: data length is not a multiple of the dimension");
  }
  require_finite(data_);
}

void VectorSet::append(VectorView v) {
  if (v.size() != dim_) {
    throw std::invalid_argument("VectorSet::append: expected dimension " + std::to_string(dim_) +
                                ", got " + std::to_string(v.size()));
  }
  require_finite(v);
  data_.insert(data_.end(), v.begin(), v.end());
}

void require_finite(VectorView v) {
  for (float x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite vector component");
  }
}

double squared_euclidean_distance(VectorView a, VectorView b) {
  require_same_dim(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

double euclidean_distance(VectorView a, VectorView b) {
  return std::sqrt(squared_euclidean_distance(a, b));
}

double dot(VectorView a, VectorView b) {
  require_same_dim(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return s;
}

double norm(VectorView a) { return std::sqrt(dot(a, a)); }

double cosine_similarity(VectorView a, VectorView b) {
  require_same_dim(a, b);
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) {
    throw std::invalid_argument("cosine_similarity: degenerate zero-norm vector");
  }
  return dot(a, b) / (na * nb);
}

// ----------------------------------------------------------------------------

HashCode::HashCode(std::size_t length) : length_(length), words_(words_for(length), 0) {}

HashCode::HashCode(std::size_t length, std::vector<std::uint64_t> words)
    : length_(length), words_(std::move(words)) {
  if (words_.size() != words_for(length)) {
    throw std::invalid_argument("HashCode: word count does not match length");
  }
  if (!words_.empty() && (words_.back() & ~tail_mask(length)) != 0) {
    throw std::invalid_argument("HashCode: padding bits beyond length are set");
  }
}

void HashCode::set(std::size_t j) {
  if (j >= length_) throw std::out_of_range("HashCode::set: bit index out of range");
  words_[j / 64] |= std::uint64_t{1} << (j % 64);
}

bool HashCode::test(std::size_t j) const {
  if (j >= length_) throw std::out_of_range("HashCode::test: bit index out of range");
  return (words_[j / 64] >> (j % 64)) & 1U;
}

std::size_t HashCode::popcount() const noexcept {
  std::size_t c = 0;
  for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

void HashCode::append(const HashCode& other) {
  const std::size_t base = length_;
  length_ += other.length_;
  words_.resize(words_for(length_), 0);
  const std::size_t shift = base % 64;
  const std::size_t first = base / 64;
  for (std::size_t w = 0; w < other.words_.size(); ++w) {
    const std::uint64_t v = other.words_[w];
    words_[first + w] |= v << shift;
    if (shift != 0 && first + w + 1 < words_.size()) {
      words_[first + w + 1] |= v >> (64 - shift);
    }
  }
}

std::string HashCode::to_string() const {
  std::string s(length_, '0');
  for (std::size_t j = 0; j < length_; ++j) {
    if (test(j)) s[j] = '1';
  }
  return s;
}

void InMemoryStore::fetch(std::uint64_t id, std::span<float> out) const {
  if (id >= vectors_->size()) {
    throw DataError("corrupt store: no base vector for id " + std::to_string(id));
  }
  const VectorView row = (*vectors_)[static_cast<std::size_t>(id)];
  std::copy(row.begin(), row.end(), out.begin());
}

std::size_t hamming_distance(const HashCode& a, const HashCode& b) {
  if (a.length() != b.length()) {
    throw std::invalid_argument("hamming_distance: code lengths differ (" +
                                std::to_string(a.length()) + " vs " + std::to_string(b.length()) +
                                ")");
  }
  return hamming_words(a.words().data(), b.words().data(), a.words().size());
}

}  // namespace mkmh
