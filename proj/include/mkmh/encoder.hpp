#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>

#include "mkmh/core.hpp"
#include "mkmh/kmeans.hpp"

namespace mkmh {

// Numeric values are the on-disk tags.
enum class Variant : std::uint8_t { T = 0, N = 1, T2 = 2, N2 = 3 };
enum class MeanKind : std::uint8_t { Arithmetic = 0, Geometric = 1 };

bool is_dual(Variant v) noexcept;
std::string to_string(Variant v);
std::string to_string(MeanKind m);
Variant parse_variant(const std::string& s);
MeanKind parse_mean_kind(const std::string& s);

/// Which bit-assignment rule to apply. For N2, n_nearest counts bits per
/// sub-codebook.
struct EncoderSpec {
  Variant variant = Variant::T;
  MeanKind mean_kind = MeanKind::Arithmetic;
  std::uint32_t n_nearest = 1;

  bool operator==(const EncoderSpec&) const = default;
};

/// Two codebooks of equal size and dimension, trained on disjoint halves of
/// one training set.
class DualCodebook {
 public:
  DualCodebook(Codebook first, Codebook second);

  const Codebook& first() const noexcept { return first_; }
  const Codebook& second() const noexcept { return second_; }
  std::size_t dim() const noexcept { return first_.dim(); }

  bool operator==(const DualCodebook&) const = default;

 private:
  Codebook first_;
  Codebook second_;
};

/// Arithmetic or geometric mean of centroid distances. The result is clamped
/// to [min, max] of the inputs, a range the exact mean always lies in; this
/// only guards against rounding. A zero distance makes the geometric mean 0.
double threshold_delta(std::span<const double> dists, MeanKind kind);

/// Bit j set iff |x - C_j| <= delta(mean_kind).
HashCode encode_t(VectorView x, const Codebook& cb, MeanKind mean_kind);

/// Bits of the n nearest centroids; distance ties go to the lower index.
HashCode encode_n(VectorView x, const Codebook& cb, std::size_t n);

/// The same rules applied to precomputed distances.
HashCode assign_by_threshold(std::span<const double> dists, MeanKind mean_kind);
HashCode assign_n_nearest(std::span<const double> dists, std::size_t n);

/// Random split into two disjoint halves; the first half takes the extra
/// point when the count is odd. Each half must hold at least `min_per_half`
/// points.
std::pair<VectorSet, VectorSet> split_training(const VectorSet& data, std::uint64_t seed,
                                               std::size_t min_per_half = 1);

/// Concatenation of the sub-codes of dcb.first() and dcb.second().
HashCode encode_dual(VectorView x, const DualCodebook& dcb, const EncoderSpec& spec);

/// Splits `data` with the kTrainingSplit stream of `seed` and trains one
/// codebook of k_sub centroids per half.
DualCodebook train_dual(const VectorSet& data, std::size_t k_sub, const TrainParams& params);

/**
 * An EncoderSpec bound to the codebook(s) it needs.
 *
 * Single variants (T, N) hold a Codebook; dual variants (T2, N2) hold a
 * DualCodebook. The pairing is checked on construction.
 */
class Encoder {
 public:
  Encoder(EncoderSpec spec, Codebook cb);
  Encoder(EncoderSpec spec, DualCodebook dcb);

  const EncoderSpec& spec() const noexcept { return spec_; }
  std::size_t code_length() const noexcept;
  std::size_t dim() const noexcept;

  const Codebook* single() const noexcept { return std::get_if<Codebook>(&books_); }
  const DualCodebook* dual() const noexcept { return std::get_if<DualCodebook>(&books_); }

  HashCode encode(VectorView x) const;

  bool operator==(const Encoder&) const = default;

 private:
  void validate() const;

  EncoderSpec spec_;
  std::variant<Codebook, DualCodebook> books_;
};

// EncoderSpec record: u8 variant, u8 mean_kind, u32 n_nearest.
void write_encoder_spec(std::ostream& os, const EncoderSpec& spec);
EncoderSpec read_encoder_spec(std::istream& is);

// DualCodebook file: "MKM2" followed by two codebook records.
void write_dual_codebook(std::ostream& os, const DualCodebook& dcb);
DualCodebook read_dual_codebook(std::istream& is);
void save_dual_codebook(const std::string& path, const DualCodebook& dcb);
DualCodebook load_dual_codebook(const std::string& path);

/// Loads either a single (MKMC) or dual (MKM2) codebook file.
std::variant<Codebook, DualCodebook> load_any_codebook(const std::string& path);

}  // namespace mkmh
