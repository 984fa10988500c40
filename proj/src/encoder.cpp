#include "mkmh/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "binio.hpp"
#include "mkmh/random.hpp"

namespace mkmh {

bool is_dual(Variant v) noexcept { return v == Variant::T2 || v == Variant::N2; }

std::string to_string(Variant v) {
  switch (v) {
    case Variant::T: return "t";
    case Variant::N: return "n";
    case Variant::T2: return "t2";
    case Variant::N2: return "n2";
  }
  return "?";
}

std::string to_string(MeanKind m) {
  return m == MeanKind::Arithmetic ? "arith" : "geom";
}

Variant parse_variant(const std::string& s) {
  if (s == "t") return Variant::T;
  if (s == "n") return Variant::N;
  if (s == "t2") return Variant::T2;
  if (s == "n2") return Variant::N2;
  throw std::invalid_argument("unknown variant '" + s + "' (expected t, n, t2 or n2)");
}

MeanKind parse_mean_kind(const std::string& s) {
  if (s == "arith") return MeanKind::Arithmetic;
  if (s == "geom") return MeanKind::Geometric;
  throw std::invalid_argument("unknown mean kind '" + s + "' (expected arith or geom)");
}

DualCodebook::DualCodebook(Codebook first, Codebook second)
    : first_(std::move(first)), second_(std::move(second)) {
  if (first_.dim() != second_.dim()) {
    throw std::invalid_argument("DualCodebook: sub-codebook dimensions differ");
  }
  if (first_.k() != second_.k()) {
    throw std::invalid_argument("DualCodebook: sub-codebook sizes differ");
  }
}

double threshold_delta(std::span<const double> dists, MeanKind kind) {
  if (dists.empty()) throw std::invalid_argument("threshold_delta: empty distance list");
  double lo = dists[0];
  double hi = dists[0];
  for (double d : dists) {
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw std::invalid_argument("threshold_delta: distances must be finite and >= 0");
    }
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  const double k = static_cast<double>(dists.size());
  double delta;
  if (kind == MeanKind::Arithmetic) {
    double s = 0.0;
    for (double d : dists) s += d;
    delta = s / k;
  } else {
    if (lo == 0.0) return 0.0;
    double s = 0.0;
    for (double d : dists) s += std::log(d);
    delta = std::exp(s / k);
  }
  return std::clamp(delta, lo, hi);
}

HashCode assign_by_threshold(std::span<const double> dists, MeanKind mean_kind) {
  const double delta = threshold_delta(dists, mean_kind);
  HashCode code(dists.size());
  for (std::size_t j = 0; j < dists.size(); ++j) {
    if (dists[j] <= delta) code.set(j);
  }
  return code;
}

HashCode assign_n_nearest(std::span<const double> dists, std::size_t n) {
  if (n < 1 || n > dists.size()) {
    throw std::invalid_argument("encode_n: n=" + std::to_string(n) + " outside [1, " +
                                std::to_string(dists.size()) + "]");
  }
  std::vector<std::uint32_t> order(dists.size());
  std::iota(order.begin(), order.end(), 0U);
  const auto closer = [&](std::uint32_t a, std::uint32_t b) {
    return dists[a] < dists[b] || (dists[a] == dists[b] && a < b);
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n - 1), order.end(),
                   closer);
  HashCode code(dists.size());
  for (std::size_t i = 0; i < n; ++i) code.set(order[i]);
  return code;
}

HashCode encode_t(VectorView x, const Codebook& cb, MeanKind mean_kind) {
  const auto dists = distances_to_centroids(x, cb);
  return assign_by_threshold(dists, mean_kind);
}

HashCode encode_n(VectorView x, const Codebook& cb, std::size_t n) {
  if (n < 1 || n > cb.k()) {
    throw std::invalid_argument("encode_n: n=" + std::to_string(n) + " outside [1, " +
                                std::to_string(cb.k()) + "]");
  }
  const auto dists = distances_to_centroids(x, cb);
  return assign_n_nearest(dists, n);
}

std::pair<VectorSet, VectorSet> split_training(const VectorSet& data, std::uint64_t seed,
                                               std::size_t min_per_half) {
  const std::size_t n = data.size();
  if (n < 2 * std::max<std::size_t>(1, min_per_half)) {
    throw std::invalid_argument("split_training: " + std::to_string(n) +
                                " points cannot fill two halves of at least " +
                                std::to_string(std::max<std::size_t>(1, min_per_half)));
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.index(i + 1));
    std::swap(perm[i], perm[j]);
  }
  const std::size_t first_size = (n + 1) / 2;
  VectorSet a(data.dim());
  VectorSet b(data.dim());
  a.reserve(first_size);
  b.reserve(n - first_size);
  for (std::size_t i = 0; i < n; ++i) {
    (i < first_size ? a : b).append(data[perm[i]]);
  }
  return {std::move(a), std::move(b)};
}

namespace {

HashCode encode_with(VectorView x, const Codebook& cb, const EncoderSpec& spec) {
  switch (spec.variant) {
    case Variant::T:
    case Variant::T2:
      return encode_t(x, cb, spec.mean_kind);
    case Variant::N:
    case Variant::N2:
      return encode_n(x, cb, spec.n_nearest);
  }
  throw std::invalid_argument("unknown encoder variant");
}

}  // namespace

HashCode encode_dual(VectorView x, const DualCodebook& dcb, const EncoderSpec& spec) {
  if (!is_dual(spec.variant)) {
    throw std::invalid_argument("encode_dual: variant " + to_string(spec.variant) +
                                " is not a dual-codebook variant");
  }
  HashCode code = encode_with(x, dcb.first(), spec);
  code.append(encode_with(x, dcb.second(), spec));
  return code;
}

DualCodebook train_dual(const VectorSet& data, std::size_t k_sub, const TrainParams& params) {
  auto [half_a, half_b] =
      split_training(data, derive_seed(params.seed, streams::kTrainingSplit), k_sub);
  TrainParams pa = params;
  pa.seed = derive_seed(params.seed, streams::kCodebookFirst);
  TrainParams pb = params;
  pb.seed = derive_seed(params.seed, streams::kCodebookSecond);
  return DualCodebook(train(half_a, k_sub, pa), train(half_b, k_sub, pb));
}

// ----------------------------------------------------------------------------

Encoder::Encoder(EncoderSpec spec, Codebook cb) : spec_(spec), books_(std::move(cb)) { validate(); }

Encoder::Encoder(EncoderSpec spec, DualCodebook dcb) : spec_(spec), books_(std::move(dcb)) {
  validate();
}

void Encoder::validate() const {
  if (spec_.mean_kind != MeanKind::Arithmetic && spec_.mean_kind != MeanKind::Geometric) {
    throw std::invalid_argument("Encoder: unknown mean kind");
  }
  std::size_t k = 0;
  if (is_dual(spec_.variant)) {
    if (!dual()) {
      throw std::invalid_argument("Encoder: variant " + to_string(spec_.variant) +
                                  " needs a dual codebook");
    }
    k = dual()->first().k();
  } else {
    if (!single()) {
      throw std::invalid_argument("Encoder: variant " + to_string(spec_.variant) +
                                  " needs a single codebook");
    }
    k = single()->k();
  }
  if ((spec_.variant == Variant::N || spec_.variant == Variant::N2) &&
      (spec_.n_nearest < 1 || spec_.n_nearest > k)) {
    throw std::invalid_argument("Encoder: n_nearest=" + std::to_string(spec_.n_nearest) +
                                " outside [1, " + std::to_string(k) + "]");
  }
}

std::size_t Encoder::code_length() const noexcept {
  if (const auto* d = dual()) return d->first().k() + d->second().k();
  return single()->k();
}

std::size_t Encoder::dim() const noexcept {
  if (const auto* d = dual()) return d->dim();
  return single()->dim();
}

HashCode Encoder::encode(VectorView x) const {
  if (const auto* d = dual()) return encode_dual(x, *d, spec_);
  return encode_with(x, *single(), spec_);
}

// ----------------------------------------------------------------------------

void write_encoder_spec(std::ostream& os, const EncoderSpec& spec) {
  binio::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(spec.variant));
  binio::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(spec.mean_kind));
  binio::put_le<std::uint32_t>(os, spec.n_nearest);
}

EncoderSpec read_encoder_spec(std::istream& is) {
  binio::Reader r(is);
  EncoderSpec spec;
  const std::int64_t at = r.offset();
  const auto v = r.get_le<std::uint8_t>("variant tag");
  if (v > 3) throw FormatError("unknown variant tag " + std::to_string(v), at);
  const auto m = r.get_le<std::uint8_t>("mean kind tag");
  if (m > 1) throw FormatError("unknown mean kind tag " + std::to_string(m), at + 1);
  spec.variant = static_cast<Variant>(v);
  spec.mean_kind = static_cast<MeanKind>(m);
  spec.n_nearest = r.get_le<std::uint32_t>("n_nearest");
  return spec;
}

void write_dual_codebook(std::ostream& os, const DualCodebook& dcb) {
  binio::put_magic(os, "MKM2");
  write_codebook(os, dcb.first());
  write_codebook(os, dcb.second());
}

DualCodebook read_dual_codebook(std::istream& is) {
  binio::Reader r(is);
  r.expect_magic("MKM2");
  const auto at = r.offset();
  Codebook first = read_codebook(is);
  Codebook second = read_codebook(is);
  try {
    return DualCodebook(std::move(first), std::move(second));
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what(), at);
  }
}

void save_dual_codebook(const std::string& path, const DualCodebook& dcb) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  write_dual_codebook(os, dcb);
  if (!os) throw DataError("write failed: " + path);
}

DualCodebook load_dual_codebook(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  return read_dual_codebook(is);
}

std::variant<Codebook, DualCodebook> load_any_codebook(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  char magic[4] = {};
  is.read(magic, 4);
  if (is.gcount() != 4) throw FormatError("truncated codebook file " + path, 0);
  is.seekg(0);
  const std::string m(magic, 4);
  if (m == "MKMC") return read_codebook(is);
  if (m == "MKM2") return read_dual_codebook(is);
  throw FormatError("not a codebook file (magic \"" + m + "\"): " + path, 0);
}

}  // namespace mkmh
