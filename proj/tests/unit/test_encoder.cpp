#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "mkmh/encoder.hpp"
#include "mkmh/kmeans.hpp"
#include "oracles/naive.hpp"
#include "unit/test_support.hpp"

using namespace mkmh;

namespace {

const Codebook& trained_codebook() {
  static const Codebook cb = [] {
    TrainParams p;
    p.seed = 5;
    return train(test::random_vectors(3000, 32, 1), 64, p);
  }();
  return cb;
}

VectorSet scaled(const VectorSet& s, float f) {
  VectorSet out(s.dim());
  std::vector<float> row(s.dim());
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t d = 0; d < s.dim(); ++d) row[d] = s[i][d] * f;
    out.append(row);
  }
  return out;
}

Encoder scaled_encoder(const Encoder& e, float f) {
  if (const auto* d = e.dual()) {
    return Encoder(e.spec(), DualCodebook(Codebook(scaled(d->first().centroids(), f)),
                                          Codebook(scaled(d->second().centroids(), f))));
  }
  return Encoder(e.spec(), Codebook(scaled(e.single()->centroids(), f)));
}

}  // namespace

TEST(Names, RoundTrip) {
  for (auto v : {Variant::T, Variant::N, Variant::T2, Variant::N2}) {
    EXPECT_EQ(parse_variant(to_string(v)), v);
  }
  EXPECT_EQ(parse_mean_kind("geom"), MeanKind::Geometric);
  EXPECT_THROW(parse_variant("x"), std::invalid_argument);
  EXPECT_TRUE(is_dual(Variant::N2));
  EXPECT_FALSE(is_dual(Variant::N));
}

TEST(ThresholdDelta, HandExamples) {
  const std::vector<double> d{2.0, 8.0};
  EXPECT_NEAR(threshold_delta(d, MeanKind::Geometric), 4.0, 1e-12);
  EXPECT_DOUBLE_EQ(threshold_delta(d, MeanKind::Arithmetic), 5.0);
  const std::vector<double> same(7, 0.1);
  EXPECT_EQ(threshold_delta(same, MeanKind::Arithmetic), 0.1);
  EXPECT_EQ(threshold_delta(same, MeanKind::Geometric), 0.1);
  EXPECT_THROW(threshold_delta(std::vector<double>{}, MeanKind::Arithmetic), std::invalid_argument);
  EXPECT_THROW(threshold_delta(std::vector<double>{1.0, -1.0}, MeanKind::Arithmetic),
               std::invalid_argument);
}

TEST(ThresholdDelta, ZeroDistanceGeometric) {
  const std::vector<double> d{3.0, 0.0, 5.0, 0.0};
  EXPECT_EQ(threshold_delta(d, MeanKind::Geometric), 0.0);
  const auto code = assign_by_threshold(d, MeanKind::Geometric);
  EXPECT_EQ(code.to_string(), "0101");
}

TEST(EncodeT, ExactCentroidSetsItsBit) {
  VectorSet c(2, {0, 0, 10, 0, 0, 10, 10, 10});
  const Codebook cb(c);
  const auto code = encode_t(cb.centroid(2), cb, MeanKind::Arithmetic);
  EXPECT_TRUE(code.test(2));
  EXPECT_EQ(code.length(), 4U);
}

TEST(EncodeT, EquidistantSetsAllBits) {
  // Centroids on a circle of radius 0.1 around the query.
  VectorSet c(2, {0.1F, 0, -0.1F, 0, 0, 0.1F, 0, -0.1F});
  const Codebook cb(c);
  const std::vector<float> x{0, 0};
  EXPECT_EQ(encode_t(x, cb, MeanKind::Arithmetic).popcount(), 4U);
  EXPECT_EQ(encode_t(x, cb, MeanKind::Geometric).popcount(), 4U);
}

TEST(EncodeT, MatchesNaiveOracleAndNonEmpty) {
  const auto& cb = trained_codebook();
  const auto xs = test::random_vectors(1000, 32, 2);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto d = oracle::distances(xs[i], cb.centroids());
    for (bool geo : {false, true}) {
      const auto code = encode_t(xs[i], cb, geo ? MeanKind::Geometric : MeanKind::Arithmetic);
      ASSERT_EQ(oracle::to_bits(code), oracle::threshold_bits(d, geo)) << "row " << i;
      EXPECT_GE(code.popcount(), 1U);
    }
  }
}

TEST(EncodeT, GeometricBitsSubsetOfArithmetic) {
  // The geometric mean never exceeds the arithmetic mean.
  const auto& cb = trained_codebook();
  const auto xs = test::random_vectors(300, 32, 3);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto g = encode_t(xs[i], cb, MeanKind::Geometric);
    const auto a = encode_t(xs[i], cb, MeanKind::Arithmetic);
    for (std::size_t j = 0; j < g.length(); ++j) {
      if (g.test(j)) EXPECT_TRUE(a.test(j));
    }
  }
}

TEST(EncodeN, PopcountIsExactlyN) {
  const auto& cb = trained_codebook();
  const auto xs = test::random_vectors(200, 32, 4);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto d = oracle::distances(xs[i], cb.centroids());
    for (std::size_t n : {1U, 2U, 8U, 32U, 63U, 64U}) {
      const auto code = encode_n(xs[i], cb, n);
      ASSERT_EQ(code.popcount(), n);
      ASSERT_EQ(oracle::to_bits(code), oracle::nearest_bits(d, n));
    }
  }
}

TEST(EncodeN, NOneIsHardAssignment) {
  const auto& cb = trained_codebook();
  const auto xs = test::random_vectors(500, 32, 6);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto code = encode_n(xs[i], cb, 1);
    EXPECT_TRUE(code.test(nearest_centroid(xs[i], cb.centroids())));
  }
}

TEST(EncodeN, TiesBreakTowardLowerIndex) {
  const std::vector<double> d{1.0, 0.5, 0.5, 0.5, 2.0};
  EXPECT_EQ(assign_n_nearest(d, 2).to_string(), "01100");
  EXPECT_EQ(assign_n_nearest(d, 5).popcount(), 5U);
  EXPECT_THROW(assign_n_nearest(d, 0), std::invalid_argument);
  EXPECT_THROW(assign_n_nearest(d, 6), std::invalid_argument);
}

TEST(SplitTraining, SizesDisjointDeterministic) {
  for (std::size_t n : {10U, 11U}) {
    const auto data = test::random_vectors(n, 3, n);
    const auto [a, b] = split_training(data, 17);
    EXPECT_EQ(a.size(), (n + 1) / 2);
    EXPECT_EQ(b.size(), n / 2);
    std::multiset<std::vector<float>> all, parts;
    for (std::size_t i = 0; i < n; ++i) all.insert({data[i].begin(), data[i].end()});
    for (std::size_t i = 0; i < a.size(); ++i) parts.insert({a[i].begin(), a[i].end()});
    for (std::size_t i = 0; i < b.size(); ++i) parts.insert({b[i].begin(), b[i].end()});
    EXPECT_EQ(all, parts);
    const auto again = split_training(data, 17);
    EXPECT_EQ(again.first, a);
    EXPECT_EQ(again.second, b);
  }
  EXPECT_THROW(split_training(test::random_vectors(5, 2, 0), 0, 3), std::invalid_argument);
}

TEST(Dual, SymmetricConstructionRepeatsSubCode) {
  const Codebook cb(test::random_vectors(8, 4, 3));
  const DualCodebook dcb(cb, cb);
  EncoderSpec spec;
  spec.variant = Variant::T2;
  const auto code = encode_dual(cb.centroid(5), dcb, spec);
  ASSERT_EQ(code.length(), 16U);
  const auto sub = encode_t(cb.centroid(5), cb, MeanKind::Arithmetic);
  for (std::size_t j = 0; j < 8; ++j) {
    EXPECT_EQ(code.test(j), sub.test(j));
    EXPECT_EQ(code.test(j + 8), sub.test(j));
  }
}

TEST(Dual, N2PopcountAndTraining) {
  TrainParams p;
  p.seed = 2;
  const auto dcb = train_dual(test::random_vectors(2000, 16, 8), 32, p);
  EXPECT_EQ(dcb.first().k(), 32U);
  EXPECT_EQ(dcb.second().k(), 32U);
  EXPECT_FALSE(dcb.first() == dcb.second());
  EncoderSpec spec{Variant::N2, MeanKind::Arithmetic, 16};
  const Encoder enc(spec, dcb);
  EXPECT_EQ(enc.code_length(), 64U);
  const auto xs = test::random_vectors(100, 16, 9);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_EQ(enc.encode(xs[i]).popcount(), 32U);
}

TEST(Dual, MismatchedHalvesRejected) {
  EXPECT_THROW(DualCodebook(Codebook(test::random_vectors(4, 3, 1)),
                            Codebook(test::random_vectors(5, 3, 2))),
               std::invalid_argument);
  EXPECT_THROW(DualCodebook(Codebook(test::random_vectors(4, 3, 1)),
                            Codebook(test::random_vectors(4, 2, 2))),
               std::invalid_argument);
}

TEST(Encoder, ValidatesPairingAndN) {
  const Codebook cb(test::random_vectors(8, 4, 3));
  EXPECT_THROW(Encoder({Variant::T2, MeanKind::Arithmetic, 1}, cb), std::invalid_argument);
  EXPECT_THROW(Encoder({Variant::N, MeanKind::Arithmetic, 9}, cb), std::invalid_argument);
  EXPECT_THROW(Encoder({Variant::T, MeanKind::Arithmetic, 1}, DualCodebook(cb, cb)),
               std::invalid_argument);
  EXPECT_NO_THROW(Encoder({Variant::N, MeanKind::Arithmetic, 8}, cb));
}

TEST(Encoder, ScaleEquivariantAllVariants) {
  TrainParams p;
  p.seed = 4;
  const auto learn = test::random_vectors(2000, 16, 10);
  const Codebook cb = train(learn, 16, p);
  const auto dcb = train_dual(learn, 8, p);
  const std::vector<Encoder> encoders{
      Encoder({Variant::T, MeanKind::Arithmetic, 1}, cb),
      Encoder({Variant::T, MeanKind::Geometric, 1}, cb),
      Encoder({Variant::N, MeanKind::Arithmetic, 5}, cb),
      Encoder({Variant::T2, MeanKind::Arithmetic, 1}, dcb),
      Encoder({Variant::N2, MeanKind::Arithmetic, 3}, dcb)};
  const auto xs = test::random_vectors(300, 16, 11);
  for (float s : {0.001F, 1000.0F}) {
    const auto xs_s = scaled(xs, s);
    for (const auto& e : encoders) {
      const Encoder es = scaled_encoder(e, s);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        ASSERT_EQ(e.encode(xs[i]), es.encode(xs_s[i])) << to_string(e.spec().variant) << " s=" << s;
      }
    }
  }
}

TEST(EncoderIO, SpecAndDualRoundTrip) {
  std::stringstream ss;
  write_encoder_spec(ss, {Variant::N2, MeanKind::Geometric, 12});
  EXPECT_EQ(ss.str().size(), 6U);
  const auto spec = read_encoder_spec(ss);
  EXPECT_EQ(spec.variant, Variant::N2);
  EXPECT_EQ(spec.mean_kind, MeanKind::Geometric);
  EXPECT_EQ(spec.n_nearest, 12U);

  test::TempDir dir("enc");
  const DualCodebook dcb(Codebook(test::random_vectors(4, 3, 1)), Codebook(test::random_vectors(4, 3, 2)));
  save_dual_codebook(dir.file("d.bin"), dcb);
  EXPECT_EQ(load_dual_codebook(dir.file("d.bin")), dcb);
  EXPECT_TRUE(std::holds_alternative<DualCodebook>(load_any_codebook(dir.file("d.bin"))));
  save_codebook(dir.file("s.bin"), dcb.first());
  EXPECT_TRUE(std::holds_alternative<Codebook>(load_any_codebook(dir.file("s.bin"))));
  EXPECT_THROW(load_dual_codebook(dir.file("s.bin")), FormatError);
}

TEST(EncoderIO, BadEnumTagsRejected) {
  std::stringstream ss(std::string("\x07\x00\x01\x00\x00\x00", 6));
  EXPECT_THROW(read_encoder_spec(ss), FormatError);
}
