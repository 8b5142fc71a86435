#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "dualcap/error.hpp"
#include "dualcap/features.hpp"
#include "dualcap/io.hpp"
#include "dualcap/rng.hpp"
#include "support/synthetic.hpp"

namespace dualcap {
namespace {

FeatureSequence single(Vector segment) {
  FeatureSequence seq{"v", segment.size(), {std::move(segment)}};
  return seq;
}

// Values are stored as float32, so random test data is drawn on that grid.
FeatureSequence random_sequence(Rng& rng, std::size_t n, std::size_t m) {
  FeatureSequence seq{"rand", m, {}};
  for (std::size_t s = 0; s < n; ++s) {
    Vector seg(m);
    for (auto& v : seg) v = static_cast<float>(rng.uniform(-10.0, 10.0));
    seq.segments.push_back(std::move(seg));
  }
  return seq;
}

double mean(const Vector& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

TEST(AveragePool, FullWindows) {
  const auto pooled = average_pool(single({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}), 5);
  ASSERT_EQ(pooled.pooled_segments.size(), 1u);
  EXPECT_EQ(pooled.pooled_segments[0], (Vector{3.0, 8.0}));
  EXPECT_EQ(pooled.summary, (Vector{3.0, 8.0}));
}

TEST(AveragePool, PartialWindowUsesActualLength) {
  const auto pooled = average_pool(single({1, 2, 3, 4, 5, 6, 7}), 5);
  EXPECT_EQ(pooled.pooled_segments[0], (Vector{3.0, 6.5}));
}

TEST(AveragePool, WindowOneIsIdentity) {
  Rng rng(1);
  const auto seq = random_sequence(rng, 3, 7);
  const auto pooled = average_pool(seq, 1);
  EXPECT_EQ(pooled.pooled_segments, seq.segments);
}

TEST(AveragePool, WindowZeroRejected) {
  EXPECT_THROW(average_pool(single({1, 2}), 0), ArgumentError);
}

TEST(AveragePool, Invariants) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(6), m = 1 + rng.below(40), w = 1 + rng.below(m);
    auto seq = random_sequence(rng, n, m);
    const auto pooled = average_pool(seq, w);
    ASSERT_EQ(pooled.pooled_segments.size(), n);
    const std::size_t dim = (m + w - 1) / w;
    EXPECT_EQ(pooled_dim(m, w), dim);
    ASSERT_EQ(pooled.summary.size(), dim);
    for (std::size_t j = 0; j < dim; ++j) {
      double sum = 0.0;
      for (const auto& p : pooled.pooled_segments) sum += p[j];
      EXPECT_NEAR(pooled.summary[j], sum / n, 1e-12);
    }
    if (m % w == 0) {
      for (std::size_t s = 0; s < n; ++s) {
        EXPECT_NEAR(mean(pooled.pooled_segments[s]), mean(seq.segments[s]), 1e-9);
      }
    }
    // The summary ignores segment order.
    std::reverse(seq.segments.begin(), seq.segments.end());
    const auto reversed = average_pool(seq, w);
    for (std::size_t j = 0; j < dim; ++j) EXPECT_NEAR(reversed.summary[j], pooled.summary[j], 1e-12);
  }
}

TEST(AveragePool, ConstantInputStaysConstant) {
  const auto pooled = average_pool(single(Vector(12, 4.25)), 5);
  EXPECT_EQ(pooled.pooled_segments[0], (Vector{4.25, 4.25, 4.25}));
}

TEST(FeatureFile, HeaderAndPayload) {
  Rng rng(3);
  const auto seq = random_sequence(rng, 4, 10);
  const std::string bytes = encode_features(seq);
  ASSERT_EQ(bytes.size(), 16u + 40u * 4u);
  EXPECT_EQ(bytes.substr(0, 4), "VFEA");
  const auto back = decode_features(bytes, "rand");
  EXPECT_EQ(back.segments.size(), 4u);
  EXPECT_EQ(back.feature_dim, 10u);
  EXPECT_EQ(back, seq);
}

TEST(FeatureFile, MissingFloatIsFormatError) {
  Rng rng(4);
  const std::string bytes = encode_features(random_sequence(rng, 4, 10));
  try {
    decode_features(bytes.substr(0, bytes.size() - 4), "x");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 16u + 39u * 4u);
  }
}

TEST(FeatureFile, Corruptions) {
  Rng rng(5);
  const std::string good = encode_features(random_sequence(rng, 2, 3));

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_features(bad_magic, "x"), FormatError);

  std::string bad_version = good;
  bad_version[4] = 2;
  EXPECT_THROW(decode_features(bad_version, "x"), FormatError);

  EXPECT_THROW(decode_features(good + "z", "x"), FormatError);
  EXPECT_THROW(decode_features(good.substr(0, 10), "x"), FormatError);

  std::string nan = good;
  const float q = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan.data() + 16 + 4 * 4, &q, 4);
  try {
    decode_features(nan, "x");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 16u + 16u);
  }
}

TEST(FeatureFile, RoundTripThroughDisk) {
  Rng rng(6);
  const auto dir = testing::scratch_dir("features_roundtrip");
  for (int trial = 0; trial < 20; ++trial) {
    auto seq = random_sequence(rng, 1 + rng.below(5), 1 + rng.below(30));
    seq.video_id = "vid" + std::to_string(trial);
    const auto path = dir / (seq.video_id + ".vfea");
    write_features(seq, path);
    const auto back = load_features(path);
    EXPECT_EQ(back, seq);
    EXPECT_EQ(encode_features(back), read_file(path));
  }
}

TEST(ProjectSummary, Oracles) {
  const Vector fa{0.5, -1.0, 2.0};
  EXPECT_EQ(project_summary(fa, Matrix::identity(3), Vector(3, 0.0)), fa);
  EXPECT_EQ(project_summary(fa, Matrix(2, 3), Vector{7.0, -7.0}), (Vector{7.0, -7.0}));

  Rng rng(7);
  Matrix p(8, 4);
  for (auto& v : p.values()) v = rng.uniform(-1.0, 1.0);
  Vector x(4), b(8);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  for (auto& v : b) v = rng.uniform(-1.0, 1.0);
  const Vector y = project_summary(x, p, b);
  for (std::size_t r = 0; r < 8; ++r) {
    double expected = b[r];
    for (std::size_t c = 0; c < 4; ++c) expected += p(r, c) * x[c];
    EXPECT_NEAR(y[r], expected, 1e-12);
  }
  EXPECT_THROW(project_summary(Vector(5), p, b), DimensionError);
}

TEST(FeatureStore, DefaultLayoutAndManifest) {
  const auto dir = testing::scratch_dir("feature_store");
  Rng rng(8);
  auto seq = random_sequence(rng, 2, 5);
  seq.video_id = "clip";
  write_features(seq, dir / "clip.vfea");
  FeatureStore plain(dir);
  EXPECT_TRUE(plain.contains("clip"));
  EXPECT_FALSE(plain.contains("other"));
  EXPECT_EQ(plain.load("clip").segments, seq.segments);
  EXPECT_THROW(plain.load("other"), ArgumentError);

  write_features(seq, dir / "nested" / "x.vfea");
  write_file(dir / "features.json", R"({"other": "nested/x.vfea"})");
  FeatureStore mapped(dir);
  EXPECT_TRUE(mapped.contains("other"));
  EXPECT_EQ(mapped.load("other").segments, seq.segments);
  EXPECT_EQ(mapped.load("other").video_id, "other");
}

}  // namespace
}  // namespace dualcap
