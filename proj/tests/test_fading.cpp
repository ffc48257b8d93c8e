#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qpower/fading.hpp"

using namespace qpower;

TEST(Fading, SameSeedGivesIdenticalSets) {
  const auto a = sample_training_set(BandModels{}, 1, 4, 7);
  const auto b = sample_training_set(BandModels{}, 1, 4, 7);
  EXPECT_EQ(a, b);
  const auto c = sample_training_set(BandModels{}, 1, 4, 8);
  EXPECT_NE(a.band(0).g1[0], c.band(0).g1[0]);
}

TEST(Fading, PrefixOfALongerSetMatches) {
  const auto a = sample_training_set(BandModels{}, 3, 10, 5);
  const auto b = sample_training_set(BandModels{}, 3, 1000, 5);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t n = 0; n < 10; ++n) {
      EXPECT_EQ(a.band(i).g0[n], b.band(i).g0[n]);
      EXPECT_EQ(a.band(i).g1[n], b.band(i).g1[n]);
    }
}

TEST(Fading, GeneratorMatchesReferenceMixer) {
  // first output of the reference SplitMix64 generator seeded with 0
  EXPECT_EQ(rng::splitmix64(rng::kGolden), 0xE220A8397B1DCDAFULL);
  const double u = rng::uniform(rng::stream_key(1, 0, 1), 0);
  EXPECT_GE(u, 0.0);
  EXPECT_LT(u, 1.0);
}

TEST(Fading, DeterministicModelCycles) {
  BandModels m{FadingModel::deterministic({1.0}), FadingModel::deterministic({1.0})};
  const auto t = sample_training_set(m, 2, 3, 11);
  for (std::size_t n = 0; n < 3; ++n) {
    const ChannelSample s = t.sample(n);
    EXPECT_EQ(s.g0, (std::vector<double>{1.0, 1.0}));
    EXPECT_EQ(s.g1, (std::vector<double>{1.0, 1.0}));
  }
  BandModels c{FadingModel::deterministic({1.0, 2.0, 3.0}), FadingModel{}};
  const auto u = sample_training_set(c, 1, 5, 0);
  EXPECT_EQ(u.band(0).g0[3], 1.0);
  EXPECT_EQ(u.band(0).g0[4], 2.0);
}

TEST(Fading, EmpiricalMeanOfOneMillionSamples) {
  const auto t = sample_training_set(BandModels{}, 1, 1000000, 3);
  double s = 0.0;
  for (double g : t.band(0).g1) s += g;
  EXPECT_NEAR(s / 1e6, 1.0, 0.004);
}

TEST(Fading, LawOfLargeNumbersAndIndependence) {
  const std::size_t N = 100000;
  const auto t = sample_training_set(BandModels{}, 2, N, 1);
  for (std::size_t i = 0; i < 2; ++i) {
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      m0 += t.band(i).g0[n];
      m1 += t.band(i).g1[n];
    }
    m0 /= N;
    m1 /= N;
    EXPECT_LE(std::abs(m0 - 1.0), 4.0 / std::sqrt(double(N)));
    EXPECT_LE(std::abs(m1 - 1.0), 4.0 / std::sqrt(double(N)));
    double c = 0.0, v0 = 0.0, v1 = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const double a = t.band(i).g0[n] - m0, b = t.band(i).g1[n] - m1;
      c += a * b;
      v0 += a * a;
      v1 += b * b;
    }
    EXPECT_LT(std::abs(c / std::sqrt(v0 * v1)), 0.02);
  }
}

TEST(Fading, ScaledExponentialMean) {
  BandModels m{FadingModel::exponential(2.0), FadingModel::exponential(0.5)};
  const auto t = sample_training_set(m, 1, 200000, 9);
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t n = 0; n < t.size(); ++n) {
    s0 += t.band(0).g0[n];
    s1 += t.band(0).g1[n];
  }
  EXPECT_NEAR(s0 / t.size(), 2.0, 0.03);
  EXPECT_NEAR(s1 / t.size(), 0.5, 0.008);
}

TEST(Fading, PerBandModels) {
  std::vector<BandModels> ms{BandModels{}, BandModels{FadingModel::deterministic({4.0}), FadingModel{}}};
  const auto t = sample_training_set(ms, 2, 3, 1);
  EXPECT_EQ(t.band(1).g0[2], 4.0);
  EXPECT_NE(t.band(0).g0[2], 4.0);
  EXPECT_THROW(sample_training_set(ms, 3, 3, 1), DimensionMismatch);
}

TEST(Fading, PdfValues) {
  EXPECT_DOUBLE_EQ(pdf_eval(FadingModel::exponential(1.0), 0.0), 1.0);
  EXPECT_NEAR(pdf_eval(FadingModel::exponential(1.0), 1.0), 0.367879, 1e-6);
  EXPECT_DOUBLE_EQ(pdf_eval(FadingModel::exponential(2.0), 0.0), 0.5);
  EXPECT_THROW(pdf_eval(FadingModel::deterministic({1.0}), 0.5), UnsupportedOperation);
}

TEST(Fading, InvalidParameters) {
  EXPECT_THROW(FadingModel::exponential(0.0), ConfigError);
  EXPECT_THROW(FadingModel::exponential(-1.0), ConfigError);
  EXPECT_THROW(FadingModel::deterministic({}), ConfigError);
  EXPECT_THROW(FadingModel::deterministic({-0.5}), ConfigError);
  EXPECT_THROW(sample_training_set(BandModels{}, 0, 10, 1), ConfigError);
  EXPECT_THROW(sample_training_set(BandModels{}, 1, 0, 1), ConfigError);
}

TEST(Fading, DefaultIsUnitMeanExponential) {
  BandModels m;
  EXPECT_EQ(m.g0.kind(), FadingModel::Kind::Exponential);
  EXPECT_EQ(m.g1.mean(), 1.0);
}
