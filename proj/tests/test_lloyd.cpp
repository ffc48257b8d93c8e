#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "qpower/lloyd.hpp"

using namespace qpower;

namespace {

std::vector<double> copy(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(Nnc, ScoreExample) {
  TrainingSet t({{1.0}}, {{5.0}});
  const PowerCodebook cb({2.0, 0.5});
  EXPECT_NEAR(sample_score(1.0, 5.0, 2.0, 0.1, 0.1), 1.9979, 1e-4);
  EXPECT_NEAR(sample_score(1.0, 5.0, 0.5, 0.1, 0.1), 1.1528, 1e-4);
  EXPECT_EQ(nnc_assign(t.band(0), cb, 0.1, 0.1).labels[0], 0u);
}

TEST(Nnc, ZeroLevelWinsForWeakChannel) {
  TrainingSet t({{1.0}}, {{0.01}});
  EXPECT_EQ(nnc_assign(t.band(0), PowerCodebook({2.0, 0.0}), 0.1, 0.1).labels[0], 1u);
}

TEST(Nnc, TieOnBoundaryGoesToLowerIndex) {
  // p=1 against p=0 at lambda = 1, mu = 0 ties at log(1 + g1) = 1; step to
  // the nearest double where both scores are exactly equal
  double g1 = boundary_g1(1.0, 0.0, 1.0, 0.0, 0.0);
  double lo = g1, hi = g1;
  for (int k = 0; k < 64 && sample_score(0.0, g1, 1.0, 1.0, 0.0) != 0.0; ++k) {
    lo = std::nextafter(lo, 0.0);
    hi = std::nextafter(hi, 10.0);
    g1 = sample_score(0.0, lo, 1.0, 1.0, 0.0) == 0.0 ? lo : hi;
  }
  ASSERT_EQ(sample_score(0.0, g1, 1.0, 1.0, 0.0), 0.0);
  TrainingSet t({{0.0}}, {{g1}});
  EXPECT_EQ(nnc_assign(t.band(0), PowerCodebook({1.0, 0.0}), 1.0, 0.0).labels[0], 0u);
  // duplicated levels score identically everywhere
  EXPECT_EQ(nnc_assign(t.band(0), PowerCodebook({0.5, 0.5}), 1.0, 0.0).labels[0], 0u);
}

TEST(Nnc, MatchesBruteForceOracle) {
  const auto t = sample_training_set(BandModels{}, 1, 5000, 12);
  const BandView b = t.band(0);
  for (const auto& levels : {std::vector<double>{4.0, 2.0, 1.0, 0.0}, std::vector<double>{0.3, 3.0, 1.2},
                             std::vector<double>{5.0, 5.0, 0.1}}) {
    const Partition p = nnc_assign(b, PowerCodebook(levels), 0.2, 0.3);
    for (std::size_t n = 0; n < b.size(); ++n)
      ASSERT_EQ(p.labels[n], oracle::best_level(b.g0[n], b.g1[n], levels, 0.2, 0.3)) << n;
    double mass = 0.0;
    for (double m : p.region_mass) mass += m;
    EXPECT_NEAR(mass, 1.0, 1e-12);
  }
}

TEST(Nnc, EmptyCodebookRejected) {
  TrainingSet t({{1.0}}, {{1.0}});
  EXPECT_THROW(nnc_assign(t.band(0), PowerCodebook{}, 0.1, 0.1), ConfigError);
}

TEST(Centroid, Examples) {
  TrainingSet one({{0.7}}, {{2.0}});
  EXPECT_NEAR(centroid_power(one.band(0), 0.5, 0.0), 1.5, 1e-9);
  TrainingSet weak({{1.0, 1.0}}, {{0.25, 0.75}});
  EXPECT_EQ(centroid_power(weak.band(0), 1.0, 0.0), 0.0);
  TrainingSet two({{1.0, 1.0}}, {{1.0, 3.0}});
  const double closed = (1.0 + std::sqrt(10.0)) / 3.0;
  const double bis = oracle::centroid({1.0, 1.0}, {1.0, 3.0}, {1.0, 1.0}, 0.5, 0.0);
  EXPECT_NEAR(bis, closed, 1e-12);
  EXPECT_NEAR(centroid_power(two.band(0), 0.5, 0.0), closed, 1e-9);
  EXPECT_NEAR(closed, 1.38743, 1e-5);
}

TEST(Centroid, EmptyRegionSignals) {
  TrainingSet t({{1.0}}, {{1.0}});
  BandView empty{t.band(0).g0.first(0), t.band(0).g1.first(0)};
  EXPECT_THROW(centroid_power(empty, 0.5, 0.0), EmptyRegion);
}

TEST(Centroid, MatchesBisectionOracleOnRandomRegions) {
  const auto t = sample_training_set(BandModels{}, 1, 100 * 50, 77);
  const BandView b = t.band(0);
  double worst = 0.0;
  for (int r = 0; r < 100; ++r) {
    const std::size_t lo = 50 * r, n = 5 + (r * 7) % 45;
    BandView reg{b.g0.subspan(lo, n), b.g1.subspan(lo, n)};
    const double lambda = 0.05 + 0.01 * (r % 13), mu = 0.02 * (r % 7);
    const double p = centroid_power(reg, lambda, mu, 1e-13);
    const double ref = oracle::centroid(copy(reg.g0), copy(reg.g1), std::vector<double>(n, 1.0), lambda, mu);
    worst = std::max(worst, std::abs(p - ref));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(Centroid, ClampRule) {
  const auto t = sample_training_set(BandModels{}, 1, 4000, 8);
  const BandView b = t.band(0);
  for (int r = 0; r < 40; ++r) {
    BandView reg{b.g0.subspan(100 * r, 100), b.g1.subspan(100 * r, 100)};
    const double lambda = 0.6 + 0.02 * r, mu = 0.3;
    double eg1 = 0.0, eg0 = 0.0;
    for (std::size_t n = 0; n < reg.size(); ++n) {
      eg1 += reg.g1[n];
      eg0 += reg.g0[n];
    }
    eg1 /= reg.size();
    eg0 /= reg.size();
    const double p = centroid_power(reg, lambda, mu);
    EXPECT_EQ(p == 0.0, eg1 <= lambda + mu * eg0) << r;
  }
}

TEST(Gla, SingleLevelIsGlobalCentroid) {
  const auto t = sample_training_set(BandModels{}, 1, 3000, 4);
  const auto r = run_gla(t.band(0), 1, 0.2, 0.1);
  EXPECT_EQ(r.report.iterations, 1);
  EXPECT_TRUE(r.report.converged);
  EXPECT_NEAR(r.codebook[0], centroid_power(t.band(0), 0.2, 0.1), 1e-12);
}

TEST(Gla, TwoSampleFixedPoint) {
  TrainingSet t({{1.0, 1.0}}, {{0.5, 8.0}});
  const auto r = run_gla(t.band(0), 2, 0.1, 0.0, PowerCodebook({1.0, 0.1}));
  ASSERT_TRUE(r.report.converged);
  EXPECT_NEAR(r.codebook[0], 9.875, 1e-9);
  EXPECT_NEAR(r.codebook[1], 8.0, 1e-9);
  EXPECT_EQ(r.partition.labels, (std::vector<std::uint32_t>{1, 0}));
}

TEST(Gla, ExponentialRegressionConvergesMonotonically) {
  const auto t = sample_training_set(BandModels{}, 1, 10000, 1);
  const auto r = run_gla(t.band(0), 4, 0.1, 0.1);
  EXPECT_TRUE(r.report.converged);
  EXPECT_LE(r.report.iterations, 200);
  const auto& tr = r.report.lagrangian_trace;
  for (std::size_t k = 1; k < tr.size(); ++k) EXPECT_GE(tr[k], tr[k - 1] - 1e-12) << k;
  EXPECT_NEAR(r.report.lagrangian, lagrangian_value(t.band(0), r.partition, r.codebook, 0.1, 0.1), 1e-12);
}

TEST(Gla, MonotoneOnRandomInstances) {
  for (int k = 0; k < 20; ++k) {
    const auto t = sample_training_set(BandModels{}, 1, 2000, 100 + k);
    const double lambda = 0.05 + 0.05 * (k % 5), mu = 0.05 * (k % 4);
    const std::size_t L = std::size_t{2} << (k % 3);
    const auto r = run_gla(t.band(0), L, lambda, mu, random_init(t.band(0), L, lambda, mu, k));
    const auto& tr = r.report.lagrangian_trace;
    for (std::size_t i = 1; i < tr.size(); ++i) ASSERT_GE(tr[i], tr[i - 1] - 1e-12) << k << " " << i;
  }
}

TEST(Gla, EachStepNeverLowersTheLagrangian) {
  const auto t = sample_training_set(BandModels{}, 1, 5000, 3);
  const BandView b = t.band(0);
  PowerCodebook cb = random_init(b, 8, 0.1, 0.2, 5);
  Partition part = nnc_assign(b, cb, 0.1, 0.2);
  for (int it = 0; it < 15; ++it) {
    const double before = lagrangian_value(b, part, cb, 0.1, 0.2);
    cc_update(b, part, cb, 0.1, 0.2);
    const double after_cc = lagrangian_value(b, part, cb, 0.1, 0.2);
    part = nnc_assign(b, cb, 0.1, 0.2);
    const double after_nnc = lagrangian_value(b, part, cb, 0.1, 0.2);
    // a re-seeded empty level has no mass, so it cannot move the value either
    EXPECT_GE(after_cc, before - 1e-12);
    EXPECT_GE(after_nnc, after_cc - 1e-12);
  }
}

TEST(Gla, Errors) {
  const auto t = sample_training_set(BandModels{}, 1, 100, 1);
  EXPECT_THROW(run_gla(t.band(0), 0, 0.1, 0.1), ConfigError);
  EXPECT_THROW(run_gla(t.band(0), 3, 0.1, 0.1, PowerCodebook({1.0, 0.0})), DimensionMismatch);
  EXPECT_THROW(run_gla(t.band(0), 2, 0.0, 0.0), UndefinedWaterLevel);
  GlaOptions short_run;
  short_run.max_iter = 1;
  short_run.tol = 0.0;
  const auto r = run_gla(t.band(0), 8, 0.1, 0.1, random_init(t.band(0), 8, 0.1, 0.1, 3), short_run);
  EXPECT_FALSE(r.report.converged);
  EXPECT_EQ(r.report.iterations, 1);
}

TEST(Lagrangian, Examples) {
  TrainingSet t({{1.0, 2.0}}, {{1.0, 3.0}});
  const auto zero = Partition::from_labels({0, 0}, 1);
  EXPECT_EQ(lagrangian_value(t.band(0), zero, PowerCodebook({0.0}), 0.3, 0.3), 0.0);
  TrainingSet one({{1.0}}, {{1.0}});
  EXPECT_NEAR(lagrangian_value(one.band(0), Partition::from_labels({0}, 1), PowerCodebook({std::exp(1.0) - 1.0}), 0.0, 0.0),
              1.0, 1e-15);
  EXPECT_THROW(lagrangian_value(one.band(0), zero, PowerCodebook({1.0}), 0.0, 0.0), DimensionMismatch);
  EXPECT_THROW(lagrangian_value(one.band(0), Partition::from_labels({0}, 2), PowerCodebook({1.0}), 0.0, 0.0),
               DimensionMismatch);
}

TEST(Lagrangian, ReassignmentNeverLowers) {
  const auto t = sample_training_set(BandModels{}, 1, 3000, 9);
  const BandView b = t.band(0);
  const PowerCodebook cb({3.0, 1.5, 0.5, 0.0});
  std::vector<std::uint32_t> labels(b.size());
  for (std::size_t n = 0; n < b.size(); ++n) labels[n] = static_cast<std::uint32_t>(n % 4);
  const double before = lagrangian_value(b, Partition::from_labels(labels, 4), cb, 0.1, 0.2);
  double reported = 0.0;
  const Partition p = nnc_assign(b, cb, 0.1, 0.2, nullptr, &reported);
  EXPECT_GE(lagrangian_value(b, p, cb, 0.1, 0.2), before);
  EXPECT_NEAR(reported, lagrangian_value(b, p, cb, 0.1, 0.2), 1e-12);
}

TEST(Boundary, Examples) {
  EXPECT_NEAR(boundary_g1(1.0, 0.0, 1.0, 0.0, 3.0), std::exp(1.0) - 1.0, 1e-12);
  const double b = boundary_g1(2.0, 1.0, 0.1, 0.1, 0.0);
  EXPECT_NEAR(b, std::expm1(0.1) / (2.0 - std::exp(0.1)), 1e-12);
  EXPECT_NEAR(b, 0.117532, 1e-6);
  EXPECT_GT(b, 0.1);
  EXPECT_NEAR(boundary_asymptote(2.0, 1.0, 0.1, 0.1), 10.0 * (std::log(2.0) - 0.1), 1e-12);
  EXPECT_NEAR(boundary_asymptote(2.0, 1.0, 0.1, 0.1), 5.93147, 1e-5);
  EXPECT_THROW(boundary_g1(2.0, 1.0, 0.1, 0.1, 6.0), AsymptoteExceeded);
  EXPECT_THROW(boundary_g1(1.0, 1.0, 0.1, 0.1, 0.0), ConfigError);
  EXPECT_TRUE(std::isinf(boundary_asymptote(1.0, 0.0, 0.1, 0.1)));
}

TEST(Boundary, IncreasingConvexAndAboveWaterline) {
  const double hi = 3.0, lo = 1.0, lambda = 0.1, mu = 0.2;
  const double asym = boundary_asymptote(hi, lo, lambda, mu);
  double prev = boundary_g1(hi, lo, lambda, mu, 0.0), prev_slope = -1.0;
  const double h = asym / 200.0;
  for (int k = 1; k < 190; ++k) {
    const double g0 = k * h;
    const double b = boundary_g1(hi, lo, lambda, mu, g0);
    EXPECT_GT(b, lambda + mu * g0);
    EXPECT_GT(b, prev);
    const double slope = (b - prev) / h;
    EXPECT_GE(slope, prev_slope - 1e-9);
    prev = b;
    prev_slope = slope;
  }
}

TEST(Boundary, RelabelingReproducesNnc) {
  const auto t = sample_training_set(BandModels{}, 1, 20000, 31);
  for (double mu : {0.0, 0.15}) {
    const auto r = run_gla(t.band(0), 8, 0.2, mu);
    ASSERT_TRUE(r.codebook.strictly_descending());
    const auto labels = boundary_labels(t.band(0), r.codebook, 0.2, mu);
    std::size_t diff = 0;
    for (std::size_t n = 0; n < labels.size(); ++n) diff += labels[n] != r.partition.labels[n];
    EXPECT_EQ(diff, 0u) << "mu = " << mu;
  }
}

TEST(Properties, Examples) {
  EXPECT_TRUE(verify_codebook_properties(PowerCodebook({3.0, 2.0, 1.0, 0.0}), 0.6, 0.6).ok());
  const auto bad = verify_codebook_properties(PowerCodebook({3.0, 2.0, 2.0, 0.0}), 0.6, 0.6);
  EXPECT_FALSE(bad.strictly_descending);
  EXPECT_FALSE(bad.violations.empty());
  EXPECT_FALSE(verify_codebook_properties(PowerCodebook({3.0, 2.0, 1.0, 0.5}), 0.6, 0.6).last_level_rule);
  EXPECT_FALSE(verify_codebook_properties(PowerCodebook({3.0, 0.0, 0.0}), 0.1, 0.1).upper_levels_positive);
}

TEST(Properties, ConvergedGlaPasses) {
  const auto t = sample_training_set(BandModels{}, 1, 100000, 1);
  const auto r = run_gla(t.band(0), 4, 0.1, 0.1);
  const auto rep = verify_codebook_properties(r.codebook, 0.1, 0.1);
  EXPECT_TRUE(rep.ok()) << (rep.violations.empty() ? "" : rep.violations[0]);
  EXPECT_TRUE(r.codebook.strictly_descending());
  // region numbering follows g1: higher levels serve stronger channels
  std::vector<double> mean(4, 0.0);
  for (std::size_t n = 0; n < t.size(); ++n) mean[r.partition.labels[n]] += t.band(0).g1[n];
  for (std::size_t j = 0; j < 4; ++j) mean[j] /= static_cast<double>(r.partition.counts[j]);
  for (std::size_t j = 1; j < 4; ++j) EXPECT_GT(mean[j - 1], mean[j]);
}

TEST(Properties, LargeMultipliersForceZeroLastLevel) {
  const auto t = sample_training_set(BandModels{}, 1, 20000, 2);
  const auto r = run_gla(t.band(0), 4, 0.7, 0.5);
  EXPECT_EQ(r.codebook[3], 0.0);
  EXPECT_TRUE(verify_codebook_properties(r.codebook, 0.7, 0.5).ok());
}

TEST(Oracle, TinyInstanceMatchesExhaustiveSearch) {
  const auto t = sample_training_set(BandModels{}, 1, 8, 5);
  const BandView b = t.band(0);
  const double lambda = 0.2, mu = 0.1;
  const auto g0 = copy(b.g0), g1 = copy(b.g1);
  // every labeling with its centroid levels, scored without re-assignment
  double best = -1e300;
  for (unsigned mask = 0; mask < 256; ++mask) {
    double value = 0.0;
    for (unsigned side = 0; side < 2; ++side) {
      std::vector<double> w(8, 0.0);
      bool any = false;
      for (unsigned n = 0; n < 8; ++n) {
        if (((mask >> n) & 1u) == side) {
          w[n] = 1.0;
          any = true;
        }
      }
      if (!any) continue;
      const double p = oracle::centroid(g0, g1, w, lambda, mu);
      for (unsigned n = 0; n < 8; ++n) value += w[n] * oracle::score(g0[n], g1[n], p, lambda, mu);
    }
    best = std::max(best, value / 8.0);
  }
  double gla = -1e300;
  for (int r = 0; r < 20; ++r) {
    const auto res = run_gla(b, 2, lambda, mu, random_init(b, 2, lambda, mu, 1000 + r));
    gla = std::max(gla, res.report.lagrangian);
  }
  EXPECT_NEAR(gla, best, 1e-3);
  EXPECT_LE(gla, best + 1e-9);
}

TEST(Init, QuantileAndRandom) {
  const auto t = sample_training_set(BandModels{}, 1, 10000, 6);
  const auto q = quantile_init(t.band(0), 4, 0.2, 0.1);
  ASSERT_EQ(q.size(), 4u);
  EXPECT_EQ(q[3], 0.0);
  EXPECT_TRUE(q.strictly_descending());
  const auto a = random_init(t.band(0), 6, 0.2, 0.1, 4);
  const auto c = random_init(t.band(0), 6, 0.2, 0.1, 4);
  EXPECT_EQ(a, c);
  for (double p : a.levels) EXPECT_GT(p, 0.0);
  EXPECT_EQ(PowerCodebook({1.0, 2.0, 3.0, 4.0}).bits(), 2);
  EXPECT_EQ(PowerCodebook({1.0, 2.0, 3.0}).bits(), -1);
}
