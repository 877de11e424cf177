// Copyright 2026 The lp-debias Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <atomic>
#include <cmath>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include "lpdebias/error.hpp"
#include "lpdebias/inference.hpp"
#include "lpdebias/rng.hpp"
#include "lpdebias/transport.hpp"

namespace lpdebias {
namespace {

SamplingModel two_blocks(std::int64_t n, std::uint64_t seed) {
  const Vector half = Vector::Constant(2, 0.5);
  return {Multinomial{{half, half}, n}, seed};
}

Estimator identity_estimator() {
  return [](const Vector& b) { return b; };
}

Matrix cost_2x2() {
  Matrix c(2, 2);
  c << 0, 1, 2, 0;
  return c;
}

TEST(Sampling, MultinomialFrequencies) {
  const Vector t = sample_empirical(two_blocks(1000, 3));
  ASSERT_EQ(t.size(), 4);
  EXPECT_NEAR(t.head(2).sum(), 1.0, 1e-15);
  EXPECT_NEAR(t.tail(2).sum(), 1.0, 1e-15);
  for (Index i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(std::round(t(i) * 1000), t(i) * 1000);
  EXPECT_EQ(sample_size(two_blocks(1000, 3)), 1000);
  EXPECT_EQ(data_dimension(two_blocks(1000, 3)), 4);
}

TEST(Sampling, DegenerateCategory) {
  const SamplingModel model{Multinomial{{(Vector(3) << 1, 0, 0).finished()}, 57}, 9};
  for (std::uint64_t i = 0; i < 5; ++i) {
    Rng rng = make_stream(9, i);
    EXPECT_EQ(sample_empirical(model, rng), (Vector(3) << 1, 0, 0).finished());
  }
}

TEST(Sampling, SeedDeterminism) {
  EXPECT_EQ(sample_empirical(two_blocks(500, 42)), sample_empirical(two_blocks(500, 42)));
  EXPECT_NE(sample_empirical(two_blocks(500, 42)), sample_empirical(two_blocks(500, 43)));
}

TEST(Sampling, IidRowsMean) {
  Matrix data(3, 2);
  data << 1, -1, 2, -2, 3, 0;
  const SamplingModel model{IidRows{data}, 1};
  EXPECT_EQ(sample_empirical(model), (Vector(2) << 2, -1).finished());
  Rng rng = make_stream(1, 1);
  const Vector boot = bootstrap_resample(model, sample_empirical(model), rng);
  EXPECT_EQ(boot.size(), 2);
}

TEST(Sampling, ValidationErrors) {
  EXPECT_THROW(validate(SamplingModel{Multinomial{{(Vector(2) << 0.6, 0.6).finished()}, 10}, 0}), Error);
  EXPECT_THROW(validate(SamplingModel{Multinomial{{Vector::Constant(2, 0.5)}, 0}, 0}), Error);
  EXPECT_THROW(validate(SamplingModel{IidRows{Matrix(0, 2)}, 0}), Error);
}

TEST(Bootstrap, ReproducibleAndOrderIndependent) {
  const SamplingModel model = two_blocks(200, 5);
  const BootstrapEnsemble a = bootstrap_ensemble(model, identity_estimator(), 2, 11, 1);
  const BootstrapEnsemble b = bootstrap_ensemble(model, identity_estimator(), 2, 11, 1);
  EXPECT_EQ(a.replicates, b.replicates);
  EXPECT_EQ(a.replicates.rows(), 2);
  const BootstrapEnsemble serial = bootstrap_ensemble(model, identity_estimator(), 64, 11, 1);
  const BootstrapEnsemble parallel = bootstrap_ensemble(model, identity_estimator(), 64, 11, 4);
  EXPECT_EQ(serial.replicates, parallel.replicates);
}

TEST(Bootstrap, DegenerateDataGivesIdenticalReplicates) {
  const SamplingModel model{Multinomial{{(Vector(3) << 1, 0, 0).finished()}, 100}, 2};
  const BootstrapEnsemble ens = bootstrap_ensemble(model, identity_estimator(), 20, 4);
  for (Index b = 0; b < ens.replicates.rows(); ++b) {
    EXPECT_EQ(ens.replicates.row(b).transpose(), ens.center);
  }
  const ConfidenceSet cs = ci_entrywise(ens, 100, 0.05);
  EXPECT_TRUE(cs.degenerate);
  EXPECT_EQ(cs.lo, ens.center);
  EXPECT_EQ(cs.hi, ens.center);
}

TEST(Bootstrap, FailuresAreExcludedAndFlagged) {
  std::atomic<int> calls{0};
  const Estimator flaky = [&](const Vector& b) -> Vector {
    if (calls++ % 10 == 5) throw Error(ErrorCode::kDiverged, "synthetic failure");
    return b;
  };
  const BootstrapEnsemble ens = bootstrap_ensemble(two_blocks(100, 1), flaky, 100, 3, 1);
  EXPECT_FALSE(ens.failed.empty());
  EXPECT_EQ(ens.replicates.rows() + static_cast<Index>(ens.failed.size()), 100);
  EXPECT_TRUE(ens.replicate_failure);
  const BootstrapEnsemble clean = bootstrap_ensemble(two_blocks(100, 1), identity_estimator(), 100, 3);
  EXPECT_FALSE(clean.replicate_failure);
}

// The conditional bootstrap variance fluctuates with the observed sample, so
// the limit is checked on its average over independent samples.
TEST(Bootstrap, CostVarianceMatchesLimit) {
  const std::int64_t n = 100000;
  const Estimator est =
      make_ot_estimator(cost_2x2(), make_penalty(PenaltyKind::kExponential), 3.0 * std::cbrt(1.0 / n));
  const Vector c = flatten(cost_2x2());
  constexpr int kSamples = 6;
  double avg = 0.0;
  for (int k = 0; k < kSamples; ++k) {
    const BootstrapEnsemble ens = bootstrap_ensemble(two_blocks(n, 7 + k), est, 300, 8 + k);
    std::vector<double> w;
    double mean = 0.0;
    for (Index b = 0; b < ens.replicates.rows(); ++b) {
      w.push_back(std::sqrt(double(n)) * c.dot(ens.replicates.row(b).transpose() - ens.center));
      mean += w.back() / static_cast<double>(ens.replicates.rows());
    }
    double var = 0.0;
    for (double v : w) var += (v - mean) * (v - mean) / static_cast<double>(w.size() - 1);
    avg += var / kSamples;
  }
  EXPECT_NEAR(avg, 0.125, 0.2 * 0.125);
}

BootstrapEnsemble hand_ensemble(const Vector& center, const Matrix& reps) {
  BootstrapEnsemble ens;
  ens.center = center;
  ens.replicates = reps;
  ens.B = reps.rows();
  return ens;
}

TEST(ConfidenceIntervals, TwoPointEnsembleTypeSeven) {
  const double c = 0.3, h = 0.01;
  const BootstrapEnsemble ens = hand_ensemble(Vector::Constant(1, c), (Matrix(2, 1) << c - h, c + h).finished());
  const ConfidenceSet cs = ci_entrywise(ens, 400, 0.5);
  EXPECT_NEAR(cs.lo(0), c - h / 2, 1e-15);
  EXPECT_NEAR(cs.hi(0), c + h / 2, 1e-15);
  EXPECT_FALSE(cs.degenerate);
}

TEST(ConfidenceIntervals, WidthGrowsAsAlphaShrinks) {
  const Estimator est = identity_estimator();
  const BootstrapEnsemble ens = bootstrap_ensemble(two_blocks(300, 21), est, 400, 22);
  Vector prev = Vector::Zero(4);
  for (double alpha : {0.5, 0.2, 0.1, 0.05, 0.01}) {
    const ConfidenceSet cs = ci_entrywise(ens, 300, alpha);
    const Vector width = cs.hi - cs.lo;
    EXPECT_TRUE((width.array() >= prev.array()).all()) << "alpha = " << alpha;
    prev = width;
  }
  EXPECT_THROW(ci_entrywise(ens, 300, 0.0), Error);
}

TEST(UniformBand, ZeroWidthAndSingletonGrid) {
  const Vector center = (Vector(3) << 0.1, 0.5, 0.9).finished();
  const Matrix same = center.transpose().replicate(10, 1);
  const ConfidenceSet flat = uniform_band(same, center, 100, 0.05);
  EXPECT_TRUE(flat.degenerate);
  EXPECT_EQ(flat.lo, center);
  EXPECT_EQ(flat.hi, center);

  Rng rng = make_stream(31, 0);
  std::normal_distribution<double> g(0.0, 0.02);
  Matrix reps(50, 1);
  for (Index b = 0; b < 50; ++b) reps(b, 0) = 0.4 + g(rng);
  const Vector c1 = Vector::Constant(1, 0.4);
  const ConfidenceSet band = uniform_band(reps, c1, 100, 0.1);
  const ConfidenceSet entry = ci_entrywise(hand_ensemble(c1, reps), 100, 0.1);
  EXPECT_LE(band.lo(0), c1(0));
  EXPECT_GE(band.hi(0), c1(0));
  const double band_width = band.hi(0) - band.lo(0);
  const double entry_width = entry.hi(0) - entry.lo(0);
  EXPECT_GE(band_width, 0.9 * entry_width);
  EXPECT_LE(band_width, 1.5 * entry_width);
}

TEST(UniformBand, ShrinksWithSampleSize) {
  const Estimator est = identity_estimator();
  double prev = INFINITY;
  for (std::int64_t n : {200, 20000}) {
    const BootstrapEnsemble ens = bootstrap_ensemble(two_blocks(n, 41), est, 300, 42);
    const ConfidenceSet band = uniform_band(ens.replicates, ens.center, n, 0.05);
    const double width = (band.hi - band.lo).maxCoeff();
    EXPECT_LT(width, prev);
    prev = width;
  }
}

TEST(Quantile, TypeSeven) {
  EXPECT_DOUBLE_EQ(quantile_type7({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_type7({4, 1, 3, 2}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_type7({4, 1, 3, 2}, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile_type7({10}, 0.3), 10.0);
  EXPECT_THROW(quantile_type7({}, 0.5), Error);
}

TEST(KolmogorovSmirnov, NormalReference) {
  EXPECT_DOUBLE_EQ(ks_normal({0.0}), 0.5);
  const boost::math::normal normal;
  std::vector<double> exact;
  const int N = 1000;
  for (int i = 1; i <= N; ++i) exact.push_back(boost::math::quantile(normal, (i - 0.5) / N));
  EXPECT_LE(ks_normal(exact), 0.5 / N + 1e-12);
  std::vector<double> shifted(100);
  for (int i = 0; i < 100; ++i) shifted[static_cast<std::size_t>(i)] = 10.0 + 0.01 * i;
  EXPECT_GT(ks_normal(shifted), 1.0 - 1e-12);
}

TEST(KolmogorovSmirnov, TwoSample) {
  EXPECT_DOUBLE_EQ(ks_two_sample({1, 2, 3}, {3, 2, 1}), 0.0);
  EXPECT_DOUBLE_EQ(ks_two_sample({1, 2}, {5, 6}), 1.0);
  EXPECT_DOUBLE_EQ(ks_two_sample({1, 2, 3, 4}, {3, 4, 5, 6}), 0.5);
}

TEST(Coverage, DegenerateModelCoversExactly) {
  const SamplingModel model{Multinomial{{(Vector(3) << 1, 0, 0).finished()}, 50}, 0};
  CoverageConfig cfg;
  cfg.trials = 20;
  cfg.B = 20;
  const CoverageResult res =
      coverage_experiment(cfg, model, identity_estimator(), (Vector(3) << 1, 0, 0).finished());
  EXPECT_EQ(res.trials_used, 20);
  EXPECT_EQ(res.coverage, Vector::Ones(3));
  EXPECT_EQ(res.mean_width, Vector::Zero(3));
}

TEST(Coverage, HalfLevelIntervals) {
  const std::int64_t n = 100000;
  const Estimator est =
      make_ot_estimator(cost_2x2(), make_penalty(PenaltyKind::kExponential), 3.0 * std::cbrt(1.0 / n));
  CoverageConfig cfg;
  cfg.trials = 600;
  cfg.B = 200;
  cfg.alpha = 0.5;
  cfg.seed = 7;
  const Vector pi_star = (Vector(4) << 0.5, 0, 0, 0.5).finished();
  const CoverageResult res = coverage_experiment(cfg, two_blocks(n, 7), est, pi_star);
  for (Index i = 0; i < 4; ++i) EXPECT_NEAR(res.coverage(i), 0.5, 0.06) << "entry " << i;
}

}  // namespace
}  // namespace lpdebias
