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

// Sampling models, the naive bootstrap, quantile intervals, uniform bands and
// Kolmogorov-Smirnov distances.

#ifndef LPDEBIAS_INFERENCE_HPP_
#define LPDEBIAS_INFERENCE_HPP_

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include "lpdebias/lp.hpp"
#include "lpdebias/rng.hpp"

namespace lpdebias {

// Independent multinomial samples of size n, one per block. The empirical
// vector is the concatenation of the block frequencies.
struct Multinomial {
  std::vector<Vector> blocks;
  std::int64_t n = 0;
};

// Observed rows Z_1..Z_n; the empirical vector is their mean.
struct IidRows {
  Matrix data;
};

struct SamplingModel {
  std::variant<Multinomial, IidRows> kind;
  std::uint64_t seed = 0;
};

// Throws InvalidInput when a block is off the simplex, n < 1 or data is empty.
void validate(const SamplingModel& model);
std::int64_t sample_size(const SamplingModel& model);
Index data_dimension(const SamplingModel& model);

// Multinomial: frequencies of a fresh draw from stream (seed, 0).
// IidRows: the row mean.
Vector sample_empirical(const SamplingModel& model);
Vector sample_empirical(const SamplingModel& model, Rng& rng);

// One bootstrap copy of b_n: Mult(n, b_n) per block, or rows drawn with
// replacement.
Vector bootstrap_resample(const SamplingModel& model, const Vector& b_n, Rng& rng);

// Maps an empirical vector to an estimate. Must be thread-safe.
using Estimator = std::function<Vector(const Vector&)>;

struct BootstrapEnsemble {
  Matrix replicates;  // successful replicates, one per row
  Vector center;
  Vector b_n;
  Index B = 0;
  std::uint64_t seed = 0;
  std::int64_t n = 0;
  std::vector<Index> failed;     // replicate indices whose estimator threw
  bool replicate_failure = false;  // more than 1% failed
};

// Center = est(sample_empirical(model)); replicate i uses stream (seed, i).
BootstrapEnsemble bootstrap_ensemble(const SamplingModel& model, const Estimator& est,
                                     Index B, std::uint64_t seed, std::size_t workers = 0);
// Same, around an already observed b_n.
BootstrapEnsemble bootstrap_from(const SamplingModel& model, const Vector& b_n,
                                 const Estimator& est, Index B, std::uint64_t seed,
                                 std::size_t workers = 0);

enum class BandKind { kEntrywise, kUniformBand };

struct ConfidenceSet {
  Vector lo;
  Vector hi;
  double alpha = 0.05;
  BandKind kind = BandKind::kEntrywise;
  bool degenerate = false;  // every replicate equals the center
};

// Linear-interpolation (type 7) empirical quantile.
double quantile_type7(std::vector<double> values, double p);

// [x_i - F^-1(1 - a/2) / sqrt(n), x_i - F^-1(a/2) / sqrt(n)] where F is the
// empirical law of sqrt(n) (x~_i - x_i).
ConfidenceSet ci_entrywise(const BootstrapEnsemble& ens, std::int64_t n, double alpha);

// center +- u / sqrt(n), u the 1 - alpha quantile of
// sqrt(n) max_g |curve_b(g) - center(g)|.
ConfidenceSet uniform_band(const Matrix& curve_replicates, const Vector& center_curve,
                           std::int64_t n, double alpha);

double normal_cdf(double x);

// sup_x |F_emp(x) - Phi(x)|.
double ks_normal(std::vector<double> samples);
// sup_x |F_a(x) - F_b(x)|.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

struct CoverageConfig {
  Index trials = 300;
  Index B = 200;
  double alpha = 0.05;
  std::uint64_t seed = 0;
};

struct CoverageResult {
  Vector coverage;    // per entry, over trials that produced an interval
  Vector mean_width;  // per entry
  Index trials_used = 0;
  Index failed_trials = 0;
  Index failed_replicates = 0;
};

// Outer trial t observes data from stream (cfg.seed, t) and runs a bootstrap
// with seed derive_seed(cfg.seed, t).
CoverageResult coverage_experiment(const CoverageConfig& cfg, const SamplingModel& model,
                                   const Estimator& est, const Vector& target,
                                   std::size_t workers = 0);

}  // namespace lpdebias

#endif  // LPDEBIAS_INFERENCE_HPP_
