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

#include "lpdebias/inference.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lpdebias/error.hpp"
#include "lpdebias/parallel.hpp"

namespace lpdebias {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Vector multinomial_draw(const Multinomial& mm, const std::vector<Vector>& probs, Rng& rng) {
  Index total = 0;
  for (const auto& p : probs) total += p.size();
  Vector out(total);
  Index off = 0;
  const double n = static_cast<double>(mm.n);
  for (const auto& p : probs) {
    out.segment(off, p.size()) = multinomial_counts(mm.n, p, rng) / n;
    off += p.size();
  }
  return out;
}

std::vector<Vector> split_blocks(const Multinomial& mm, const Vector& b_n) {
  std::vector<Vector> blocks;
  Index off = 0;
  for (const auto& p : mm.blocks) {
    Vector q = b_n.segment(off, p.size()).cwiseMax(0.0);
    const double s = q.sum();
    if (s > 0.0) q /= s;
    blocks.push_back(std::move(q));
    off += p.size();
  }
  return blocks;
}

}  // namespace

void validate(const SamplingModel& model) {
  std::visit(Overloaded{
                 [](const Multinomial& mm) {
                   if (mm.n < 1) throw Error(ErrorCode::kInvalidInput, "sample size must be >= 1");
                   if (mm.blocks.empty()) throw Error(ErrorCode::kInvalidInput, "no blocks");
                   for (const auto& p : mm.blocks) {
                     if (p.size() == 0 || !p.allFinite() || p.minCoeff() < 0.0 ||
                         std::abs(p.sum() - 1.0) > 1e-9) {
                       throw Error(ErrorCode::kInvalidInput,
                                   "multinomial block is not on the simplex");
                     }
                   }
                 },
                 [](const IidRows& rows) {
                   if (rows.data.rows() < 1 || rows.data.cols() < 1 || !rows.data.allFinite()) {
                     throw Error(ErrorCode::kInvalidInput, "row data must be nonempty and finite");
                   }
                 }},
             model.kind);
}

std::int64_t sample_size(const SamplingModel& model) {
  return std::visit(Overloaded{[](const Multinomial& mm) { return mm.n; },
                               [](const IidRows& rows) {
                                 return static_cast<std::int64_t>(rows.data.rows());
                               }},
                    model.kind);
}

Index data_dimension(const SamplingModel& model) {
  return std::visit(Overloaded{[](const Multinomial& mm) {
                                 Index t = 0;
                                 for (const auto& p : mm.blocks) t += p.size();
                                 return t;
                               },
                               [](const IidRows& rows) { return rows.data.cols(); }},
                    model.kind);
}

Vector sample_empirical(const SamplingModel& model) {
  Rng rng = make_stream(model.seed, 0);
  return sample_empirical(model, rng);
}

Vector sample_empirical(const SamplingModel& model, Rng& rng) {
  validate(model);
  return std::visit(
      Overloaded{[&](const Multinomial& mm) { return multinomial_draw(mm, mm.blocks, rng); },
                 [](const IidRows& rows) { return Vector(rows.data.colwise().mean()); }},
      model.kind);
}

Vector bootstrap_resample(const SamplingModel& model, const Vector& b_n, Rng& rng) {
  return std::visit(
      Overloaded{[&](const Multinomial& mm) {
                   return multinomial_draw(mm, split_blocks(mm, b_n), rng);
                 },
                 [&](const IidRows& rows) {
                   const Index n = rows.data.rows();
                   std::uniform_int_distribution<Index> pick(0, n - 1);
                   Vector sum = Vector::Zero(rows.data.cols());
                   for (Index i = 0; i < n; ++i) sum += rows.data.row(pick(rng)).transpose();
                   return Vector(sum / static_cast<double>(n));
                 }},
      model.kind);
}

BootstrapEnsemble bootstrap_ensemble(const SamplingModel& model, const Estimator& est,
                                     Index B, std::uint64_t seed, std::size_t workers) {
  return bootstrap_from(model, sample_empirical(model), est, B, seed, workers);
}

BootstrapEnsemble bootstrap_from(const SamplingModel& model, const Vector& b_n,
                                 const Estimator& est, Index B, std::uint64_t seed,
                                 std::size_t workers) {
  if (B < 2) throw Error(ErrorCode::kInvalidInput, "bootstrap needs B >= 2");
  validate(model);
  BootstrapEnsemble ens;
  ens.B = B;
  ens.seed = seed;
  ens.n = sample_size(model);
  ens.b_n = b_n;
  ens.center = est(b_n);
  const Index m = ens.center.size();
  Matrix all(B, m);
  std::vector<char> ok(static_cast<std::size_t>(B), 0);
  parallel_for(
      static_cast<std::size_t>(B),
      [&](std::size_t i) {
        Rng rng = make_stream(seed, i);
        const Vector b_star = bootstrap_resample(model, b_n, rng);
        try {
          const Vector v = est(b_star);
          if (v.size() == m && v.allFinite()) {
            all.row(static_cast<Index>(i)) = v.transpose();
            ok[i] = 1;
          }
        } catch (const Error&) {
        }
      },
      workers);
  Index good = 0;
  for (Index i = 0; i < B; ++i) {
    if (ok[static_cast<std::size_t>(i)]) {
      ++good;
    } else {
      ens.failed.push_back(i);
    }
  }
  ens.replicates.resize(good, m);
  for (Index i = 0, row = 0; i < B; ++i) {
    if (ok[static_cast<std::size_t>(i)]) ens.replicates.row(row++) = all.row(i);
  }
  ens.replicate_failure = static_cast<double>(ens.failed.size()) > 0.01 * static_cast<double>(B);
  return ens;
}

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::kInvalidInput, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ConfidenceSet ci_entrywise(const BootstrapEnsemble& ens, std::int64_t n, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::kInvalidInput, "alpha must be in (0, 1)");
  if (ens.replicates.rows() < 1) throw Error(ErrorCode::kInvalidInput, "empty ensemble");
  const double rn = std::sqrt(static_cast<double>(n));
  const Index m = ens.center.size();
  ConfidenceSet cs;
  cs.alpha = alpha;
  cs.kind = BandKind::kEntrywise;
  cs.lo.resize(m);
  cs.hi.resize(m);
  cs.degenerate = true;
  std::vector<double> dev(static_cast<std::size_t>(ens.replicates.rows()));
  for (Index i = 0; i < m; ++i) {
    for (Index b = 0; b < ens.replicates.rows(); ++b) {
      dev[static_cast<std::size_t>(b)] = rn * (ens.replicates(b, i) - ens.center(i));
      if (dev[static_cast<std::size_t>(b)] != 0.0) cs.degenerate = false;
    }
    const double upper = quantile_type7(dev, 1.0 - 0.5 * alpha);
    const double lower = quantile_type7(dev, 0.5 * alpha);
    cs.lo(i) = ens.center(i) - upper / rn;
    cs.hi(i) = ens.center(i) - lower / rn;
  }
  return cs;
}

ConfidenceSet uniform_band(const Matrix& curve_replicates, const Vector& center_curve,
                           std::int64_t n, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::kInvalidInput, "alpha must be in (0, 1)");
  if (center_curve.size() == 0 || curve_replicates.rows() < 1 ||
      curve_replicates.cols() != center_curve.size()) {
    throw Error(ErrorCode::kInvalidInput, "band needs a nonempty grid and matching replicates");
  }
  const double rn = std::sqrt(static_cast<double>(n));
  std::vector<double> sup(static_cast<std::size_t>(curve_replicates.rows()));
  for (Index b = 0; b < curve_replicates.rows(); ++b) {
    sup[static_cast<std::size_t>(b)] =
        rn * (curve_replicates.row(b).transpose() - center_curve).cwiseAbs().maxCoeff();
  }
  const double u = quantile_type7(sup, 1.0 - alpha);
  ConfidenceSet cs;
  cs.alpha = alpha;
  cs.kind = BandKind::kUniformBand;
  cs.lo = center_curve.array() - u / rn;
  cs.hi = center_curve.array() + u / rn;
  cs.degenerate = u == 0.0;
  return cs;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_normal(std::vector<double> samples) {
  if (samples.empty()) throw Error(ErrorCode::kInvalidInput, "KS of an empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = normal_cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kInvalidInput, "KS of an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

CoverageResult coverage_experiment(const CoverageConfig& cfg, const SamplingModel& model,
                                   const Estimator& est, const Vector& target,
                                   std::size_t workers) {
  if (cfg.trials < 1 || cfg.B < 2) throw Error(ErrorCode::kInvalidInput, "need trials >= 1 and B >= 2");
  const Index m = target.size();
  const auto trials = static_cast<std::size_t>(cfg.trials);
  std::vector<Vector> hits(trials);
  std::vector<Vector> widths(trials);
  std::vector<Index> failed_reps(trials, 0);
  parallel_for(
      trials,
      [&](std::size_t t) {
        Rng rng = make_stream(cfg.seed, t);
        const Vector b_n = sample_empirical(model, rng);
        BootstrapEnsemble ens;
        try {
          ens = bootstrap_from(model, b_n, est, cfg.B, derive_seed(cfg.seed, t), 1);
        } catch (const Error&) {
          return;
        }
        failed_reps[t] = static_cast<Index>(ens.failed.size());
        if (ens.replicates.rows() < 2 || ens.center.size() != m) return;
        const ConfidenceSet cs = ci_entrywise(ens, ens.n, cfg.alpha);
        Vector h(m);
        for (Index i = 0; i < m; ++i) h(i) = (cs.lo(i) <= target(i) && target(i) <= cs.hi(i)) ? 1.0 : 0.0;
        hits[t] = h;
        widths[t] = cs.hi - cs.lo;
      },
      workers);
  CoverageResult res;
  res.coverage = Vector::Zero(m);
  res.mean_width = Vector::Zero(m);
  for (std::size_t t = 0; t < trials; ++t) {
    res.failed_replicates += failed_reps[t];
    if (hits[t].size() == 0) {
      ++res.failed_trials;
      continue;
    }
    ++res.trials_used;
    res.coverage += hits[t];
    res.mean_width += widths[t];
  }
  if (res.trials_used > 0) {
    res.coverage /= static_cast<double>(res.trials_used);
    res.mean_width /= static_cast<double>(res.trials_used);
  }
  return res;
}

}  // namespace lpdebias
