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

#include <benchmark/benchmark.h>

#include "lpdebias/debias.hpp"
#include "lpdebias/inference.hpp"
#include "lpdebias/lp.hpp"
#include "lpdebias/penalized.hpp"
#include "lpdebias/penalty.hpp"
#include "lpdebias/rng.hpp"
#include "lpdebias/transport.hpp"

namespace lpdebias {
namespace {

OtProblem grid_problem(Index L, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  const Index p = L * L;
  return {flat_dirichlet(p, rng), flat_dirichlet(p, rng), grid_cost(L)};
}

void BM_Simplex(benchmark::State& state) {
  const StandardFormLP lp = ot_to_lp(grid_problem(state.range(0), 3));
  for (auto _ : state) benchmark::DoNotOptimize(solve_lp(lp).objective);
  state.SetLabel(std::to_string(lp.cols()) + " variables");
}
BENCHMARK(BM_Simplex)->Arg(3)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_Penalized(benchmark::State& state) {
  const StandardFormLP lp = ot_to_lp(grid_problem(4, 5));
  const PenaltySpec pen = make_penalty(static_cast<PenaltyKind>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_penalized(lp, pen, 1e-3).x.sum());
  state.SetLabel(pen.name());
}
BENCHMARK(BM_Penalized)
    ->DenseRange(0, 3)
    ->Unit(benchmark::kMillisecond);

void BM_DebiasedEstimate(benchmark::State& state) {
  const StandardFormLP lp = ot_to_lp(grid_problem(state.range(0), 7));
  const PenaltySpec pen = parse_penalty("exp");
  for (auto _ : state) benchmark::DoNotOptimize(debiased_estimate(lp, pen, 1e-2).x_hat.sum());
}
BENCHMARK(BM_DebiasedEstimate)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Sinkhorn(benchmark::State& state) {
  const OtProblem prob = grid_problem(state.range(0), 9);
  for (auto _ : state) benchmark::DoNotOptimize(sinkhorn(prob, 0.1).plan.sum());
}
BENCHMARK(BM_Sinkhorn)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Bootstrap2x2(benchmark::State& state) {
  Matrix cost(2, 2);
  cost << 0, 1, 2, 0;
  const Vector half = Vector::Constant(2, 0.5);
  const SamplingModel model{Multinomial{{half, half}, 100000}, 7};
  const Estimator est = make_ot_estimator(cost, parse_penalty("exp"), 3.0 * std::cbrt(1e-5));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        bootstrap_ensemble(model, est, state.range(0), 11, 1).replicates.sum());
  }
}
BENCHMARK(BM_Bootstrap2x2)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace lpdebias

BENCHMARK_MAIN();
