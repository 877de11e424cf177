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

// Reproducible random streams. Stream i of a master seed depends only on
// (master, i), so replicate results do not depend on scheduling.

#ifndef LPDEBIAS_RNG_HPP_
#define LPDEBIAS_RNG_HPP_

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace lpdebias {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);
Rng make_stream(std::uint64_t master, std::uint64_t index);

// Counts of n draws over the categories of p (p >= 0, sums to 1).
Eigen::VectorXd multinomial_counts(std::int64_t n, const Eigen::VectorXd& p, Rng& rng);

// Flat Dirichlet(1, ..., 1) draw.
Eigen::VectorXd flat_dirichlet(Eigen::Index size, Rng& rng);

}  // namespace lpdebias

#endif  // LPDEBIAS_RNG_HPP_
