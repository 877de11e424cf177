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

#include "lpdebias/rng.hpp"

#include <algorithm>

namespace lpdebias {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t state = master;
  const std::uint64_t a = splitmix64(state);
  state = a ^ (index * 0xd1b54a32d192ed03ULL);
  splitmix64(state);
  return splitmix64(state);
}

Rng make_stream(std::uint64_t master, std::uint64_t index) {
  return Rng(derive_seed(master, index));
}

Eigen::VectorXd multinomial_counts(std::int64_t n, const Eigen::VectorXd& p, Rng& rng) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(p.size());
  std::int64_t left = n;
  double mass = 1.0;
  for (Eigen::Index i = 0; i < p.size() && left > 0; ++i) {
    if (i + 1 == p.size()) {
      counts(i) = static_cast<double>(left);
      break;
    }
    const double q = mass > 0.0 ? std::clamp(p(i) / mass, 0.0, 1.0) : 0.0;
    std::binomial_distribution<std::int64_t> bin(left, q);
    const std::int64_t k = bin(rng);
    counts(i) = static_cast<double>(k);
    left -= k;
    mass -= p(i);
  }
  return counts;
}

Eigen::VectorXd flat_dirichlet(Eigen::Index size, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = expo(rng);
  return v / v.sum();
}

}  // namespace lpdebias
