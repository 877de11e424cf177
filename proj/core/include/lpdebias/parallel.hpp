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

#ifndef LPDEBIAS_PARALLEL_HPP_
#define LPDEBIAS_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace lpdebias {

// Hardware concurrency, capped by LP_DEBIAS_THREADS when set.
std::size_t worker_count();

// Runs fn(0), ..., fn(n - 1) on up to `workers` threads (0 picks
// worker_count()). Indices are claimed dynamically. The first exception
// thrown by fn is rethrown after all workers have joined.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t workers = 0);

}  // namespace lpdebias

#endif  // LPDEBIAS_PARALLEL_HPP_
