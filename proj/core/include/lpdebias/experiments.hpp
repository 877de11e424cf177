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

// Seeded simulation and analysis drivers. Each returns a bundle of CSV
// tables, a summary JSON document and a manifest that reproduces it.

#ifndef LPDEBIAS_EXPERIMENTS_HPP_
#define LPDEBIAS_EXPERIMENTS_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lpdebias/lp.hpp"

namespace lpdebias {

enum class Experiment { kSim2x2, kSimGrid, kSimDegenerate, kEntropicCompare, kColoc, kRebalance };

std::string_view to_string(Experiment e);
Experiment parse_experiment(std::string_view name);

struct ExperimentConfig {
  Experiment experiment = Experiment::kSim2x2;
  std::vector<std::int64_t> n_list;
  Index B = 200;
  Index R = 1000;
  std::vector<double> r0_list;
  std::vector<std::string> penalties;
  double kappa = 3.0;
  // r_n = r0 * n^-rate / L^4 on grids, r0 * n^-rate otherwise.
  double rate = 1.0 / 3.0;
  Index L = 4;
  std::string instance = "2x2";  // "2x2" or "grid" for simdegenerate
  std::uint64_t seed = 7;
  double alpha = 0.05;
  std::vector<double> lambda_list;  // entropic strengths
  double fixed_lambda = 2.0;
  // Colocalization: two PGM paths, or a synthetic pair of side image_side.
  std::string image_a;
  std::string image_b;
  Index image_side = 32;
  Index xi_points = 64;
  // Rebalancing: CSV of daily net flows (days x stations), or synthetic.
  std::string flows_csv;
  std::string cost_csv;
  Index stations = 5;
  Index days = 84;
  bool null_model = false;  // synthetic flows with zero mean
  bool force = false;
  std::size_t workers = 0;
};

// Defaults for one experiment, matching the documented desk-scale runs.
ExperimentConfig default_config(Experiment e);
void validate(const ExperimentConfig& cfg);

struct ResultBundle {
  std::string summary_json;
  std::string manifest_json;
  std::vector<std::pair<std::string, std::string>> tables;  // file name, CSV text
  Index failures = 0;
};

ResultBundle run_experiment(const ExperimentConfig& cfg);
ResultBundle run_sim_2x2(const ExperimentConfig& cfg);
ResultBundle run_sim_grid(const ExperimentConfig& cfg);
ResultBundle run_sim_degenerate(const ExperimentConfig& cfg);
ResultBundle run_entropic_compare(const ExperimentConfig& cfg);
ResultBundle run_coloc(const ExperimentConfig& cfg);
ResultBundle run_rebalance(const ExperimentConfig& cfg);

// Writes summary.json, manifest.json and every table under dir.
void write_bundle(const ResultBundle& bundle, const std::string& dir);

// Manifest <-> config round trip.
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

// Version string baked in at build time.
std::string build_describe();

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

inline constexpr int kSummarySchemaVersion = 1;

}  // namespace lpdebias

#endif  // LPDEBIAS_EXPERIMENTS_HPP_
