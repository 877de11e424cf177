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

// lp-debias: command line front end.
//
//   lp-debias solve|debias|bootstrap [flags] [--out FILE.json]
//   lp-debias <experiment> [flags] --out DIR
//
// Exit status is 0 on success, 2 when some Monte-Carlo or bootstrap
// replicates failed, and 1 on error.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lpdebias/debias.hpp"
#include "lpdebias/error.hpp"
#include "lpdebias/experiments.hpp"
#include "lpdebias/inference.hpp"
#include "lpdebias/io.hpp"
#include "lpdebias/lp.hpp"
#include "lpdebias/penalized.hpp"
#include "lpdebias/penalty.hpp"
#include "lpdebias/transport.hpp"

namespace {

using namespace lpdebias;

using json = nlohmann::ordered_json;

struct SolveArgs {
  std::string lp_path;
  std::string penalty = "log";
  double r = 0.01;
  double kappa = 3.0;
  bool exact = false;
  bool oracle = false;
  std::string out;
};

struct BootstrapArgs {
  std::string lp_path;
  std::string model = "multinomial";
  std::string data_path;
  std::string cost_path;
  std::string t_path;
  std::string s_path;
  std::int64_t n = 1000;
  Index B = 200;
  double alpha = 0.05;
  std::string penalty = "log";
  double kappa = 3.0;
  double r0 = 1.0;
  double rate = 1.0 / 3.0;
  std::uint64_t seed = 7;
  std::size_t workers = 0;
  std::string out;
};

struct ExperimentArgs {
  std::string manifest;
  std::string out;
  ExperimentConfig cfg;
};

Vector read_vector(const std::string& path) {
  const Matrix m = read_csv_matrix(path);
  if (m.rows() != 1 && m.cols() != 1) {
    throw Error(ErrorCode::kIoError, path + " must hold a single row or column");
  }
  return Eigen::Map<const Vector>(m.data(), m.size());
}

std::vector<double> std_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

json solution_json(const StandardFormLP& lp, const PenaltySpec& pen, const PenalizedSolution& sol) {
  json j;
  j["r"] = sol.r;
  j["x"] = std_vector(sol.x);
  j["lambda"] = std_vector(sol.lambda);
  j["eta"] = std_vector(sol.eta);
  j["diagnostics"] = {{"method", std::string(to_string(sol.method))},
                      {"iterations", sol.iterations},
                      {"objective", penalized_objective(lp, pen, sol.r, sol.x)},
                      {"duality_gap", duality_gap(lp, pen, sol.r, sol)},
                      {"primal_residual", sol.primal_residual},
                      {"dual_residual", sol.dual_residual},
                      {"newton_decrement", sol.newton_decrement}};
  return j;
}

void emit(const json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text(out, text);
  }
}

int run_solve(const SolveArgs& a, bool debias) {
  const StandardFormLP lp = read_lp_csv(a.lp_path);
  json j;
  j["schema_version"] = kSummarySchemaVersion;
  j["build"] = build_describe();
  if (a.exact) {
    const LpSolution sol = solve_lp(lp);
    j["status"] = std::string(to_string(sol.status));
    if (sol.status == LpStatus::kOptimal) {
      j["x"] = std_vector(sol.x);
      j["basis"] = sol.basis;
      j["objective"] = sol.objective;
      j["dual"] = std_vector(sol.dual);
      j["residuals"] = {{"primal", sol.primal_residual},
                        {"min_reduced_cost", sol.reduced_costs.minCoeff()}};
      j["iterations"] = sol.iterations;
    }
    emit(j, a.out);
    return 0;
  }
  const PenaltySpec pen = parse_penalty(a.penalty, a.kappa);
  j["penalty"] = pen.name();
  if (!debias) {
    j.update(solution_json(lp, pen, solve_penalized(lp, pen, a.r)));
    emit(j, a.out);
    return 0;
  }
  const DebiasedEstimate est = debiased_estimate(lp, pen, a.r);
  j["r"] = a.r;
  j["x_hat"] = std_vector(est.x_hat);
  j["d_hat"] = std_vector(est.d_hat);
  j["objective"] = lp.c().dot(est.x_hat);
  j["coarse"] = solution_json(lp, pen, est.coarse);
  j["fine"] = solution_json(lp, pen, est.fine);
  if (a.oracle) {
    const ExpansionOracle o = build_oracle(lp, pen);
    j["oracle"] = {{"x_star", std_vector(o.x_star)},
                   {"d_star", std_vector(o.d_star)},
                   {"zero_set", o.I0.indices},
                   {"x_hat_error", (est.x_hat - o.x_star).norm()},
                   {"raw_error", (est.coarse.x - o.x_star).norm()},
                   {"d_hat_error", (est.d_hat - o.d_star).norm()}};
  }
  emit(j, a.out);
  return 0;
}

int run_bootstrap(const BootstrapArgs& a) {
  const PenaltySpec pen = parse_penalty(a.penalty, a.kappa);
  Estimator est;
  SamplingModel model;
  json j;
  j["schema_version"] = kSummarySchemaVersion;
  j["build"] = build_describe();
  if (!a.lp_path.empty()) {
    const StandardFormLP lp = read_lp_csv(a.lp_path);
    if (a.model == "multinomial") {
      model = {Multinomial{{lp.b()}, a.n}, a.seed};
    } else if (a.model == "rows") {
      if (a.data_path.empty()) throw Error(ErrorCode::kInvalidInput, "--model rows needs --data");
      model = {IidRows{read_csv_matrix(a.data_path)}, a.seed};
    } else {
      throw Error(ErrorCode::kInvalidInput, "--model must be multinomial or rows");
    }
    validate(model);
    const double r_n = a.r0 * std::pow(static_cast<double>(sample_size(model)), -a.rate);
    est = make_lp_estimator(lp, pen, r_n);
    j["model"] = a.model;
    j["r_n"] = r_n;
  } else {
    if (a.cost_path.empty() || a.t_path.empty() || a.s_path.empty()) {
      throw Error(ErrorCode::kInvalidInput, "give --lp, or all of --cost, --t and --s");
    }
    const Matrix cost = read_csv_matrix(a.cost_path);
    const Vector t = read_vector(a.t_path);
    const Vector s = read_vector(a.s_path);
    validate(OtProblem{t, s, cost});
    const double r_n = a.r0 * std::pow(static_cast<double>(a.n), -a.rate);
    est = make_ot_estimator(cost, pen, r_n);
    model = {Multinomial{{t, s}, a.n}, a.seed};
    j["model"] = "transport";
    j["shape"] = {cost.rows(), cost.cols()};
    j["r_n"] = r_n;
  }
  const std::int64_t n = sample_size(model);
  const BootstrapEnsemble ens = bootstrap_ensemble(model, est, a.B, derive_seed(a.seed, 1), a.workers);
  const ConfidenceSet ci = ci_entrywise(ens, n, a.alpha);
  j["penalty"] = pen.name();
  j["n"] = n;
  j["B"] = a.B;
  j["alpha"] = a.alpha;
  j["seed"] = a.seed;
  j["estimate"] = std_vector(ens.center);
  j["ci_lo"] = std_vector(ci.lo);
  j["ci_hi"] = std_vector(ci.hi);
  j["degenerate"] = ci.degenerate;
  j["failed_replicates"] = ens.failed;
  j["replicate_failure"] = ens.replicate_failure;
  emit(j, a.out);
  return ens.failed.empty() ? 0 : 2;
}

// Flags shared by the experiment commands. Values given on the command line
// override those loaded from --manifest.
struct ExperimentFlags {
  std::vector<std::int64_t> n;
  Index B = 0, R = 0, L = 0, side = 0, xi_points = 0, stations = 0, days = 0;
  std::vector<double> r0, lambda;
  std::vector<std::string> penalties;
  double kappa = 0, rate = 0, alpha = 0, fixed_lambda = 0;
  std::string instance, image_a, image_b, flows, cost;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  std::map<std::string, CLI::Option*> opts;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f, ExperimentArgs& a) {
  auto& o = f.opts;
  o["n"] = cmd->add_option("--n", f.n, "Sample size(s)")->delimiter(',');
  o["B"] = cmd->add_option("--B", f.B, "Bootstrap replicates")->check(CLI::PositiveNumber);
  o["R"] = cmd->add_option("--R", f.R, "Monte-Carlo replicates")->check(CLI::PositiveNumber);
  o["r0"] = cmd->add_option("--r0", f.r0, "Penalty scale(s)")->delimiter(',');
  o["penalty"] = cmd->add_option("--penalty", f.penalties, "log, exp, sq or invpoly:<a>")
                     ->delimiter(',');
  o["kappa"] = cmd->add_option("--kappa", f.kappa, "Decay exponent of full-domain penalties");
  o["rate"] = cmd->add_option("--rate", f.rate, "r_n = r0 n^-rate (divided by L^4 on grids)");
  o["L"] = cmd->add_option("--L", f.L, "Grid side");
  o["instance"] = cmd->add_option("--instance", f.instance, "2x2 or grid");
  o["seed"] = cmd->add_option("--seed", f.seed, "Master seed");
  o["alpha"] = cmd->add_option("--alpha", f.alpha, "Miscoverage level");
  o["lambda"] = cmd->add_option("--lambda", f.lambda, "Entropic strengths")->delimiter(',');
  o["fixed_lambda"] = cmd->add_option("--fixed-lambda", f.fixed_lambda, "Entropic strength");
  o["image_a"] = cmd->add_option("--image-a", f.image_a, "First PGM image");
  o["image_b"] = cmd->add_option("--image-b", f.image_b, "Second PGM image");
  o["side"] = cmd->add_option("--side", f.side, "Side of the synthetic images");
  o["xi_points"] = cmd->add_option("--xi-points", f.xi_points, "Points of the xi grid");
  o["flows"] = cmd->add_option("--flows", f.flows, "CSV of daily net flows (days x stations)");
  o["cost"] = cmd->add_option("--cost", f.cost, "CSV station cost matrix");
  o["stations"] = cmd->add_option("--stations", f.stations, "Synthetic station count");
  o["days"] = cmd->add_option("--days", f.days, "Synthetic day count");
  o["workers"] = cmd->add_option("--workers", f.workers, "Worker threads (0: automatic)");
  o["null"] = cmd->add_flag("--null", "Synthetic flows with zero mean");
  o["force"] = cmd->add_flag("--force", "Run beyond the desk-scale guardrails");
  cmd->add_option("--manifest", a.manifest, "Reload the configuration from a manifest.json")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, "Output directory")->required();
}

void apply_flags(const ExperimentFlags& f, ExperimentConfig& c) {
  auto set = [&f](const char* key) { return f.opts.at(key)->count() > 0; };
  if (set("n")) c.n_list = f.n;
  if (set("B")) c.B = f.B;
  if (set("R")) c.R = f.R;
  if (set("r0")) c.r0_list = f.r0;
  if (set("penalty")) c.penalties = f.penalties;
  if (set("kappa")) c.kappa = f.kappa;
  if (set("rate")) c.rate = f.rate;
  if (set("L")) c.L = f.L;
  if (set("instance")) c.instance = f.instance;
  if (set("seed")) c.seed = f.seed;
  if (set("alpha")) c.alpha = f.alpha;
  if (set("lambda")) c.lambda_list = f.lambda;
  if (set("fixed_lambda")) c.fixed_lambda = f.fixed_lambda;
  if (set("image_a")) c.image_a = f.image_a;
  if (set("image_b")) c.image_b = f.image_b;
  if (set("side")) c.image_side = f.side;
  if (set("xi_points")) c.xi_points = f.xi_points;
  if (set("flows")) c.flows_csv = f.flows;
  if (set("cost")) c.cost_csv = f.cost;
  if (set("stations")) c.stations = f.stations;
  if (set("days")) c.days = f.days;
  if (set("workers")) c.workers = f.workers;
  if (set("null")) c.null_model = true;
  if (set("force")) c.force = true;
}

std::string slurp(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::string text;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, fp)) > 0) text.append(buf, got);
  std::fclose(fp);
  return text;
}

int run_experiment_cmd(Experiment e, const ExperimentFlags& f, ExperimentArgs& a) {
  ExperimentConfig cfg = default_config(e);
  if (!a.manifest.empty()) {
    cfg = config_from_json(slurp(a.manifest));
    if (cfg.experiment != e) {
      throw Error(ErrorCode::kInvalidInput, "manifest is for experiment '" +
                                                std::string(to_string(cfg.experiment)) + "'");
    }
  }
  apply_flags(f, cfg);
  const ResultBundle bundle = run_experiment(cfg);
  write_bundle(bundle, a.out);
  std::cout << bundle.summary_json;
  return bundle.failures > 0 ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Debiased estimation and inference for linear programs with noisy constraints"};
  app.set_version_flag("--version", build_describe());
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto add_solve = [&](const char* name, const char* help) {
    CLI::App* cmd = app.add_subcommand(name, help);
    cmd->add_option("--lp", solve_args.lp_path, "LP as CSV: row 0 is c, then rows [A | b]")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--penalty", solve_args.penalty, "log, exp, sq or invpoly:<a>");
    cmd->add_option("--r", solve_args.r, "Penalty strength")->check(CLI::PositiveNumber);
    cmd->add_option("--kappa", solve_args.kappa, "Decay exponent of full-domain penalties");
    cmd->add_option("--out", solve_args.out, "Output JSON file (stdout when omitted)");
    return cmd;
  };
  CLI::App* solve = add_solve("solve", "Solve the penalized program at one strength");
  solve->add_flag("--exact", solve_args.exact, "Solve the unpenalized LP by simplex instead");
  CLI::App* debias = add_solve("debias", "Two-point debiased estimate at one strength");
  debias->add_flag("--oracle", solve_args.oracle, "Compare against the exact expansion oracle");

  BootstrapArgs boot;
  CLI::App* bootstrap = app.add_subcommand(
      "bootstrap", "Entrywise bootstrap intervals for an LP or a transport plan");
  bootstrap->add_option("--lp", boot.lp_path, "LP as CSV; its b is the observed vector")
      ->check(CLI::ExistingFile);
  bootstrap->add_option("--model", boot.model, "multinomial (b on the simplex) or rows");
  bootstrap->add_option("--data", boot.data_path, "Observed rows for --model rows")
      ->check(CLI::ExistingFile);
  bootstrap->add_option("--cost", boot.cost_path, "Transport cost matrix CSV")->check(CLI::ExistingFile);
  bootstrap->add_option("--t", boot.t_path, "Source marginal CSV")->check(CLI::ExistingFile);
  bootstrap->add_option("--s", boot.s_path, "Target marginal CSV")->check(CLI::ExistingFile);
  bootstrap->add_option("--n", boot.n, "Multinomial sample size")->check(CLI::PositiveNumber);
  bootstrap->add_option("--B", boot.B, "Bootstrap replicates")->check(CLI::PositiveNumber);
  bootstrap->add_option("--alpha", boot.alpha, "Miscoverage level");
  bootstrap->add_option("--penalty", boot.penalty, "log, exp, sq or invpoly:<a>");
  bootstrap->add_option("--kappa", boot.kappa, "Decay exponent of full-domain penalties");
  bootstrap->add_option("--r0", boot.r0, "Penalty scale")->check(CLI::PositiveNumber);
  bootstrap->add_option("--rate", boot.rate, "r_n = r0 n^-rate");
  bootstrap->add_option("--seed", boot.seed, "Master seed");
  bootstrap->add_option("--workers", boot.workers, "Worker threads (0: automatic)");
  bootstrap->add_option("--out", boot.out, "Output JSON file (stdout when omitted)");

  struct Entry {
    Experiment e;
    const char* help;
    ExperimentFlags flags;
    ExperimentArgs args;
    CLI::App* cmd = nullptr;
  };
  std::vector<Entry> entries;
  entries.reserve(6);
  entries.push_back({Experiment::kSim2x2, "2x2 transport simulation", {}, {}});
  entries.push_back({Experiment::kSimGrid, "Transport between random measures on a grid", {}, {}});
  entries.push_back({Experiment::kSimDegenerate, "Cost convergence rate when t = s", {}, {}});
  entries.push_back({Experiment::kEntropicCompare, "Entropic bias against debiasing", {}, {}});
  entries.push_back({Experiment::kColoc, "Colocalization curves with uniform bands", {}, {}});
  entries.push_back({Experiment::kRebalance, "Station rebalancing flows with intervals", {}, {}});
  for (Entry& en : entries) {
    en.cmd = app.add_subcommand(std::string(to_string(en.e)), en.help);
    add_experiment_flags(en.cmd, en.flags, en.args);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (solve->parsed()) return run_solve(solve_args, false);
    if (debias->parsed()) return run_solve(solve_args, true);
    if (bootstrap->parsed()) return run_bootstrap(boot);
    for (Entry& en : entries) {
      if (en.cmd->parsed()) return run_experiment_cmd(en.e, en.flags, en.args);
    }
  } catch (const Error& e) {
    std::cerr << "lp-debias: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "lp-debias: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
