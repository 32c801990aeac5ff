// Copyright 2026 The cerm Authors.
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

// cerm: command-line front end for the compressive ensemble ERM library.

#include "cerm/cerm.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using nlohmann::json;

cerm::DistributionSpec load_dist(const std::string& path) {
  const std::string text = cerm::read_text_file(path);
  try {
    return cerm::distribution_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw cerm::Error(cerm::ErrorKind::config, path + ": " + e.what());
  }
}

json checker_json(const cerm::CheckerResult& r) {
  json j;
  j["grid"] = r.grid;
  j["mass"] = r.mass;
  j["std_error"] = r.std_error;
  j["pass"] = r.pass;
  j["exact"] = r.exact;
  j["C_hat"] = r.C_hat ? json(*r.C_hat) : json(nullptr);
  j["exponent_hat"] = r.exponent_hat ? json(*r.exponent_hat) : json(nullptr);
  return j;
}

int cmd_run(const std::string& config, const std::string& out, int threads) {
  const auto res = cerm::run_experiment_file(config, threads > 0 ? threads : cerm::thread_budget(),
                                             out.empty() ? std::nullopt : std::optional<std::string>(out));
  int failed = 0;
  for (const auto& r : res.rows) failed += r.error.empty() ? 0 : 1;
  std::cout << json{{"csv", res.csv_path}, {"manifest", res.manifest_path}, {"rows", res.rows.size()}, {"failed_rows", failed}}.dump()
            << '\n';
  return 0;
}

int cmd_fit(const std::string& path, const std::string& x, const std::string& y) {
  const auto [xs, ys] = cerm::read_result_columns(path, x, y);
  const auto fit = cerm::fit_rate_points(xs, ys);
  if (fit.dropped > 0) std::cerr << "warning: dropped " << fit.dropped << " x values with nonpositive mean\n";
  std::cout << json{{"x", x},
                    {"y", y},
                    {"slope", fit.slope},
                    {"intercept", fit.intercept},
                    {"slope_se", fit.slope_se},
                    {"ci95", {fit.ci95_low, fit.ci95_high}},
                    {"points", fit.points},
                    {"dropped", fit.dropped}}
                   .dump()
            << '\n';
  return 0;
}

struct PsiArgs {
  std::string dist;
  std::vector<int> k_list;
  std::string loss = "squared";
  double beta = 1.0;
  std::string family = "gaussian";
  std::string solver = "surrogate";
  int reps = 32;
  std::int64_t pop_n = 5000;
  std::int64_t n_test = 20000;
  int iters = 2000;
  std::uint64_t seed = 1;
};

int cmd_psi(const PsiArgs& a) {
  const auto dist = load_dist(a.dist);
  const auto loss = cerm::make_loss(cerm::loss_kind_from_string(a.loss), a.beta);
  cerm::CompressibilityOptions co;
  co.n_test = a.n_test;
  co.iters = a.iters;
  co.threads = cerm::thread_budget();
  for (int k : a.k_list) {
    const auto e = cerm::estimate_compressibility(dist, loss, cerm::projection_family_from_string(a.family), k, a.reps,
                                                  a.pop_n, cerm::solver_kind_from_string(a.solver),
                                                  cerm::derive_seed(a.seed, static_cast<std::uint64_t>(k)), co);
    std::cout << json{{"k", k}, {"psi_hat", e.value}, {"std_error", e.std_error}, {"reps", e.n_samples}}.dump() << '\n';
  }
  return 0;
}

int cmd_check(const std::string& path, std::int64_t mc_n, std::uint64_t seed) {
  const auto dist = load_dist(path);
  json out;
  out["variant"] = cerm::to_string(dist.variant());
  if (dist.variant() == cerm::DistVariant::regression) {
    const auto s = dist.sample(std::min<std::int64_t>(mc_n, 100000), seed);
    const auto fit = cerm::check_spectral_decay(s.X);
    out["spectral"] = {{"eigenvalues", fit.eigenvalues},
                       {"C_hat", fit.C_hat},
                       {"omega_hat", fit.omega_hat ? json(*fit.omega_hat) : json(nullptr)},
                       {"omega", dist.regression_params().omega},
                       {"non_decaying", fit.non_decaying},
                       {"rank_deficient", fit.rank_deficient}};
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  cerm::ClassConstants g;
  std::vector<double> xi_grid{0.05, 0.1, 0.2, 0.4, 0.8};
  std::vector<double> s_grid{4.0, 5.66, 8.0, 11.3, 16.0};
  std::vector<double> eps_grid{0.05, 0.1, 0.2, 0.4, 0.8};
  if (const auto& ap = dist.assouad_params()) {
    g = cerm::assouad_constants(*ap);
    const double band = ap->r / std::sqrt(2.0 * static_cast<double>(ap->q));
    xi_grid = {0.5 * band, band, 0.75};
    s_grid = {0.5, 0.5 * (1.0 + ap->r), ap->r};
    eps_grid = {0.5 * ap->epsilon, ap->epsilon, 1.0};
    const auto m = cerm::check_membership(*ap, g);
    out["membership"] = {{"geom", m.geom}, {"moment", m.moment}, {"tsybakov", m.tsybakov}};
  } else if (dist.variant() == cerm::DistVariant::gauss_margin) {
    const auto& p = dist.gauss_margin_params();
    g = {p.gamma, 1.0, p.rho, 1.0, p.alpha, 1.0};
  }
  if (dist.reference()) out["geometric_margin"] = checker_json(cerm::check_geometric_margin(dist, xi_grid, mc_n, seed, g.C_G, g.gamma));
  out["moment"] = checker_json(cerm::check_moment(dist, s_grid, mc_n, cerm::derive_seed(seed, 1), g.C_M, g.rho));
  out["tsybakov"] = checker_json(cerm::check_tsybakov(dist, eps_grid, mc_n, cerm::derive_seed(seed, 2), g.C_T, g.alpha));
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_jl(const std::string& family, int q, int d, double epsilon, int k, int trials, double delta, double c_jl,
           std::uint64_t seed) {
  const int kk = k > 0 ? k : cerm::jl_target_dimension(q, delta, epsilon, c_jl);
  std::mt19937_64 rng(cerm::splitmix64(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  cerm::Matrix pts(q, d);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = normal(rng);
  const auto fam = cerm::projection_family_from_string(family);
  const double rate = cerm::empirical_jl_check(fam, pts, epsilon, kk, trials, cerm::derive_seed(seed, 1));
  const double se = std::sqrt(std::max(rate * (1.0 - rate), 1e-12) / trials);
  std::cout << json{{"family", family}, {"q", q}, {"d", d}, {"epsilon", epsilon}, {"k", kk}, {"trials", trials},
                    {"failure_rate", rate}, {"binomial_se", se}, {"delta", delta}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_slawski(int d, int k, int r, double omega, int seeds, std::uint64_t seed) {
  const cerm::Matrix X = cerm::make_spectral_design(d, d, omega, seed);
  std::mt19937_64 rng(cerm::splitmix64(cerm::derive_seed(seed, 1)));
  std::normal_distribution<double> normal(0.0, 1.0);
  cerm::Vector w(d);
  for (int j = 0; j < d; ++j) w(j) = normal(rng);
  int within = 0;
  double worst = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const auto A = cerm::sample_projection(cerm::ProjectionFamily::gaussian, k, d, cerm::derive_seed(seed, 100 + s));
    const auto res = cerm::slawski_ratio(X, w, A, r);
    within += res.ratio <= 1.0 ? 1 : 0;
    worst = std::max(worst, res.ratio);
  }
  std::cout << json{{"d", d}, {"q", d}, {"k", k}, {"r", r}, {"omega", omega}, {"sketches", seeds},
                    {"ratio_le_1", within}, {"max_ratio", worst}}
                   .dump()
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressive ensemble empirical risk minimization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cerm::kVersion));

  std::string config, out_prefix;
  int threads = 0;
  auto* run = app.add_subcommand("run", "Run an experiment config (writes <name>.csv and <name>.manifest.jsonl)");
  run->add_option("config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_prefix, "Output path prefix (overrides the config)");
  run->add_option("--threads", threads, "Thread budget (default: CERM_THREADS or all cores)");

  std::string results, x_field = "n", y_field = "ensemble_excess";
  auto* fit = app.add_subcommand("fit", "Fit a log-log rate to a results CSV");
  fit->add_option("results", results, "Results CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--x", x_field, "x column")->check(CLI::IsMember({"n", "k", "m"}));
  fit->add_option("--y", y_field, "y column");

  PsiArgs psi;
  auto* psi_cmd = app.add_subcommand("psi", "Estimate the compressibility function psi(k)");
  psi_cmd->add_option("dist", psi.dist, "Distribution spec (JSON)")->required()->check(CLI::ExistingFile);
  psi_cmd->add_option("--k-list", psi.k_list, "Target dimensions")->required()->delimiter(',');
  psi_cmd->add_option("--loss", psi.loss, "Loss kind")->check(CLI::IsMember({"zero_one", "squared", "kl"}));
  psi_cmd->add_option("--beta", psi.beta, "Range bound beta");
  psi_cmd->add_option("--family", psi.family, "Projection family");
  psi_cmd->add_option("--solver", psi.solver, "exact or surrogate");
  psi_cmd->add_option("--reps", psi.reps, "Projection draws");
  psi_cmd->add_option("--pop-n", psi.pop_n, "Population-proxy sample size");
  psi_cmd->add_option("--n-test", psi.n_test, "Test draw size");
  psi_cmd->add_option("--iters", psi.iters, "Solver iterations");
  psi_cmd->add_option("--seed", psi.seed, "Seed");

  std::string check_path;
  std::int64_t mc_n = 1000000;
  std::uint64_t check_seed = 1;
  auto* check = app.add_subcommand("check-dist", "Run the distributional assumption checkers");
  check->add_option("dist", check_path, "Distribution spec (JSON)")->required()->check(CLI::ExistingFile);
  check->add_option("--mc-n", mc_n, "Monte-Carlo draws");
  check->add_option("--seed", check_seed, "Seed");

  std::string jl_family = "gaussian";
  int jl_q = 50, jl_d = 500, jl_k = 0, jl_trials = 400;
  double jl_eps = 0.5, jl_delta = 0.05, jl_c = 8.0;
  std::uint64_t jl_seed = 1;
  auto* jl = app.add_subcommand("jl-check", "Empirical Johnson-Lindenstrauss failure rate");
  jl->add_option("--family", jl_family, "Projection family");
  jl->add_option("--q", jl_q, "Number of points");
  jl->add_option("--d", jl_d, "Ambient dimension");
  jl->add_option("--epsilon", jl_eps, "Distortion");
  jl->add_option("--k", jl_k, "Target dimension (default: ceil(c_jl ln(q/delta)/eps^2))");
  jl->add_option("--trials", jl_trials, "Trials");
  jl->add_option("--delta", jl_delta, "Failure probability for the default k");
  jl->add_option("--c-jl", jl_c, "JL constant for the default k");
  jl->add_option("--seed", jl_seed, "Seed");

  int sl_d = 40, sl_k = 15, sl_r = 5, sl_seeds = 100;
  double sl_omega = 0.5;
  std::uint64_t sl_seed = 1;
  auto* sl = app.add_subcommand("slawski-check", "Compressive least-squares residual versus its spectral bound");
  sl->add_option("--d", sl_d, "Dimension (design is d x d)");
  sl->add_option("--k", sl_k, "Sketch size");
  sl->add_option("--r", sl_r, "Retained rank");
  sl->add_option("--omega", sl_omega, "Eigenvalue decay");
  sl->add_option("--sketches", sl_seeds, "Number of sketches");
  sl->add_option("--seed", sl_seed, "Seed");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config, out_prefix, threads);
    if (*fit) return cmd_fit(results, x_field, y_field);
    if (*psi_cmd) return cmd_psi(psi);
    if (*check) return cmd_check(check_path, mc_n, check_seed);
    if (*jl) return cmd_jl(jl_family, jl_q, jl_d, jl_eps, jl_k, jl_trials, jl_delta, jl_c, jl_seed);
    if (*sl) return cmd_slawski(sl_d, sl_k, sl_r, sl_omega, sl_seeds, sl_seed);
  } catch (const cerm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
