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

#ifndef CERM_HARNESS_HPP
#define CERM_HARNESS_HPP

#include "cerm/core.hpp"
#include "cerm/ensemble.hpp"
#include "cerm/riskbounds.hpp"
#include "cerm/synthdist.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace cerm {

enum class KRuleKind { fixed, theorem3, theorem8 };

struct KRule {
  KRuleKind kind = KRuleKind::fixed;
  int k = 1;
  double gamma = 2.0;
  double rho = 2.0;
  double alpha = 0.0;

  int at(std::int64_t n) const {
    switch (kind) {
      case KRuleKind::fixed: return k;
      case KRuleKind::theorem3: return optimal_k_classification(n, gamma, rho, alpha);
      case KRuleKind::theorem8: return optimal_k_regression(n);
    }
    return k;
  }
};

/// Confidence level used for bound brackets.
inline constexpr double kBracketDelta = 0.05;

struct ExperimentConfig {
  std::string name = "results";
  std::string output;  // path prefix; empty means name in the working directory
  nlohmann::json distribution;
  LossKind loss = LossKind::zero_one;
  double beta = 1.0;
  ProjectionFamily family = ProjectionFamily::gaussian;
  std::vector<std::int64_t> n_list;
  std::vector<int> m_list;
  KRule k_rule;
  int trials = 1;
  std::int64_t n_test = 100000;
  std::uint64_t master_seed = 0;
  SolverKind solver = SolverKind::surrogate;
  int iters = 2000;
  std::optional<double> bracket_alpha;
  int psi_reps = 0;
  std::int64_t pop_factor = 50;
  nlohmann::json source;

  std::string output_prefix() const { return output.empty() ? name : output; }
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::config, "config." + path + ": " + what);
}

template <typename T>
T config_get(const nlohmann::json& j, const std::string& key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    config_error(key, e.what());
  }
}

}  // namespace detail

/// Validates and decodes a config document. `base_dir` resolves a relative
/// distribution_file.
inline ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  using detail::config_error;
  using detail::config_get;
  if (!j.is_object()) config_error("", "config must be an object");
  ExperimentConfig c;
  c.source = j;
  c.name = config_get<std::string>(j, "name", "results");
  c.output = config_get<std::string>(j, "output", "");

  if (j.contains("distribution")) {
    c.distribution = j.at("distribution");
  } else if (j.contains("distribution_file")) {
    std::filesystem::path p = config_get<std::string>(j, "distribution_file", "");
    if (p.is_relative()) p = base_dir / p;
    std::ifstream in(p);
    if (!in) config_error("distribution_file", "cannot open " + p.string());
    try {
      c.distribution = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      config_error("distribution_file", e.what());
    }
  } else {
    config_error("distribution", "missing (give distribution or distribution_file)");
  }
  try {
    distribution_from_json(c.distribution);
  } catch (const Error& e) {
    config_error("distribution", e.what());
  }

  if (!j.contains("loss")) config_error("loss", "missing");
  const auto& jl = j.at("loss");
  try {
    c.loss = loss_kind_from_string(jl.is_string() ? jl.get<std::string>() : jl.at("kind").get<std::string>());
    if (jl.is_object()) c.beta = config_get<double>(jl, "beta", 1.0);
  } catch (const std::exception& e) {
    config_error("loss", e.what());
  }
  if (!(c.beta > 0.0)) config_error("loss.beta", "must be positive");

  try {
    c.family = projection_family_from_string(config_get<std::string>(j, "family", "gaussian"));
  } catch (const Error& e) {
    config_error("family", e.what());
  }
  c.n_list = config_get<std::vector<std::int64_t>>(j, "n", {});
  c.m_list = config_get<std::vector<int>>(j, "m", {});
  if (c.n_list.empty()) config_error("n", "sweep list must be non-empty");
  if (c.m_list.empty()) config_error("m", "sweep list must be non-empty");
  for (std::size_t i = 0; i < c.n_list.size(); ++i)
    if (c.n_list[i] < 1) config_error("n[" + std::to_string(i) + "]", "must be >= 1");
  for (std::size_t i = 0; i < c.m_list.size(); ++i)
    if (c.m_list[i] < 1) config_error("m[" + std::to_string(i) + "]", "must be >= 1");
  if (std::set<std::int64_t>(c.n_list.begin(), c.n_list.end()).size() != c.n_list.size())
    config_error("n", "duplicate values");
  if (std::set<int>(c.m_list.begin(), c.m_list.end()).size() != c.m_list.size()) config_error("m", "duplicate values");

  if (!j.contains("k_rule")) config_error("k_rule", "missing");
  const auto& jk = j.at("k_rule");
  const std::string kind = jk.is_string() ? jk.get<std::string>() : config_get<std::string>(jk, "kind", "");
  if (kind == "fixed") {
    c.k_rule.kind = KRuleKind::fixed;
    c.k_rule.k = config_get<int>(jk, "k", 0);
    if (c.k_rule.k < 1) config_error("k_rule.k", "must be >= 1");
  } else if (kind == "theorem3") {
    c.k_rule.kind = KRuleKind::theorem3;
    c.k_rule.gamma = config_get<double>(jk, "gamma", 0.0);
    c.k_rule.rho = config_get<double>(jk, "rho", 0.0);
    c.k_rule.alpha = config_get<double>(jk, "alpha", 0.0);
    if (!(c.k_rule.gamma > 0.0)) config_error("k_rule.gamma", "must be positive");
    if (!(c.k_rule.rho > 0.0)) config_error("k_rule.rho", "must be positive");
    if (!(c.k_rule.alpha >= 0.0 && c.k_rule.alpha < 1.0)) config_error("k_rule.alpha", "must lie in [0, 1)");
    const auto& jd = c.distribution;
    if (jd.value("variant", "") == "gauss_margin") {
      for (const char* key : {"gamma", "rho", "alpha"}) {
        const double dv = jd.value(key, 0.0);
        const double kv = key[0] == 'g' ? c.k_rule.gamma : key[0] == 'r' ? c.k_rule.rho : c.k_rule.alpha;
        if (dv != kv) config_error(std::string("k_rule.") + key, "disagrees with the distribution's exponent");
      }
    }
  } else if (kind == "theorem8") {
    c.k_rule.kind = KRuleKind::theorem8;
  } else {
    config_error("k_rule.kind", "must be fixed, theorem3 or theorem8");
  }

  c.trials = config_get<int>(j, "trials", 1);
  if (c.trials < 1) config_error("trials", "must be >= 1");
  c.n_test = config_get<std::int64_t>(j, "n_test", 100000);
  if (c.n_test < 1) config_error("n_test", "must be >= 1");
  c.master_seed = config_get<std::uint64_t>(j, "master_seed", 0);
  try {
    c.solver = solver_kind_from_string(config_get<std::string>(j, "solver", "surrogate"));
  } catch (const Error& e) {
    config_error("solver", e.what());
  }
  c.iters = config_get<int>(j, "iters", 2000);
  if (c.iters < 1) config_error("iters", "must be >= 1");
  if (j.contains("bracket_alpha")) {
    c.bracket_alpha = config_get<double>(j, "bracket_alpha", 0.0);
    if (!(*c.bracket_alpha >= 0.0 && *c.bracket_alpha <= 1.0)) config_error("bracket_alpha", "must lie in [0, 1]");
  }
  c.psi_reps = config_get<int>(j, "psi_reps", 0);
  if (c.psi_reps < 0) config_error("psi_reps", "must be >= 0");
  c.pop_factor = config_get<std::int64_t>(j, "pop_factor", 50);
  if (c.pop_factor < 1) config_error("pop_factor", "must be >= 1");
  return c;
}

inline std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::config, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// 64-bit FNV-1a of the config bytes, as 16 hex digits.
inline std::string hash_config_text(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct ResultRow {
  std::int64_t n = 0;
  int k = 0;
  int m = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double member_mean_excess = 0.0;
  double ensemble_excess = 0.0;
  double ensemble_excess_se = 0.0;
  std::optional<double> psi_hat;
  double bracket_total = 0.0;
  double wall_time_ms = 0.0;
  std::string error;
};

inline const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols = {"n",
                                                "k",
                                                "m",
                                                "trial",
                                                "seed",
                                                "member_mean_excess",
                                                "ensemble_excess",
                                                "ensemble_excess_se",
                                                "psi_hat",
                                                "bracket_total",
                                                "wall_time_ms",
                                                "error"};
  return cols;
}

/// Shortest round-trip decimal, independent of the locale.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

inline std::string format_row(const ResultRow& r) {
  const bool failed = !r.error.empty();
  auto num = [&](double v) { return failed ? std::string() : format_double(v); };
  std::string line;
  line += std::to_string(r.n) + ",";
  line += std::to_string(r.k) + ",";
  line += std::to_string(r.m) + ",";
  line += std::to_string(r.trial) + ",";
  line += std::to_string(r.seed) + ",";
  line += num(r.member_mean_excess) + ",";
  line += num(r.ensemble_excess) + ",";
  line += num(r.ensemble_excess_se) + ",";
  line += (r.psi_hat ? format_double(*r.psi_hat) : std::string()) + ",";
  line += num(r.bracket_total) + ",";
  line += format_double(std::round(r.wall_time_ms * 1000.0) / 1000.0) + ",";
  line += csv_escape(r.error);
  return line;
}

struct ExperimentResult {
  std::string csv_path;
  std::string manifest_path;
  std::vector<ResultRow> rows;
};

/// Seed of the (n, trial) unit; all m values of the unit share its training
/// sample, members (prefixes of one member sequence) and test draw.
inline std::uint64_t unit_seed(std::uint64_t master, std::int64_t n, int trial) {
  return derive_seed(derive_seed(master, static_cast<std::uint64_t>(n)), static_cast<std::uint64_t>(trial));
}

/// Runs every (n, m, trial) cell and writes <prefix>.csv and <prefix>.manifest.jsonl.
/// Output is identical for any thread budget.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& config_hash,
                                       int threads = thread_budget()) {
  const DistributionSpec dist = distribution_from_json(cfg.distribution);
  const LossSpec loss = make_loss(cfg.loss, cfg.beta);
  std::vector<std::int64_t> ns = cfg.n_list;
  std::vector<int> ms = cfg.m_list;
  std::sort(ns.begin(), ns.end());
  std::sort(ms.begin(), ms.end());
  const int m_max = ms.back();
  const double alpha = cfg.bracket_alpha ? *cfg.bracket_alpha
                       : cfg.k_rule.kind == KRuleKind::theorem3 ? cfg.k_rule.alpha
                       : loss.kind == LossKind::zero_one       ? 0.0
                                                                : 1.0;

  // psi_hat per distinct k, fitted at pop_factor times the largest n using that k.
  std::map<int, std::int64_t> k_pop;
  for (std::int64_t n : ns) k_pop[cfg.k_rule.at(n)] = std::max(k_pop[cfg.k_rule.at(n)], cfg.pop_factor * n);
  std::map<int, double> psi_cache;
  if (cfg.psi_reps > 0) {
    for (const auto& [k, pop] : k_pop) {
      CompressibilityOptions co;
      co.n_test = cfg.n_test;
      co.iters = cfg.iters;
      co.threads = threads;
      psi_cache[k] = estimate_compressibility(dist, loss, cfg.family, k, cfg.psi_reps, pop, cfg.solver,
                                              derive_seed(cfg.master_seed, 0x7073690000000000ULL + k), co)
                         .value;
    }
  }

  struct Unit {
    std::int64_t n;
    int trial;
  };
  std::vector<Unit> units;
  for (std::int64_t n : ns)
    for (int t = 0; t < cfg.trials; ++t) units.push_back({n, t});
  std::vector<std::vector<ResultRow>> slots(units.size());

  parallel_for(units.size(), threads, [&](std::size_t u) {
    const auto start = std::chrono::steady_clock::now();
    const Unit unit = units[u];
    const std::uint64_t seed = unit_seed(cfg.master_seed, unit.n, unit.trial);
    const int k = cfg.k_rule.at(unit.n);
    std::vector<ResultRow> rows;
    for (int m : ms) {
      ResultRow r;
      r.n = unit.n;
      r.k = k;
      r.m = m;
      r.trial = unit.trial;
      r.seed = seed;
      if (auto it = psi_cache.find(k); it != psi_cache.end()) r.psi_hat = it->second;
      rows.push_back(r);
    }
    try {
      const Sample s = dist.sample(unit.n, derive_seed(seed, 0));
      TrainOptions opts;
      opts.iters = cfg.iters;
      const EnsembleModel model =
          train(s.X, labels_for_loss(loss, s.y), loss, cfg.family, k, m_max, cfg.solver, derive_seed(seed, 1), opts);
      // Columns: every member, then one ensemble per m (member prefix).
      const int cols = m_max + static_cast<int>(ms.size());
      BatchPredictor batch = [&](const Matrix& X) {
        const Matrix votes = model.member_predictions(X);
        Matrix out(X.rows(), cols);
        out.leftCols(m_max) = votes;
        for (std::size_t i = 0; i < ms.size(); ++i)
          out.col(m_max + static_cast<Eigen::Index>(i)) = model.combine_rows(votes.leftCols(ms[i]));
        return out;
      };
      const auto risks = excess_risks(dist, loss, batch, cols, cfg.n_test, derive_seed(seed, 2));
      for (std::size_t i = 0; i < ms.size(); ++i) {
        ResultRow& r = rows[i];
        double mean = 0.0;
        for (int j = 0; j < ms[i]; ++j) mean += risks[static_cast<std::size_t>(j)].value;
        r.member_mean_excess = mean / ms[i];
        const RiskEstimate& e = risks[static_cast<std::size_t>(m_max) + i];
        r.ensemble_excess = e.value;
        r.ensemble_excess_se = e.std_error;
        r.bracket_total = theorem2_bracket(static_cast<double>(unit.n), k, ms[i], kBracketDelta, alpha, r.psi_hat.value_or(0.0)).total;
      }
    } catch (const std::exception& e) {
      for (auto& r : rows) r.error = e.what();
    }
    const double ms_elapsed =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    for (auto& r : rows) r.wall_time_ms = ms_elapsed;
    slots[u] = std::move(rows);
  });

  ExperimentResult result;
  for (auto& s : slots)
    for (auto& r : s) result.rows.push_back(std::move(r));
  std::stable_sort(result.rows.begin(), result.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.n, a.k, a.m, a.trial) < std::tie(b.n, b.k, b.m, b.trial);
  });

  const std::filesystem::path prefix = cfg.output_prefix();
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
  result.csv_path = prefix.string() + ".csv";
  result.manifest_path = prefix.string() + ".manifest.jsonl";
  {
    std::ofstream out(result.csv_path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::config, "cannot write " + result.csv_path);
    const auto& cols = result_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : result.rows) out << format_row(r) << '\n';
  }
  {
    std::ofstream out(result.manifest_path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::config, "cannot write " + result.manifest_path);
    nlohmann::json head;
    head["record"] = "run";
    head["config_hash"] = config_hash;
    head["library_version"] = kVersion;
    head["name"] = cfg.name;
    head["master_seed"] = cfg.master_seed;
    head["bracket_delta"] = kBracketDelta;
    head["bracket_alpha"] = alpha;
    head["config"] = cfg.source;
    out << head.dump() << '\n';
    for (const auto& [k, psi] : psi_cache)
      out << nlohmann::json{{"record", "psi"}, {"k", k}, {"pop_n", k_pop[k]}, {"reps", cfg.psi_reps}, {"psi_hat", psi}}.dump()
          << '\n';
    for (const auto& r : result.rows) {
      nlohmann::json cell = {{"record", "cell"},
                             {"n", r.n},
                             {"k", r.k},
                             {"m", r.m},
                             {"trial", r.trial},
                             {"seed", r.seed},
                             {"data_seed", derive_seed(r.seed, 0)},
                             {"ensemble_seed", derive_seed(r.seed, 1)},
                             {"test_seed", derive_seed(r.seed, 2)}};
      if (!r.error.empty()) cell["error"] = r.error;
      out << cell.dump() << '\n';
    }
  }
  return result;
}

/// Loads a config file (JSON), hashes its bytes and runs it.
inline ExperimentResult run_experiment_file(const std::filesystem::path& path, int threads = thread_budget(),
                                            const std::optional<std::string>& output_override = std::nullopt) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("config: ") + e.what());
  }
  ExperimentConfig cfg = parse_config(j, path.parent_path());
  if (output_override) cfg.output = *output_override;
  return run_experiment(cfg, hash_config_text(text), threads);
}

// ---------------------------------------------------------------------------
// Rate fitting.

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
  int points = 0;
  int dropped = 0;
};

/// Log-log fit of mean y against x over the distinct x values, weighted by the
/// inverse variance of log(mean y) from the trial scatter (unweighted when any
/// group has a single trial or zero scatter).
inline RateFit fit_rate_points(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), ErrorKind::dimension_mismatch, "x and y lengths differ");
  std::map<double, std::vector<double>> groups;
  for (std::size_t i = 0; i < x.size(); ++i) groups[x[i]].push_back(y[i]);
  RateFit fit;
  std::vector<double> lx, ly, se;
  for (const auto& [xv, ys] : groups) {
    const RiskEstimate e = mean_with_error(ys);
    if (!(e.value > 0.0) || !(xv > 0.0)) {
      ++fit.dropped;
      continue;
    }
    lx.push_back(std::log(xv));
    ly.push_back(std::log(e.value));
    se.push_back(ys.size() > 1 ? e.std_error / e.value : 0.0);
  }
  require(lx.size() >= 3, ErrorKind::insufficient_points,
          "rate fit needs >= 3 distinct x values with positive mean y (got " + std::to_string(lx.size()) + ")");
  const bool weighted = std::all_of(se.begin(), se.end(), [](double s) { return s > 0.0; });
  std::vector<double> w(lx.size(), 1.0);
  if (weighted)
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 / (se[i] * se[i]);
  const LineFit lf = weighted_line_fit(lx, ly, w);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  fit.slope_se = lf.slope_se;
  fit.ci95_low = lf.ci95_low;
  fit.ci95_high = lf.ci95_high;
  fit.points = lf.points;
  return fit;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

/// Reads the named columns of a results CSV, skipping rows with an error or an
/// empty field.
inline std::pair<std::vector<double>, std::vector<double>> read_result_columns(const std::filesystem::path& path,
                                                                               const std::string& x_field,
                                                                               const std::string& y_field) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::config, "cannot open " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::insufficient_points, "results file is empty");
  const auto header = detail::split_csv_line(line);
  auto index_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    require(it != header.end(), ErrorKind::config, "results file has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t xi = index_of(x_field), yi = index_of(y_field);
  const auto ei = std::find(header.begin(), header.end(), "error");
  std::vector<double> xs, ys;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (ei != header.end()) {
      const auto e = static_cast<std::size_t>(ei - header.begin());
      if (e < f.size() && !f[e].empty()) continue;
    }
    if (xi >= f.size() || yi >= f.size() || f[xi].empty() || f[yi].empty()) continue;
    xs.push_back(std::stod(f[xi]));
    ys.push_back(std::stod(f[yi]));
  }
  return {xs, ys};
}

inline RateFit fit_rate(const std::filesystem::path& path, const std::string& x_field, const std::string& y_field) {
  require(x_field == "n" || x_field == "k" || x_field == "m", ErrorKind::config, "x_field must be n, k or m");
  const auto [xs, ys] = read_result_columns(path, x_field, y_field);
  return fit_rate_points(xs, ys);
}

}  // namespace cerm

#endif  // CERM_HARNESS_HPP
