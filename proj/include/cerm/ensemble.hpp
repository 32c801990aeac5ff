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

#ifndef CERM_ENSEMBLE_HPP
#define CERM_ENSEMBLE_HPP

#include "cerm/core.hpp"
#include "cerm/hypotheses.hpp"
#include "cerm/losses.hpp"
#include "cerm/projections.hpp"
#include "cerm/synthdist.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace cerm {

struct EnsembleMember {
  ProjectionMap map;
  LinearHypothesis hypothesis;
};

struct TrainOptions {
  int iters = 2000;
  GdSchedule schedule{};
  bool compute_gap = false;
  int threads = 1;
};

/// m compressed members combined under the loss' combiner.
struct EnsembleModel {
  std::vector<EnsembleMember> members;
  std::vector<ErmReport> member_reports;
  LossSpec loss;
  ProjectionFamily family = ProjectionFamily::gaussian;
  int k = 1;
  int m = 1;
  int d = 1;
  std::uint64_t master_seed = 0;

  /// n x m matrix of member outputs.
  Matrix member_predictions(const Matrix& X) const {
    require(X.cols() == d, ErrorKind::dimension_mismatch,
            "input has " + std::to_string(X.cols()) + " columns, ensemble expects " + std::to_string(d));
    Matrix out(X.rows(), static_cast<Eigen::Index>(members.size()));
    for (std::size_t i = 0; i < members.size(); ++i)
      out.col(static_cast<Eigen::Index>(i)) = members[i].hypothesis.predict_rows(members[i].map.apply(X));
    return out;
  }

  Vector predict(const Matrix& X) const { return combine_rows(member_predictions(X)); }

  /// Row-wise combination of member outputs. Votes are sorted before summing
  /// so the result does not depend on member order.
  Vector combine_rows(const Matrix& votes) const {
    Vector out(votes.rows());
    std::vector<double> row(static_cast<std::size_t>(votes.cols()));
    for (Eigen::Index i = 0; i < votes.rows(); ++i) {
      for (Eigen::Index c = 0; c < votes.cols(); ++c) row[static_cast<std::size_t>(c)] = votes(i, c);
      std::sort(row.begin(), row.end());
      out(i) = combine(loss, row);
    }
    return out;
  }

  nlohmann::json summary() const {
    nlohmann::json j;
    j["family"] = to_string(family);
    j["loss"] = to_string(loss.kind);
    j["beta"] = loss.beta;
    j["k"] = k;
    j["m"] = m;
    j["d"] = d;
    j["master_seed"] = master_seed;
    nlohmann::json ms = nlohmann::json::array();
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto& h = members[i].hypothesis;
      nlohmann::json mj;
      mj["seed"] = members[i].map.seed();
      mj["w"] = std::vector<double>(h.w.data(), h.w.data() + h.w.size());
      mj["t"] = h.t;
      mj["empirical_risk"] = member_reports[i].empirical_risk;
      mj["solver"] = to_string(member_reports[i].solver);
      if (member_reports[i].surrogate_gap) mj["surrogate_gap"] = *member_reports[i].surrogate_gap;
      ms.push_back(mj);
    }
    j["members"] = ms;
    return j;
  }
};

/// Trains member i on apply(A_i, X) with A_i drawn from seed derive_seed(master_seed, i).
/// Members are fitted on up to options.threads workers; results do not depend on it.
inline EnsembleModel train(const Matrix& X, const Vector& y, const LossSpec& loss, ProjectionFamily family, int k,
                           int m, SolverKind solver, std::uint64_t master_seed, const TrainOptions& options = {}) {
  require(X.rows() >= 1 && m >= 1 && k >= 1, ErrorKind::invalid_dimension, "train needs n, m, k >= 1");
  require(X.rows() == y.size(), ErrorKind::dimension_mismatch, "X and y row counts differ");
  EnsembleModel model;
  model.loss = loss;
  model.family = family;
  model.k = k;
  model.m = m;
  model.d = static_cast<int>(X.cols());
  model.master_seed = master_seed;
  std::vector<std::optional<EnsembleMember>> members(static_cast<std::size_t>(m));
  model.member_reports.resize(static_cast<std::size_t>(m));

  parallel_for(static_cast<std::size_t>(m), options.threads, [&](std::size_t i) {
    ProjectionMap map = sample_projection(family, k, model.d, derive_seed(master_seed, i));
    const Matrix U = map.apply(X);
    ErmReport report;
    if (loss.kind == LossKind::zero_one) {
      report = solver == SolverKind::exact
                   ? erm_exact_classification(U, y)
                   : erm_surrogate_classification(U, y, options.iters, options.schedule, options.compute_gap);
    } else {
      report = erm_regression(U, y, loss, options.iters);
    }
    members[i] = EnsembleMember{std::move(map), report.hypothesis};
    model.member_reports[i] = std::move(report);
  });
  for (auto& mem : members) model.members.push_back(std::move(*mem));
  return model;
}

inline Vector predict(const EnsembleModel& model, const Matrix& X) { return model.predict(X); }

/// One excess-risk estimate per member followed by one for the ensemble, all
/// on the same test draw (exact sums on finite laws).
inline std::vector<RiskEstimate> member_excess_risks(const EnsembleModel& model, const DistributionSpec& dist,
                                                     std::int64_t n_test, std::uint64_t seed) {
  const int count = static_cast<int>(model.members.size()) + 1;
  BatchPredictor batch = [&](const Matrix& X) {
    const Matrix votes = model.member_predictions(X);
    Matrix out(X.rows(), count);
    out.leftCols(count - 1) = votes;
    out.col(count - 1) = model.combine_rows(votes);
    return out;
  };
  return excess_risks(dist, model.loss, batch, count, n_test, seed);
}

}  // namespace cerm

#endif  // CERM_ENSEMBLE_HPP
