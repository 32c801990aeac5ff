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

#ifndef CERM_HYPOTHESES_HPP
#define CERM_HYPOTHESES_HPP

#include "cerm/core.hpp"
#include "cerm/losses.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <optional>
#include <string>
#include <vector>

namespace cerm {

enum class PredictMode { sign, clip };
enum class SolverKind { exact, surrogate };

inline const char* to_string(SolverKind s) { return s == SolverKind::exact ? "exact" : "surrogate"; }

inline SolverKind solver_kind_from_string(const std::string& s) {
  if (s == "exact") return SolverKind::exact;
  if (s == "surrogate") return SolverKind::surrogate;
  throw Error(ErrorKind::config, "unknown solver '" + s + "'");
}

/// u -> sign(w.u - t) with sign(0) = +1, or u -> clip(w.u - t, -beta, beta).
struct LinearHypothesis {
  Vector w;
  double t = 0.0;
  PredictMode mode = PredictMode::sign;
  double beta = 1.0;

  double score(const Eigen::Ref<const Eigen::RowVectorXd>& u) const { return u.dot(w) - t; }

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& u) const { return finish(score(u)); }

  Vector predict_rows(const Matrix& U) const {
    require(U.cols() == w.size(), ErrorKind::dimension_mismatch, "hypothesis input dimension mismatch");
    Vector s = U * w;
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = finish(s(i) - t);
    return s;
  }

  double finish(double z) const { return mode == PredictMode::sign ? sign_of(z) : std::clamp(z, -beta, beta); }
};

struct ErmReport {
  LinearHypothesis hypothesis;
  double empirical_risk = 0.0;
  SolverKind solver = SolverKind::exact;
  std::optional<double> surrogate_gap;
  /// Surrogate objective at each checkpoint (iteration 0, every 50 steps, final).
  std::vector<double> objective_trace;
  /// Mean objective decrease per iteration over the last checkpoint interval.
  double final_decrease_per_iter = 0.0;
  int iterations = 0;
};

/// Mean loss of `h` on (U, y), recomputed from scratch.
inline double empirical_risk(const LinearHypothesis& h, const Matrix& U, const Vector& y, const LossSpec& loss) {
  require(U.rows() == y.size(), ErrorKind::dimension_mismatch, "U and y row counts differ");
  if (U.rows() == 0) return 0.0;
  const Vector p = h.predict_rows(U);
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) total += eval(loss, p(i), y(i));
  return total / static_cast<double>(U.rows());
}

namespace detail {

inline constexpr int kExactMaxDim = 3;
inline constexpr Eigen::Index kExactMaxRows = 200;

struct Halfspace {
  Vector w;
  double t = 0.0;
  int errors = 0;
};

inline int count_errors(const Matrix& Z, const std::vector<double>& y, const Vector& w, double t) {
  int e = 0;
  for (Eigen::Index i = 0; i < Z.rows(); ++i)
    if (sign_of(Z.row(i).dot(w) - t) != y[static_cast<std::size_t>(i)]) ++e;
  return e;
}

inline Halfspace best_constant(const std::vector<double>& y, Eigen::Index dim) {
  int pos = 0;
  for (double v : y) pos += v > 0.0 ? 1 : 0;
  const int neg = static_cast<int>(y.size()) - pos;
  Halfspace h{Vector::Zero(dim), pos >= neg ? -1.0 : 1.0, pos >= neg ? neg : pos};
  return h;
}

/// Unit normal of the affine hyperplane through the rows of P (dim rows in
/// R^dim) plus an orthonormal basis of its direction space. Empty normal when
/// the rows are affinely dependent.
inline bool hyperplane_through(const Matrix& P, Vector& normal, Matrix& basis) {
  const Eigen::Index dim = P.cols();
  if (dim == 1) {
    normal = Vector::Ones(1);
    basis.resize(1, 0);
    return true;
  }
  Matrix D(dim - 1, dim);
  for (Eigen::Index i = 1; i < dim; ++i) D.row(i - 1) = P.row(i) - P.row(0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(D), Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (s(0) <= 0.0 || s(dim - 2) <= 1e-10 * s(0)) return false;
  normal = svd.matrixV().col(dim - 1);
  basis = svd.matrixV().leftCols(dim - 1);
  return true;
}

/// Global minimizer of zero-one errors over sign(w.z - t) on the rows of Z.
/// Enumerates hyperplanes through dim-subsets; points lying on a candidate
/// hyperplane are labelled by recursively solving the problem inside it and
/// tilting by a small multiple of that solution.
inline Halfspace exact_halfspace(const Matrix& Z, const std::vector<double>& y) {
  const Eigen::Index m = Z.rows();
  const Eigen::Index dim = Z.cols();
  Halfspace best = best_constant(y, dim);
  if (dim == 0 || m == 0 || best.errors == 0) return best;

  // Reduce to the affine hull of the points when it is lower dimensional.
  const Eigen::RowVectorXd center = Z.colwise().mean();
  const Matrix centered = Z.rowwise() - center;
  Eigen::JacobiSVD<Eigen::MatrixXd> hull(Eigen::MatrixXd(centered), Eigen::ComputeFullV);
  const auto& sv = hull.singularValues();
  const double scale = 1.0 + Z.cwiseAbs().maxCoeff();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10 * scale * std::sqrt(static_cast<double>(m))) ++rank;
  if (rank < dim) {
    const Matrix Vr = hull.matrixV().leftCols(rank);
    const Matrix reduced = centered * Vr;
    const Halfspace sub = exact_halfspace(reduced, y);
    Halfspace lifted{Vr * sub.w, sub.t + center.dot(Vr * sub.w), 0};
    lifted.errors = count_errors(Z, y, lifted.w, lifted.t);
    return lifted.errors < best.errors ? lifted : best;
  }

  const double on_tol = 1e-9 * scale;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(dim));
  for (Eigen::Index i = 0; i < dim; ++i) idx[static_cast<std::size_t>(i)] = i;
  Matrix P(dim, dim);
  Vector normal;
  Matrix basis;
  Vector h(m);
  std::vector<Eigen::Index> on_plane;

  while (true) {
    for (Eigen::Index i = 0; i < dim; ++i) P.row(i) = Z.row(idx[static_cast<std::size_t>(i)]);
    if (hyperplane_through(P, normal, basis)) {
      const double t0 = P.row(0).dot(normal);
      h = Z * normal;
      h.array() -= t0;
      on_plane.clear();
      int err_pos = 0, err_neg = 0;
      double margin = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < m; ++j) {
        if (std::abs(h(j)) <= on_tol) {
          on_plane.push_back(j);
          continue;
        }
        margin = std::min(margin, std::abs(h(j)));
        const double yj = y[static_cast<std::size_t>(j)];
        if ((h(j) > 0.0 ? 1.0 : -1.0) != yj) ++err_pos;
        if ((h(j) > 0.0 ? -1.0 : 1.0) != yj) ++err_neg;
      }
      // dim affinely independent points inside a (dim-1)-flat admit any labelling.
      const bool generic = static_cast<Eigen::Index>(on_plane.size()) == dim;
      std::optional<Halfspace> inner;
      auto solve_inner = [&] {
        Matrix coords(static_cast<Eigen::Index>(on_plane.size()), dim - 1);
        std::vector<double> inner_y;
        for (std::size_t r = 0; r < on_plane.size(); ++r) {
          coords.row(static_cast<Eigen::Index>(r)) = (Z.row(on_plane[r]) - P.row(0)) * basis;
          inner_y.push_back(y[static_cast<std::size_t>(on_plane[r])]);
        }
        inner = exact_halfspace(coords, inner_y);
      };
      if (!generic) solve_inner();
      const int inner_errors = generic ? 0 : inner->errors;

      for (double orient : {1.0, -1.0}) {
        const int total = (orient > 0.0 ? err_pos : err_neg) + inner_errors;
        if (total >= best.errors) continue;
        if (!inner) solve_inner();
        // Lift the in-plane classifier a.z - b to R^dim and tilt by delta.
        const Vector gw = basis * inner->w;
        const double gt = inner->t + P.row(0).dot(gw);
        double gmax = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) gmax = std::max(gmax, std::abs(Z.row(j).dot(gw) - gt));
        const double delta = std::isfinite(margin) && gmax > 0.0 ? 0.5 * margin / gmax : 1.0;
        Halfspace cand{orient * normal + delta * gw, orient * t0 + delta * gt, 0};
        cand.errors = count_errors(Z, y, cand.w, cand.t);
        if (cand.errors < best.errors) best = cand;
        if (best.errors == 0) return best;
      }
    }
    // Next dim-combination of [0, m).
    Eigen::Index pos = dim - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == m - dim + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (Eigen::Index i = pos + 1; i < dim; ++i) idx[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i - 1)] + 1;
  }
  return best;
}

inline void check_labels_binary(const Vector& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    require(y(i) == 1.0 || y(i) == -1.0, ErrorKind::domain, "classification labels must be -1 or +1");
}

/// Preconditioner for gradient steps on (w, t): the map from whitened
/// coordinates (a, b) to (w, t), so that a step in (w, t) with P = M M^T is a
/// plain gradient step on the whitened, centred design [Z, 1].
inline Eigen::MatrixXd whitening_preconditioner(const Matrix& U) {
  const Eigen::Index n = U.rows();
  const Eigen::Index k = U.cols();
  const Eigen::RowVectorXd mu = U.colwise().mean();
  const Eigen::MatrixXd centered = (U.rowwise() - mu);
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(std::max<Eigen::Index>(n, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd& lam = eig.eigenvalues();
  const double lmax = lam.size() > 0 ? lam.maxCoeff() : 0.0;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    if (lam(i) > 1e-12 * lmax && lam(i) > 0.0) W.col(i) = eig.eigenvectors().col(i) / std::sqrt(lam(i));
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(k + 1, k + 1);
  M.topLeftCorner(k, k) = W;
  M.bottomLeftCorner(1, k) = mu * W;
  M(k, k) = -1.0;
  return M * M.transpose();
}

}  // namespace detail

/// Exact empirical zero-one risk minimizer over sign-linear classifiers on R^k.
/// Limited to k <= 3 and n <= 200.
inline ErmReport erm_exact_classification(const Matrix& U, const Vector& y) {
  require(U.rows() == y.size(), ErrorKind::dimension_mismatch, "U and y row counts differ");
  require(U.cols() <= detail::kExactMaxDim && U.rows() <= detail::kExactMaxRows, ErrorKind::scale_guard,
          "exact solver limited to k <= 3 and n <= 200 (got k=" + std::to_string(U.cols()) +
              ", n=" + std::to_string(U.rows()) + ")");
  require(U.cols() >= 1, ErrorKind::invalid_dimension, "k must be positive");
  detail::check_labels_binary(y);
  std::vector<double> labels(y.data(), y.data() + y.size());
  const detail::Halfspace best = detail::exact_halfspace(U, labels);

  ErmReport report;
  report.hypothesis = {best.w, best.t, PredictMode::sign, 1.0};
  report.solver = SolverKind::exact;
  report.empirical_risk = empirical_risk(report.hypothesis, U, y, make_loss(LossKind::zero_one));
  return report;
}

/// Step-size schedule for the gradient solvers: lr_t = lr0 / (1 + decay * t),
/// where lr0 = 0 selects 1/L for the whitened problem.
struct GdSchedule {
  double lr0 = 0.0;
  double decay = 0.0;
  int checkpoint_every = 50;
};

/// Logistic-surrogate ERM by full-batch gradient descent; reports the
/// zero-one risk of the best iterate seen.
inline ErmReport erm_surrogate_classification(const Matrix& U, const Vector& y, int iters = 2000,
                                              const GdSchedule& schedule = {}, bool compute_gap = true) {
  require(U.rows() >= 1, ErrorKind::invalid_dimension, "surrogate solver needs n >= 1");
  require(U.rows() == y.size(), ErrorKind::dimension_mismatch, "U and y row counts differ");
  detail::check_labels_binary(y);
  const Eigen::Index n = U.rows();
  const Eigen::Index k = U.cols();
  const LossSpec zero_one = make_loss(LossKind::zero_one);

  Eigen::MatrixXd Ud(n, k + 1);
  Ud.leftCols(k) = U;
  Ud.col(k).setConstant(-1.0);
  const Eigen::MatrixXd P = detail::whitening_preconditioner(U);
  // Whitened design has unit curvature bound, so the logistic loss is 1/4-smooth.
  const double lr0 = schedule.lr0 > 0.0 ? schedule.lr0 : 4.0;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(k + 1);
  Eigen::VectorXd best_theta = theta;
  int best_errors = std::numeric_limits<int>::max();
  ErmReport report;
  report.solver = SolverKind::surrogate;

  auto objective_and_grad = [&](const Eigen::VectorXd& th, Eigen::VectorXd* grad, int* errors) {
    const Eigen::VectorXd s = Ud * th;
    double obj = 0.0;
    Eigen::VectorXd coef(n);
    int e = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double margin = y(i) * s(i);
      obj += softplus(-margin);
      coef(i) = -y(i) * logistic(-margin);
      if (sign_of(s(i)) != y(i)) ++e;
    }
    if (grad) *grad = Ud.transpose() * coef / static_cast<double>(n);
    if (errors) *errors = e;
    return obj / static_cast<double>(n);
  };

  Eigen::VectorXd grad;
  int errors = 0;
  double obj = objective_and_grad(theta, &grad, &errors);
  report.objective_trace.push_back(obj);
  double checkpoint_obj = obj;
  int it = 0;
  for (; it < iters; ++it) {
    if (errors < best_errors) {
      best_errors = errors;
      best_theta = theta;
    }
    if (errors == 0 || grad.norm() < 1e-12) break;
    const double lr = lr0 / (1.0 + schedule.decay * it);
    theta -= lr * (P * grad);
    obj = objective_and_grad(theta, &grad, &errors);
    if ((it + 1) % schedule.checkpoint_every == 0) {
      report.final_decrease_per_iter = (checkpoint_obj - obj) / schedule.checkpoint_every;
      checkpoint_obj = obj;
      report.objective_trace.push_back(obj);
    }
  }
  if (errors < best_errors) best_theta = theta;
  if (report.objective_trace.size() == 1 || it % schedule.checkpoint_every != 0) report.objective_trace.push_back(obj);
  report.iterations = it;

  report.hypothesis = {best_theta.head(k), best_theta(k), PredictMode::sign, 1.0};
  report.empirical_risk = empirical_risk(report.hypothesis, U, y, zero_one);
  if (compute_gap && k <= detail::kExactMaxDim && n <= detail::kExactMaxRows) {
    report.surrogate_gap = report.empirical_risk - erm_exact_classification(U, y).empirical_risk;
  }
  return report;
}

/// Unclipped least squares for u -> w.u - t via a pseudo-inverse.
inline LinearHypothesis ols_fit(const Matrix& U, const Vector& y, double beta) {
  require(U.rows() == y.size(), ErrorKind::dimension_mismatch, "U and y row counts differ");
  Eigen::MatrixXd Ud(U.rows(), U.cols() + 1);
  Ud.leftCols(U.cols()) = U;
  Ud.col(U.cols()).setConstant(-1.0);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Ud);
  cod.setThreshold(1e-12);
  const Eigen::VectorXd theta = cod.solve(y);
  return {theta.head(U.cols()), theta(U.cols()), PredictMode::clip, beta};
}

/// Clipped-linear ERM for the squared and kl losses by (sub)gradient descent
/// on the clipped empirical risk. Squared loss starts from least squares on
/// all points and on the points with unclipped targets, keeping the better end
/// point. Stops after `iters` steps or when 50 steps gain less than 1e-10 * B.
inline ErmReport erm_regression(const Matrix& U, const Vector& y, const LossSpec& loss, int iters = 2000) {
  require(loss.kind == LossKind::squared || loss.kind == LossKind::kl, ErrorKind::domain,
          "erm_regression needs the squared or kl loss");
  require(U.rows() >= 1, ErrorKind::invalid_dimension, "regression needs n >= 1");
  require(U.rows() == y.size(), ErrorKind::dimension_mismatch, "U and y row counts differ");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (loss.kind == LossKind::squared)
      require(std::abs(y(i)) <= loss.beta, ErrorKind::domain, "squared-loss labels must lie in [-beta, beta]");
    else
      require(y(i) == 0.0 || y(i) == 1.0, ErrorKind::domain, "kl labels must be 0 or 1");
  }
  const Eigen::Index n = U.rows();
  const Eigen::Index k = U.cols();
  const double beta = loss.beta;
  Eigen::MatrixXd Ud(n, k + 1);
  Ud.leftCols(k) = U;
  Ud.col(k).setConstant(-1.0);
  const Eigen::MatrixXd P = detail::whitening_preconditioner(U);
  const double lr = loss.kind == LossKind::squared ? 0.5 : 4.0;

  auto objective_and_grad = [&](const Eigen::VectorXd& th, Eigen::VectorXd* grad) {
    const Eigen::VectorXd z = Ud * th;
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(n);
    double obj = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = std::clamp(z(i), -beta, beta);
      obj += eval(loss, p, y(i));
      if (std::abs(z(i)) <= beta) coef(i) = derivative(loss, p, y(i));
    }
    if (grad) *grad = Ud.transpose() * coef / static_cast<double>(n);
    return obj / static_cast<double>(n);
  };

  std::vector<Eigen::VectorXd> starts;
  if (loss.kind == LossKind::squared) {
    const LinearHypothesis ols = ols_fit(U, y, beta);
    Eigen::VectorXd s0(k + 1);
    s0 << ols.w, ols.t;
    starts.push_back(s0);
    std::vector<Eigen::Index> interior;
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::abs(y(i)) < beta) interior.push_back(i);
    if (interior.size() >= 2 && static_cast<Eigen::Index>(interior.size()) < n) {
      Matrix Ui(static_cast<Eigen::Index>(interior.size()), k);
      Vector yi(static_cast<Eigen::Index>(interior.size()));
      for (std::size_t r = 0; r < interior.size(); ++r) {
        Ui.row(static_cast<Eigen::Index>(r)) = U.row(interior[r]);
        yi(static_cast<Eigen::Index>(r)) = y(interior[r]);
      }
      const LinearHypothesis inner = ols_fit(Ui, yi, beta);
      Eigen::VectorXd s1(k + 1);
      s1 << inner.w, inner.t;
      starts.push_back(s1);
    }
  } else {
    starts.push_back(Eigen::VectorXd::Zero(k + 1));
  }

  ErmReport best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    ErmReport report;
    report.solver = SolverKind::surrogate;
    Eigen::VectorXd theta = start;
    Eigen::VectorXd grad;
    double obj = objective_and_grad(theta, &grad);
    report.objective_trace.push_back(obj);
    double window_start = obj;
    int it = 0;
    for (; it < iters; ++it) {
      if (grad.norm() < 1e-14 || obj == 0.0) break;
      theta -= lr * (P * grad);
      obj = objective_and_grad(theta, &grad);
      if ((it + 1) % 50 == 0) {
        report.objective_trace.push_back(obj);
        report.final_decrease_per_iter = (window_start - obj) / 50.0;
        if (window_start - obj < 1e-10 * loss.B) {
          ++it;
          break;
        }
        window_start = obj;
      }
    }
    report.iterations = it;
    report.objective_trace.push_back(obj);
    report.hypothesis = {theta.head(k), theta(k), PredictMode::clip, beta};
    if (obj < best_obj) {
      best_obj = obj;
      best = std::move(report);
    }
  }
  best.empirical_risk = empirical_risk(best.hypothesis, U, y, loss);
  return best;
}

}  // namespace cerm

#endif  // CERM_HYPOTHESES_HPP
