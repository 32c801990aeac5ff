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

#ifndef CERM_RISKBOUNDS_HPP
#define CERM_RISKBOUNDS_HPP

#include "cerm/core.hpp"
#include "cerm/ensemble.hpp"
#include "cerm/hypotheses.hpp"
#include "cerm/losses.hpp"
#include "cerm/projections.hpp"
#include "cerm/synthdist.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <functional>
#include <random>

namespace cerm {

using Predictor = std::function<Vector(const Matrix&)>;

/// Maps -1/+1 classification labels to the {0, 1} labels of the kl loss.
inline Vector labels_for_loss(const LossSpec& loss, const Vector& y) {
  if (loss.kind != LossKind::kl) return y;
  Vector out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    require(y(i) == 1.0 || y(i) == -1.0, ErrorKind::domain, "kl loss needs -1/+1 source labels");
    out(i) = y(i) > 0.0 ? 1.0 : 0.0;
  }
  return out;
}

/// E(phi) = R(phi) - R(phi*), exact on finite laws, else Monte Carlo with the
/// Bayes risk taken pointwise on the same draw.
inline RiskEstimate estimate_excess_risk(const Predictor& predictor, const DistributionSpec& dist,
                                         const LossSpec& loss, std::int64_t n_test, std::uint64_t seed) {
  BatchPredictor batch = [&](const Matrix& X) {
    const Vector p = predictor(X);
    require(p.size() == X.rows(), ErrorKind::dimension_mismatch, "predictor returned the wrong number of rows");
    return Matrix(p);
  };
  return excess_risks(dist, loss, batch, 1, n_test, seed).front();
}

struct CompressibilityOptions {
  std::int64_t n_test = 20000;
  int iters = 2000;
  int threads = 1;
};

/// psi_hat(k): mean over reps projections A of the excess risk of ERM fitted on
/// a fresh pop_n-sample compressed by A, evaluated on an independent test draw.
inline RiskEstimate estimate_compressibility(const DistributionSpec& dist, const LossSpec& loss,
                                             ProjectionFamily family, int k, int reps, std::int64_t pop_n,
                                             SolverKind solver, std::uint64_t seed,
                                             const CompressibilityOptions& options = {}) {
  require(reps >= 1, ErrorKind::domain, "reps must be >= 1");
  require(pop_n >= 1, ErrorKind::domain, "pop_n must be >= 1");
  std::vector<double> values(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), options.threads, [&](std::size_t r) {
    const std::uint64_t rs = derive_seed(seed, r);
    const Sample s = dist.sample(pop_n, derive_seed(rs, 1));
    ProjectionMap map = sample_projection(family, k, dist.dim(), derive_seed(rs, 0));
    const Matrix U = map.apply(s.X);
    const Vector y = labels_for_loss(loss, s.y);
    ErmReport report = loss.kind == LossKind::zero_one
                           ? (solver == SolverKind::exact ? erm_exact_classification(U, y)
                                                          : erm_surrogate_classification(U, y, options.iters, {}, false))
                           : erm_regression(U, y, loss, options.iters);
    const LinearHypothesis h = report.hypothesis;
    Predictor pred = [&](const Matrix& X) { return h.predict_rows(map.apply(X)); };
    values[r] = estimate_excess_risk(pred, dist, loss, options.n_test, derive_seed(rs, 2)).value;
  });
  return mean_with_error(values);
}

/// 2 psi + 3 B log(1/delta) / (2 m).
inline double finite_ensemble_psi_bound(double psi, double B, int m, double delta) {
  require(m >= 1, ErrorKind::domain, "m must be >= 1");
  require(delta > 0.0 && delta < 1.0, ErrorKind::domain, "delta must lie in (0, 1)");
  require(B >= 1.0, ErrorKind::domain, "B must be >= 1");
  require(psi >= 0.0, ErrorKind::domain, "psi must be nonnegative");
  return 2.0 * psi + 3.0 * B * std::log(1.0 / delta) / (2.0 * static_cast<double>(m));
}

struct BoundBracket {
  double psi_term = 0.0;
  double statistical_term = 0.0;
  double ensemble_term = 0.0;
  double total = 0.0;
  double n = 0.0;
  int k = 0;
  int m = 0;
  double delta = 0.0;
  double alpha = 0.0;
};

/// psi + ((k log_+ n + log_+(1/delta)) / n)^(1/(2 - alpha)) + log_+(1/delta) / m,
/// without the unspecified leading constant.
/// n is real-valued so the closed form can be probed between sample sizes.
inline BoundBracket theorem2_bracket(double n, int k, int m, double delta, double alpha, double psi_hat) {
  require(n >= 1.0 && k >= 1 && m >= 1, ErrorKind::domain, "n, k, m must be >= 1");
  require(delta > 0.0 && delta < 1.0, ErrorKind::domain, "delta must lie in (0, 1)");
  require(alpha >= 0.0 && alpha <= 1.0, ErrorKind::domain, "alpha must lie in [0, 1]");
  require(psi_hat >= 0.0, ErrorKind::domain, "psi_hat must be nonnegative");
  BoundBracket b;
  b.n = n;
  b.k = k;
  b.m = m;
  b.delta = delta;
  b.alpha = alpha;
  const double nd = n;
  const double ld = log_plus(1.0 / delta);
  b.psi_term = psi_hat;
  b.statistical_term = std::pow((k * log_plus(nd) + ld) / nd, 1.0 / (2.0 - alpha));
  b.ensemble_term = ld / static_cast<double>(m);
  b.total = b.psi_term + b.statistical_term + b.ensemble_term;
  return b;
}

inline double rate_exponent_classification(double gamma, double rho, double alpha) {
  require(gamma > 0.0 && rho > 0.0 && alpha >= 0.0 && alpha < 1.0, ErrorKind::domain,
          "need gamma, rho > 0 and alpha in [0, 1)");
  return gamma * rho / (2.0 * (gamma + rho) + gamma * rho * (2.0 - alpha));
}

/// ceil((n / log_+ n)^(2(gamma + rho) / (2(gamma + rho) + gamma rho (2 - alpha)))).
inline int optimal_k_classification(std::int64_t n, double gamma, double rho, double alpha) {
  require(n >= 1, ErrorKind::domain, "n must be >= 1");
  rate_exponent_classification(gamma, rho, alpha);
  const double e = 2.0 * (gamma + rho) / (2.0 * (gamma + rho) + gamma * rho * (2.0 - alpha));
  const double nd = static_cast<double>(n);
  return static_cast<int>(std::ceil(std::pow(nd / log_plus(nd), e)));
}

inline int optimal_k_regression(std::int64_t n) {
  require(n >= 1, ErrorKind::domain, "n must be >= 1");
  return static_cast<int>(std::ceil(log_plus(static_cast<double>(n))));
}

struct SlawskiResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

/// lhs = min_w |w^T A X - w_d^T X|^2 by least squares, rhs = 18 |w_d|^2 times the
/// sum of the eigenvalues of X X^T beyond the r-th.
inline SlawskiResult slawski_ratio(const Matrix& Xmat, const Vector& w_diamond, const ProjectionMap& A, int r) {
  const Eigen::Index d = Xmat.rows();
  const Eigen::Index q = Xmat.cols();
  require(A.d() == d, ErrorKind::dimension_mismatch, "projection ambient dimension must equal the rows of X");
  require(w_diamond.size() == d, ErrorKind::dimension_mismatch, "w_diamond length must equal d");
  require(r >= 0 && r < std::min<Eigen::Index>(q, A.k()), ErrorKind::domain, "r must satisfy r < min(q, k)");
  const Eigen::MatrixXd AX = A.matrix() * Xmat;  // k x q
  const Eigen::VectorXd target = Xmat.transpose() * w_diamond;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(AX.transpose());
  const Eigen::VectorXd w = cod.solve(target);
  SlawskiResult res;
  res.lhs = (AX.transpose() * w - target).squaredNorm();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(Xmat * Xmat.transpose()), Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();  // ascending
  double tail = 0.0;
  for (Eigen::Index j = 0; j < ev.size() - r; ++j) tail += std::max(0.0, ev(j));
  res.rhs = 18.0 * w_diamond.squaredNorm() * tail;
  const double scale = 1e-12 * std::max(1.0, ev.size() > 0 ? ev(ev.size() - 1) : 0.0) * std::max(1.0, w_diamond.squaredNorm());
  if (res.rhs <= scale) {
    res.ratio = res.lhs <= 1e-10 ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    res.ratio = res.lhs / res.rhs;
  }
  return res;
}

/// d x q design U diag(omega^{j/2}) V^T with Haar-random orthogonal U, V, so
/// that the eigenvalues of X X^T are omega^j, j = 1..min(d, q).
inline Matrix make_spectral_design(int d, int q, double omega, std::uint64_t seed) {
  require(d >= 1 && q >= 1, ErrorKind::invalid_dimension, "design needs d, q >= 1");
  require(omega > 0.0 && omega < 1.0, ErrorKind::domain, "omega must lie in (0, 1)");
  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  auto orthogonal = [&](int size) {
    Eigen::MatrixXd G(size, size);
    for (int i = 0; i < size; ++i)
      for (int j = 0; j < size; ++j) G(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ();
    const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < size; ++i)
      if (R(i, i) < 0.0) Q.col(i) *= -1.0;
    return Q;
  };
  const Eigen::MatrixXd U = orthogonal(d);
  const Eigen::MatrixXd V = orthogonal(q);
  const int r = std::min(d, q);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, q);
  for (int j = 0; j < r; ++j) S(j, j) = std::pow(omega, 0.5 * (j + 1));
  return U * S * V.transpose();
}

struct FixedPoint {
  double value = 0.0;
  double residual = 0.0;
  /// 6 C_cn k log_+(lambda_lip beta n) / n.
  double proof_bound = 0.0;
  bool within_proof_bound = false;
};

/// phi(r) = 2 sqrt(C_cn k r / n) log_+^{1/2}(lambda_lip beta n / (k sqrt r)).
inline double local_rademacher_bound(double r, std::int64_t n, int k, double C_cn, double lambda_lip, double beta) {
  const double nd = static_cast<double>(n);
  return 2.0 * std::sqrt(C_cn * k * r / nd) * std::sqrt(log_plus(lambda_lip * beta * nd / (k * std::sqrt(r))));
}

/// Unique r > 0 with phi(r) = r, by bisection on phi(r)/sqrt(r) - sqrt(r),
/// which is strictly decreasing.
inline FixedPoint rho_star(std::int64_t n, int k, double C_cn, double lambda_lip, double beta) {
  require(n >= 1 && k >= 1 && C_cn > 0.0 && lambda_lip > 0.0 && beta > 0.0, ErrorKind::domain,
          "rho_star needs positive arguments");
  auto g = [&](double r) { return local_rademacher_bound(r, n, k, C_cn, lambda_lip, beta) / std::sqrt(r) - std::sqrt(r); };
  double lo = 4.0 * C_cn * k / static_cast<double>(n);
  double hi = lo;
  int guard = 0;
  while (g(lo) <= 0.0 && guard++ < 2000) lo *= 0.5;
  guard = 0;
  while (g(hi) >= 0.0 && guard++ < 2000) hi *= 2.0;
  require(g(lo) > 0.0 && g(hi) < 0.0, ErrorKind::no_fixed_point, "could not bracket the fixed point");
  for (int it = 0; it < 400 && hi - lo > 1e-300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  const double r_lo = lo, r_hi = hi;
  const double res_lo = std::abs(local_rademacher_bound(r_lo, n, k, C_cn, lambda_lip, beta) - r_lo);
  const double res_hi = std::abs(local_rademacher_bound(r_hi, n, k, C_cn, lambda_lip, beta) - r_hi);
  FixedPoint fp;
  fp.value = res_lo <= res_hi ? r_lo : r_hi;
  fp.residual = std::min(res_lo, res_hi);
  fp.proof_bound = 6.0 * C_cn * k * log_plus(lambda_lip * beta * static_cast<double>(n)) / static_cast<double>(n);
  fp.within_proof_bound = fp.value <= fp.proof_bound;
  return fp;
}

/// E_sigma[max_f (1/n) sum_j sigma_j f(z_j)] over the rows f of `values`;
/// exact enumeration of all sign vectors when n <= 16.
inline RiskEstimate empirical_rademacher(const Matrix& values, int mc_draws, std::uint64_t seed) {
  const Eigen::Index F = values.rows();
  const Eigen::Index n = values.cols();
  require(F >= 1 && n >= 1, ErrorKind::invalid_dimension, "need at least one function and one point");
  Vector sigma(n);
  auto sup = [&] { return (values * sigma).maxCoeff() / static_cast<double>(n); };
  if (n <= 16) {
    const std::uint64_t total = 1ULL << n;
    double acc = 0.0;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      for (Eigen::Index j = 0; j < n; ++j) sigma(j) = ((mask >> j) & 1ULL) ? 1.0 : -1.0;
      acc += sup();
    }
    RiskEstimate r = RiskEstimate::exact_value(acc / static_cast<double>(total));
    r.n_samples = static_cast<std::int64_t>(total);
    return r;
  }
  require(mc_draws >= 1, ErrorKind::domain, "mc_draws must be positive");
  std::mt19937_64 rng(splitmix64(seed));
  MeanAccumulator acc;
  for (int t = 0; t < mc_draws; ++t) {
    for (Eigen::Index j = 0; j < n; j += 64) {
      const std::uint64_t bits = rng();
      for (Eigen::Index b = 0; b < 64 && j + b < n; ++b) sigma(j + b) = ((bits >> b) & 1ULL) ? 1.0 : -1.0;
    }
    acc.add(sup());
  }
  return acc.estimate();
}

}  // namespace cerm

#endif  // CERM_RISKBOUNDS_HPP
