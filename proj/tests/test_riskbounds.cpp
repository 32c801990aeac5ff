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

#include "cerm/riskbounds.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

namespace {

using cerm::DistributionSpec;
using cerm::ErrorKind;
using cerm::LossKind;
using cerm::Matrix;
using cerm::ProjectionFamily;
using cerm::SolverKind;
using cerm::Vector;

constexpr double kE = std::numbers::e;

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const cerm::Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::config;
}

cerm::RegressionParams noiseless_regression(int d, double omega, double beta = 1.0) {
  cerm::RegressionParams p;
  p.d = d;
  p.omega = omega;
  p.beta = beta;
  p.W_max = 2.0;
  p.w_circ = Vector::Constant(d, 2.0 / std::sqrt(static_cast<double>(d)));
  return p;
}

TEST(LogPlus, Examples) {
  EXPECT_EQ(cerm::log_plus(1.0), 1.0);
  EXPECT_DOUBLE_EQ(cerm::log_plus(kE), 1.0);
  EXPECT_DOUBLE_EQ(cerm::log_plus(kE * kE), 2.0);
  EXPECT_EQ(cerm::log_plus(0.01), 1.0);
  EXPECT_EQ(kind_of([] { cerm::log_plus(0.0); }), ErrorKind::domain);
  EXPECT_EQ(kind_of([] { cerm::log_plus(-1.0); }), ErrorKind::domain);
}

TEST(EstimateExcessRisk, BayesPredictorOnFiniteLawIsZero) {
  const auto p = cerm::build_assouad_family(20000, 2.0, 2.0, 0.0);
  std::vector<int> sigma(static_cast<std::size_t>(p.q), 1);
  for (std::size_t l = 0; l < sigma.size(); l += 3) sigma[l] = -1;
  const auto dist = DistributionSpec::assouad(p, sigma);
  const auto zo = cerm::make_loss(LossKind::zero_one);
  cerm::Predictor bayes = [&](const Matrix& X) { return cerm::bayes_predict_rows(dist, zo, X); };
  const auto e = cerm::estimate_excess_risk(bayes, dist, zo, 0, 0);
  EXPECT_TRUE(e.exact);
  EXPECT_EQ(e.value, 0.0);
}

TEST(EstimateExcessRisk, ConstantPredictorOnAssouad) {
  cerm::AssouadParams p;
  p.q = 40;
  p.r = 3.0;
  p.v = 0.3;
  p.epsilon = 0.2;
  const auto dist = DistributionSpec::assouad(p, std::vector<int>(40, -1));
  cerm::Predictor plus = [](const Matrix& X) { return Vector(Vector::Ones(X.rows())); };
  const auto e = cerm::estimate_excess_risk(plus, dist, cerm::make_loss(LossKind::zero_one), 0, 0);
  // Each of the q atoms has |2 eta - 1| = epsilon and the base atom is classified correctly.
  EXPECT_NEAR(e.value, 0.3 * 0.2, 1e-15);
}

TEST(EstimateExcessRisk, MonteCarloSanityBand) {
  cerm::GaussMarginParams gp;
  gp.d = 6;
  const auto dist = DistributionSpec::gauss_margin(gp);
  const auto zo = cerm::make_loss(LossKind::zero_one);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 5; ++t) {
    Vector w(6);
    for (auto& v : w) v = std::normal_distribution<double>()(rng);
    cerm::Predictor h = [&](const Matrix& X) { return Vector((X * w).unaryExpr([](double z) { return cerm::sign_of(z); })); };
    const auto e = cerm::estimate_excess_risk(h, dist, zo, 20000, static_cast<std::uint64_t>(t));
    EXPECT_FALSE(e.exact);
    EXPECT_GE(e.value, -3.0 * e.std_error);
    EXPECT_GT(e.std_error, 0.0);
  }
}

TEST(Compressibility, FullDimensionRealizableIsNearZero) {
  const auto dist = DistributionSpec::regression(noiseless_regression(4, 0.5, 4.0));
  cerm::CompressibilityOptions opts;
  opts.n_test = 5000;
  const auto psi = cerm::estimate_compressibility(dist, cerm::make_loss(LossKind::squared, 4.0), ProjectionFamily::gaussian,
                                                  4, 4, 2000, SolverKind::surrogate, 3, opts);
  EXPECT_GE(psi.value, 0.0);
  EXPECT_LT(psi.value, 1e-4);
}

TEST(Compressibility, RegressionDecreasesInK) {
  const auto dist = DistributionSpec::regression(noiseless_regression(16, 0.5));
  const auto sq = cerm::make_loss(LossKind::squared, 1.0);
  cerm::CompressibilityOptions opts;
  opts.n_test = 5000;
  opts.iters = 500;
  std::vector<cerm::RiskEstimate> psi;
  for (int k : {1, 2, 4, 8}) {
    psi.push_back(cerm::estimate_compressibility(dist, sq, ProjectionFamily::gaussian, k, 8, 2000, SolverKind::surrogate,
                                                 11, opts));
    EXPECT_GE(psi.back().value, 0.0);
    EXPECT_LE(psi.back().value, sq.B + 3.0 * psi.back().std_error);
  }
  for (std::size_t i = 1; i < psi.size(); ++i) {
    const double se = std::hypot(psi[i].std_error, psi[i - 1].std_error);
    EXPECT_LE(psi[i].value, psi[i - 1].value + 2.0 * se) << "step " << i;
  }
  EXPECT_LT(psi.back().value, psi.front().value);
}

TEST(Compressibility, ClassificationLargerKNotWorse) {
  cerm::GaussMarginParams gp;
  gp.d = 64;
  const auto dist = DistributionSpec::gauss_margin(gp);
  const auto zo = cerm::make_loss(LossKind::zero_one);
  cerm::CompressibilityOptions opts;
  opts.n_test = 5000;
  opts.iters = 300;
  const auto small = cerm::estimate_compressibility(dist, zo, ProjectionFamily::gaussian, 4, 6, 2000, SolverKind::surrogate, 5, opts);
  const auto large = cerm::estimate_compressibility(dist, zo, ProjectionFamily::gaussian, 64, 6, 2000, SolverKind::surrogate, 6, opts);
  EXPECT_LE(large.value, small.value + 2.0 * std::hypot(small.std_error, large.std_error));
  for (const auto& e : {small, large}) {
    EXPECT_GE(e.value, 0.0);
    EXPECT_LE(e.value, zo.B + 3.0 * e.std_error);
  }
}

TEST(FiniteEnsemblePsiBound, Examples) {
  EXPECT_DOUBLE_EQ(cerm::finite_ensemble_psi_bound(0.0, 1.0, 3, 1.0 / kE), 0.5);
  EXPECT_NEAR(cerm::finite_ensemble_psi_bound(0.1, 1.0, 1000000, 0.05), 0.2, 1e-5);
  const double a = cerm::finite_ensemble_psi_bound(0.0, 2.0, 7, 0.1);
  const double b = cerm::finite_ensemble_psi_bound(0.0, 2.0, 14, 0.1);
  EXPECT_DOUBLE_EQ(b, a / 2.0);
  EXPECT_EQ(kind_of([] { cerm::finite_ensemble_psi_bound(0.1, 1.0, 0, 0.1); }), ErrorKind::domain);
  EXPECT_EQ(kind_of([] { cerm::finite_ensemble_psi_bound(0.1, 1.0, 3, 1.0); }), ErrorKind::domain);
  EXPECT_EQ(kind_of([] { cerm::finite_ensemble_psi_bound(0.1, 0.5, 3, 0.1); }), ErrorKind::domain);
}

// Minimal zero-one risk over sign-linear rules on the line, by exhaustive scan.
double best_threshold_risk(const Vector& u, const Vector& y) {
  int best = static_cast<int>(u.size());
  std::vector<double> cuts(u.data(), u.data() + u.size());
  cuts.push_back(std::numeric_limits<double>::infinity());
  cuts.push_back(-std::numeric_limits<double>::infinity());
  for (double c : cuts) {
    int up = 0, down = 0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      up += ((u(i) >= c) ? 1.0 : -1.0) != y(i);
      down += ((u(i) <= c) ? 1.0 : -1.0) != y(i);
    }
    best = std::min({best, up, down});
  }
  return static_cast<double>(best) / static_cast<double>(u.size());
}

TEST(FiniteEnsemblePsiBound, DominatesEnsembleQuantile) {
  // Equal-mass atoms with deterministic labels: the population infimum over
  // F_1 composed with A is the best threshold on the projected atoms.
  const int atoms = 24, d = 5;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix X(atoms, d);
  Vector y(atoms);
  for (int i = 0; i < atoms; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = normal(rng);
    y(i) = cerm::sign_of(X(i, 0) * X(i, 1) + 0.3 * X(i, 2));
  }
  std::uint64_t draw = 0;
  auto inf_excess = [&] {
    const auto A = cerm::sample_projection(ProjectionFamily::gaussian, 1, d, cerm::derive_seed(1234, draw++));
    return best_threshold_risk(A.apply(X).col(0), y);
  };
  std::vector<double> pool;
  for (int t = 0; t < 2000; ++t) pool.push_back(inf_excess());
  const double psi = cerm::mean_with_error(pool).value;
  ASSERT_GT(psi, 0.0);
  for (int m : {5, 25}) {
    std::vector<double> means;
    for (int e = 0; e < 500; ++e) {
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += inf_excess();
      means.push_back(s / m);
    }
    std::sort(means.begin(), means.end());
    for (double delta : {0.1, 0.05}) {
      const double quantile = means[static_cast<std::size_t>(std::ceil((1.0 - delta) * 500.0)) - 1];
      EXPECT_LE(quantile, cerm::finite_ensemble_psi_bound(psi, 1.0, m, delta)) << "m=" << m << " delta=" << delta;
    }
  }
}

TEST(Bracket, ClosedFormExamples) {
  const auto b = cerm::theorem2_bracket(kE, 1, 1, 1.0 / kE, 1.0, 0.0);
  EXPECT_NEAR(b.total, 2.0 / kE + 1.0, 1e-12);
  EXPECT_NEAR(b.total, 1.7358, 1e-4);
  EXPECT_DOUBLE_EQ(b.total, b.psi_term + b.statistical_term + b.ensemble_term);

  const double n = 5000.0, delta = 0.05;
  const double inner = (3.0 * std::log(n) + std::log(1.0 / delta)) / n;
  EXPECT_NEAR(cerm::theorem2_bracket(n, 3, 10, delta, 0.0, 0.0).statistical_term, std::sqrt(inner), 1e-15);
  EXPECT_NEAR(cerm::theorem2_bracket(n, 3, 10, delta, 1.0, 0.0).statistical_term, inner, 1e-15);
  EXPECT_EQ(kind_of([] { cerm::theorem2_bracket(10, 1, 1, 0.0, 0.0, 0.0); }), ErrorKind::domain);
  EXPECT_EQ(kind_of([] { cerm::theorem2_bracket(10, 1, 1, 0.1, 1.5, 0.0); }), ErrorKind::domain);
}

TEST(Bracket, Monotonicity) {
  for (double alpha : {0.0, 0.5, 1.0}) {
    for (double psi : {0.0, 0.1}) {
      double prev = std::numeric_limits<double>::infinity();
      for (double n = 2; n < 1e7; n *= 1.7) {
        const double t = cerm::theorem2_bracket(n, 4, 5, 0.05, alpha, psi).total;
        EXPECT_LE(t, prev + 1e-15);
        prev = t;
      }
      prev = std::numeric_limits<double>::infinity();
      for (int m = 1; m < 200; ++m) {
        const double t = cerm::theorem2_bracket(1000, 4, m, 0.05, alpha, psi).total;
        EXPECT_LE(t, prev);
        prev = t;
      }
      prev = 0.0;
      for (int k = 1; k < 100; ++k) {
        const double t = cerm::theorem2_bracket(1000, k, 5, 0.05, alpha, psi).total;
        EXPECT_GE(t, prev);
        prev = t;
      }
      prev = 0.0;
      for (double delta = 0.9; delta > 1e-8; delta /= 2.0) {
        const double t = cerm::theorem2_bracket(1000, 4, 5, delta, alpha, psi).total;
        EXPECT_GE(t, prev);
        prev = t;
      }
    }
  }
}

TEST(OptimalK, Classification) {
  EXPECT_DOUBLE_EQ(cerm::rate_exponent_classification(2.0, 2.0, 0.0), 0.25);
  const double n = 10000.0;
  EXPECT_EQ(cerm::optimal_k_classification(10000, 2.0, 2.0, 0.0),
            static_cast<int>(std::ceil(std::pow(n / std::log(n), 0.5))));
  EXPECT_EQ(cerm::optimal_k_classification(10000, 2.0, 2.0, 0.0), 33);
  const std::vector<double> grid{0.5, 1.0, 2.0, 4.0};
  for (double g : grid)
    for (double r : grid)
      for (double a : {0.0, 0.3, 0.6}) {
        const double base = cerm::rate_exponent_classification(g, r, a);
        EXPECT_GT(cerm::rate_exponent_classification(g * 1.5, r, a), base);
        EXPECT_GT(cerm::rate_exponent_classification(g, r * 1.5, a), base);
        EXPECT_GT(cerm::rate_exponent_classification(g, r, a + 0.2), base);
      }
  EXPECT_EQ(kind_of([] { cerm::rate_exponent_classification(1.0, 1.0, 1.0); }), ErrorKind::domain);
}

TEST(OptimalK, Regression) {
  EXPECT_EQ(cerm::optimal_k_regression(1), 1);
  EXPECT_EQ(cerm::optimal_k_regression(148), static_cast<int>(std::ceil(std::log(148.0))));
  EXPECT_EQ(cerm::optimal_k_regression(148), 5);
  EXPECT_EQ(cerm::optimal_k_regression(1000000), 14);
}

TEST(Slawski, ExactRecoveryWhenRankFits) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int d = 20, q = 30, r = 4;
  Matrix L(d, r), R(r, q);
  for (Eigen::Index i = 0; i < L.size(); ++i) L.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < R.size(); ++i) R.data()[i] = normal(rng);
  const Matrix X = L * R;
  Vector w(d);
  for (auto& v : w) v = normal(rng);
  const auto A = cerm::sample_projection(ProjectionFamily::gaussian, 8, d, 3);
  const auto res = cerm::slawski_ratio(X, w, A, r);
  EXPECT_LE(res.lhs, 1e-8);
  EXPECT_EQ(res.ratio, 0.0);
}

TEST(Slawski, ZeroTargetAndRangeErrors) {
  const Matrix X = cerm::make_spectral_design(10, 12, 0.5, 1);
  const auto A = cerm::sample_projection(ProjectionFamily::gaussian, 5, 10, 2);
  const auto res = cerm::slawski_ratio(X, Vector::Zero(10), A, 2);
  EXPECT_EQ(res.lhs, 0.0);
  EXPECT_EQ(res.rhs, 0.0);
  EXPECT_EQ(res.ratio, 0.0);
  EXPECT_EQ(kind_of([&] { cerm::slawski_ratio(X, Vector::Ones(10), A, 5); }), ErrorKind::domain);
  EXPECT_EQ(kind_of([&] { cerm::slawski_ratio(X, Vector::Ones(9), A, 1); }), ErrorKind::dimension_mismatch);
}

TEST(Slawski, NestedSketchesReduceResidual) {
  const int d = 30, q = 30;
  const Matrix X = cerm::make_spectral_design(d, q, 0.6, 4);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector w(d);
  for (auto& v : w) v = normal(rng);
  const Matrix big = cerm::sample_projection(ProjectionFamily::gaussian, 25, d, 6).matrix();
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 2; k <= 25; ++k) {
    const auto A = cerm::ProjectionMap::from_matrix(big.topRows(k));
    const double lhs = cerm::slawski_ratio(X, w, A, 1).lhs;
    EXPECT_LE(lhs, prev * (1.0 + 1e-9) + 1e-14) << "k=" << k;
    prev = lhs;
  }
}

TEST(SpectralDesign, EigenvaluesArePowersOfOmega) {
  const Matrix X = cerm::make_spectral_design(12, 9, 0.5, 7);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Matrix(X * X.transpose()), Eigen::EigenvaluesOnly);
  const Vector ev = eig.eigenvalues().reverse();
  for (int j = 0; j < 9; ++j) EXPECT_NEAR(ev(j), std::pow(0.5, j + 1), 1e-12);
  for (int j = 9; j < 12; ++j) EXPECT_NEAR(ev(j), 0.0, 1e-12);
}

TEST(RhoStar, FixedPointContract) {
  for (std::int64_t n : {100, 1000, 100000, 10000000}) {
    for (int k : {1, 5, 40}) {
      const auto fp = cerm::rho_star(n, k, 1.0, 1.0, 1.0);
      EXPECT_LE(std::abs(cerm::local_rademacher_bound(fp.value, n, k, 1.0, 1.0, 1.0) - fp.value), 1e-9);
      EXPECT_LE(fp.residual, 1e-9);
      EXPECT_GT(fp.value, 0.0);
    }
  }
}

TEST(RhoStar, Scaling) {
  for (int k : {1, 4, 16}) {
    for (std::int64_t n : {1000, 20000, 500000}) {
      const double a = cerm::rho_star(n, k, 2.0, 4.0, 1.0).value;
      const double b = cerm::rho_star(4 * n, k, 2.0, 4.0, 1.0).value;
      EXPECT_GT(b / a, 0.2);
      EXPECT_LT(b / a, 0.35);
      EXPECT_GT(cerm::rho_star(n, 2 * k, 2.0, 4.0, 1.0).value, a);
    }
  }
  EXPECT_EQ(kind_of([] { cerm::rho_star(10, 1, 0.0, 1.0, 1.0); }), ErrorKind::domain);
}

TEST(EmpiricalRademacher, Examples) {
  const auto zero = cerm::empirical_rademacher(Matrix::Zero(1, 8), 0, 0);
  EXPECT_TRUE(zero.exact);
  EXPECT_EQ(zero.value, 0.0);

  Matrix pm(2, 4);
  pm << Eigen::RowVectorXd::Ones(4), -Eigen::RowVectorXd::Ones(4);
  // E|sum of 4 signs| = (2*4 + 8*2 + 6*0) / 16 = 1.5.
  EXPECT_DOUBLE_EQ(cerm::empirical_rademacher(pm, 0, 0).value, 1.5 / 4.0);
  EXPECT_DOUBLE_EQ(cerm::empirical_rademacher(pm, 0, 0).value, 0.375);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix F(5, 10);
  for (Eigen::Index i = 0; i < F.size(); ++i) F.data()[i] = normal(rng);
  Matrix dup(6, 10);
  dup << F, F.row(2);
  EXPECT_EQ(cerm::empirical_rademacher(F, 0, 0).value, cerm::empirical_rademacher(dup, 0, 0).value);
  Matrix big(6, 40), bigdup(7, 40);
  for (Eigen::Index i = 0; i < big.size(); ++i) big.data()[i] = normal(rng);
  bigdup << big, big.row(0);
  EXPECT_NEAR(cerm::empirical_rademacher(big, 500, 4).value, cerm::empirical_rademacher(bigdup, 500, 4).value, 1e-12);
}

TEST(EmpiricalRademacher, MonteCarloMatchesBinomialOracle) {
  const int n = 20;
  Matrix pm(2, n);
  pm << Eigen::RowVectorXd::Ones(n), -Eigen::RowVectorXd::Ones(n);
  double oracle = 0.0;
  for (int k = 0; k <= n; ++k) oracle += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0)) * std::abs(2.0 * k - n);
  oracle /= n;
  const auto est = cerm::empirical_rademacher(pm, 20000, 8);
  EXPECT_FALSE(est.exact);
  EXPECT_LE(std::abs(est.value - oracle), 4.0 * est.std_error);
}

}  // namespace
