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

#include "cerm/synthdist.hpp"

#include <gtest/gtest.h>

#include <random>

namespace {

using cerm::AssouadParams;
using cerm::DistributionSpec;
using cerm::ErrorKind;
using cerm::LossKind;
using cerm::Matrix;
using cerm::Vector;

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

std::vector<int> random_sigma(std::int64_t q, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> s;
  for (std::int64_t l = 0; l < q; ++l) s.push_back((rng() & 1) ? 1 : -1);
  return s;
}

AssouadParams small_assouad(std::int64_t q, double r, double v, double eps) {
  AssouadParams p;
  p.q = q;
  p.r = r;
  p.v = v;
  p.epsilon = eps;
  return p;
}

cerm::GaussMarginParams margin_params(int d, double gamma, double rho, double alpha) {
  cerm::GaussMarginParams p;
  p.d = d;
  p.gamma = gamma;
  p.rho = rho;
  p.alpha = alpha;
  return p;
}

std::vector<double> geometric_grid(double lo, double hi, int points) {
  std::vector<double> g;
  for (int i = 0; i < points; ++i) g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1)));
  return g;
}

// ---------------------------------------------------------------------------
// Finite laws and the Assouad family.

TEST(Finite, MassesMustSumToOne) {
  std::vector<cerm::FiniteAtom> atoms(2);
  atoms[0] = {{{0, 1.0}}, 0.5, {{1.0, 1.0}}};
  atoms[1] = {{{0, -1.0}}, 0.4, {{-1.0, 1.0}}};
  EXPECT_EQ(kind_of([&] { DistributionSpec::finite(1, atoms); }), ErrorKind::domain);
  atoms[1].mass = 0.5;
  atoms[1].labels = {{-1.0, 0.7}};
  EXPECT_EQ(kind_of([&] { DistributionSpec::finite(1, atoms); }), ErrorKind::domain);
}

TEST(Assouad, AtomMassesAndEta) {
  const auto p = small_assouad(7, 2.0, 0.3, 0.2);
  const auto sigma = random_sigma(7, 1);
  const auto dist = DistributionSpec::assouad(p, sigma);
  ASSERT_EQ(dist.atoms().size(), 8u);
  EXPECT_EQ(dist.dim(), 8);
  double total = 0.0;
  for (const auto& a : dist.atoms()) total += a.mass;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(dist.atoms()[0].mass, 1.0 - 0.3);
  for (int l = 1; l <= 7; ++l) {
    EXPECT_DOUBLE_EQ(dist.atoms()[l].mass, 0.3 / 7.0);
    Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(8);
    x(l) = 2.0;
    EXPECT_DOUBLE_EQ(dist.eta(x), (1.0 + 0.2 * sigma[l - 1]) / 2.0);
  }
}

TEST(Assouad, SampleFrequencyOfBaseAtom) {
  const auto dist = DistributionSpec::assouad(small_assouad(2, 1.0, 0.5, 0.25), {1, -1});
  const int n = 100000;
  const auto s = dist.sample(n, 42);
  const double freq = static_cast<double>((s.X.col(0).array() == 1.0).count()) / n;
  EXPECT_LE(std::abs(freq - 0.5), 3.0 * std::sqrt(0.25 / n));
  const auto again = dist.sample(n, 42);
  EXPECT_EQ(s.X, again.X);
  EXPECT_EQ(s.y, again.y);
}

TEST(Assouad, BayesPredictorAndRisk) {
  const auto p = small_assouad(9, 2.5, 0.4, 0.3);
  const auto sigma = random_sigma(9, 2);
  const auto dist = DistributionSpec::assouad(p, sigma);
  const auto zo = cerm::make_loss(LossKind::zero_one);
  for (int l = 1; l <= 9; ++l) {
    Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(10);
    x(l) = 2.5;
    EXPECT_EQ(cerm::bayes_predict(dist, zo, x), static_cast<double>(sigma[l - 1]));
  }
  const auto risk = cerm::bayes_risk(dist, zo);
  EXPECT_TRUE(risk.exact);
  EXPECT_NEAR(risk.value, 0.4 * (1.0 - 0.3) / 2.0, 1e-15);
}

TEST(BuildAssouad, ClosedFormQ) {
  const auto p = cerm::build_assouad_family(1000000, 2.0, 2.0, 0.0);
  const double expo = 2.0 * 4.0 / (2.0 * 4.0 + 4.0 * 2.0);
  EXPECT_EQ(expo, 0.5);
  EXPECT_EQ(p.q, static_cast<std::int64_t>(std::ceil(std::pow(32.0e6, expo))));
  EXPECT_EQ(p.q, 5657);
}

TEST(BuildAssouad, ProofIdentitiesAndRanges) {
  for (double alpha : {0.0, 0.3, 0.6}) {
    for (double gamma : {1.0, 2.0}) {
      for (double rho : {1.0, 3.0}) {
        const double n0 = cerm::assouad_n0(gamma, rho, alpha);
        for (double mult : {1.0, 10.0, 1000.0}) {
          const auto n = static_cast<std::int64_t>(std::ceil(n0 * mult));
          const auto p = cerm::build_assouad_family(n, gamma, rho, alpha);
          const double q = static_cast<double>(p.q);
          EXPECT_NEAR(p.epsilon * p.v, std::pow(p.r / std::sqrt(q), gamma), 1e-12 * p.epsilon * p.v);
          EXPECT_NEAR(p.epsilon * p.v, std::pow(p.r, -rho), 1e-12 * p.epsilon * p.v);
          EXPECT_LT(p.q, n);
          EXPECT_GE(p.r, 1.0);
          EXPECT_LE(p.r, std::sqrt(q));
          EXPECT_GT(p.epsilon, 0.0);
          EXPECT_LT(p.epsilon, 0.5);
          EXPECT_TRUE(cerm::check_membership(p, cerm::assouad_constants(p)).all())
              << "alpha=" << alpha << " gamma=" << gamma << " rho=" << rho << " n=" << n;
        }
      }
    }
  }
}

TEST(BuildAssouad, SmallNGuard) {
  EXPECT_EQ(kind_of([] { cerm::build_assouad_family(100, 2.0, 2.0, 0.0); }), ErrorKind::small_n);
}

TEST(Membership, ViolationsAreDetected) {
  auto p = cerm::build_assouad_family(100000, 2.0, 2.0, 0.0);
  const auto g = cerm::assouad_constants(p);
  EXPECT_EQ(g.C_G, 2.0);
  auto doubled = p;
  doubled.epsilon *= 2.0;
  EXPECT_FALSE(cerm::check_membership(doubled, g).moment);
  // alpha = 0: v <= C_T for any v <= 1.
  doubled.v = 1.0;
  EXPECT_TRUE(cerm::check_membership(doubled, g).tsybakov);
  auto strict = g;
  strict.alpha = 0.5;
  p.v = 0.9;
  p.epsilon = 0.1;
  EXPECT_FALSE(cerm::check_membership(p, strict).tsybakov);
}

TEST(ChiSquare, AdjacentAssouadMembers) {
  const auto p = cerm::build_assouad_family(5000, 2.0, 2.0, 0.0);
  ASSERT_LE(p.q, 2000);
  auto sigma = random_sigma(p.q, 3);
  for (std::int64_t flip : {std::int64_t{0}, p.q / 2, p.q - 1}) {
    auto other = sigma;
    other[static_cast<std::size_t>(flip)] *= -1;
    const double chi = cerm::assouad_chi_square(p, sigma, other);
    const double oracle = p.v / static_cast<double>(p.q) * p.epsilon * p.epsilon * 4.0 / (1.0 - p.epsilon * p.epsilon);
    EXPECT_NEAR(chi, oracle, 1e-12 * oracle);
    EXPECT_LE(chi, cerm::assouad_chi_square_bound(p));
    const double materialized =
        cerm::chi_square(DistributionSpec::assouad(p, sigma), DistributionSpec::assouad(p, other));
    EXPECT_NEAR(materialized, chi, 1e-12 * chi);
  }
  EXPECT_EQ(cerm::assouad_chi_square(p, sigma, sigma), 0.0);
}

// ---------------------------------------------------------------------------
// Mixture lower bound.

DistributionSpec point_base(double y0) {
  std::vector<cerm::FiniteAtom> atoms(1);
  atoms[0].x = {{0, 5.0}};
  atoms[0].mass = 1.0;
  atoms[0].labels = {{y0, 1.0}};
  return DistributionSpec::finite(2, atoms);
}

TEST(Mixture, ZetaOneIsUniformOnPoints) {
  Matrix pts(3, 2);
  pts << 0, 1, 0, 2, 0, 3;
  const auto mix = cerm::build_mixture_lb(point_base(-1.0), 1.0, pts, {1, -1, 1}, -1.0, 1.0);
  ASSERT_EQ(mix.atoms().size(), 3u);
  for (const auto& a : mix.atoms()) EXPECT_NEAR(a.mass, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(mix.atoms()[1].labels[0].y, -1.0);
}

TEST(Mixture, HalfMixtureMasses) {
  Matrix pts(2, 2);
  pts << 0, 1, 0, 2;
  const auto mix = cerm::build_mixture_lb(point_base(-1.0), 0.5, pts, {1, 1}, -1.0, 1.0);
  ASSERT_EQ(mix.atoms().size(), 3u);
  EXPECT_EQ(mix.atoms()[0].mass, 0.5);
  EXPECT_EQ(mix.atoms()[1].mass, 0.25);
  EXPECT_EQ(mix.atoms()[2].mass, 0.25);
}

TEST(Mixture, ExcessOfConstantPredictor) {
  for (double zeta : {0.1, 0.37, 1.0}) {
    Matrix pts(4, 2);
    pts << 0, 1, 0, 2, 1, 1, 2, 2;
    const auto mix = cerm::build_mixture_lb(point_base(-1.0), zeta, pts, {1, 1, 1, 1}, -1.0, 1.0);
    const auto zo = cerm::make_loss(LossKind::zero_one);
    cerm::BatchPredictor always_y0 = [](const Matrix& X) { return Matrix(Matrix::Constant(X.rows(), 1, -1.0)); };
    const auto e = cerm::excess_risks(mix, zo, always_y0, 1, 0, 0);
    EXPECT_NEAR(e[0].value, zeta * 1.0, 1e-15);
    const auto sq = cerm::make_loss(LossKind::squared, 1.0);
    EXPECT_NEAR(cerm::excess_risks(mix, sq, always_y0, 1, 0, 0)[0].value, zeta * 4.0, 1e-14);
  }
}

TEST(Mixture, Errors) {
  Matrix pts(2, 2);
  pts << 5, 0, 0, 2;
  EXPECT_EQ(kind_of([&] { cerm::build_mixture_lb(point_base(-1.0), 0.5, pts, {1, 1}, -1.0, 1.0); }),
            ErrorKind::atom_collision);
  pts << 0, 1, 0, 2;
  EXPECT_EQ(kind_of([&] { cerm::build_mixture_lb(point_base(-1.0), 0.5, pts, {1, 1}, -1.0, 1.0, 10); }),
            ErrorKind::domain);
  EXPECT_NO_THROW(cerm::build_mixture_lb(point_base(-1.0), 0.1, pts, {1, 1}, -1.0, 1.0, 10));
}

// ---------------------------------------------------------------------------
// Checkers.

TEST(Checkers, AssouadBandMomentTsybakovExact) {
  const auto p = cerm::build_assouad_family(100000, 2.0, 2.0, 0.0);
  const auto dist = DistributionSpec::assouad(p, random_sigma(p.q, 4));
  const double q = static_cast<double>(p.q);
  const double edge = p.r / std::sqrt(2.0 * q);
  const auto band = cerm::check_geometric_margin(dist, {0.5 * edge, edge * (1.0 - 1e-9), edge * (1.0 + 1e-9)}, 0, 0,
                                                 std::pow(2.0, 1.0), 2.0);
  EXPECT_TRUE(band.exact);
  EXPECT_EQ(band.mass[0], 0.0);
  EXPECT_EQ(band.mass[1], 0.0);
  EXPECT_NEAR(band.mass[2], p.v * p.epsilon, 1e-12);
  for (bool ok : band.pass) EXPECT_TRUE(ok);

  const auto mom = cerm::check_moment(dist, {1.5, 0.5 * (1.0 + p.r), p.r * 1.01}, 0, 0, 1.0, 2.0);
  EXPECT_NEAR(mom.mass[0], p.v * p.epsilon, 1e-12);
  EXPECT_NEAR(mom.mass[1], p.v * p.epsilon, 1e-12);
  EXPECT_EQ(mom.mass[2], 0.0);

  const auto tsy = cerm::check_tsybakov(dist, {0.5 * p.epsilon, p.epsilon, 0.9}, 0, 0, 1.0, 0.0);
  EXPECT_EQ(tsy.mass[0], 0.0);
  EXPECT_NEAR(tsy.mass[1], p.v, 1e-12);
  EXPECT_NEAR(tsy.mass[2], p.v, 1e-12);
}

TEST(Checkers, EmptyBandPasses) {
  // Two atoms far from the reference hyperplane of an Assouad law with q = 1.
  const auto dist = DistributionSpec::assouad(small_assouad(1, 1.0, 0.5, 0.2), {1});
  const auto r = cerm::check_geometric_margin(dist, {0.01, 0.1, 0.2}, 0, 0, 1.0, 5.0);
  for (std::size_t g = 0; g < r.grid.size(); ++g) {
    EXPECT_EQ(r.mass[g], 0.0);
    EXPECT_TRUE(r.pass[g]);
  }
}

TEST(Checkers, HardLabelsHaveNoLowConfidenceMass) {
  auto p = margin_params(4, 2.0, 2.0, 0.0);
  p.label_noise_alpha = 1.0;
  const auto dist = DistributionSpec::gauss_margin(p);
  const auto r = cerm::check_tsybakov(dist, {0.1, 0.5, 0.99}, 20000, 1, 1.0, 0.7);
  for (std::size_t g = 0; g < r.grid.size(); ++g) {
    EXPECT_EQ(r.mass[g], 0.0);
    EXPECT_TRUE(r.pass[g]);
  }
}

TEST(GaussMargin, UnweightedBandMass) {
  const auto dist = DistributionSpec::gauss_margin(margin_params(5, 2.0, 2.0, 0.0));
  const auto r = cerm::check_geometric_margin(dist, {0.5}, 200000, 7, 1.0, 2.0, false);
  EXPECT_LE(std::abs(r.mass[0] - 0.25), 3.0 * r.std_error[0]);
}

TEST(GaussMargin, FittedExponents) {
  const auto dist = DistributionSpec::gauss_margin(margin_params(3, 2.0, 3.0, 0.5));
  const std::int64_t mc = 1000000;
  const auto band = cerm::check_geometric_margin(dist, geometric_grid(0.05, 0.8, 6), mc, 11, 1.0, 2.0);
  ASSERT_TRUE(band.exponent_hat.has_value());
  EXPECT_GE(*band.exponent_hat, 1.8);
  EXPECT_LE(*band.exponent_hat, 2.2);
  // Weighted band mass is a * xi^gamma with a = 1/2.
  for (std::size_t g = 0; g < band.grid.size(); ++g)
    EXPECT_LE(std::abs(band.mass[g] - 0.5 * std::pow(band.grid[g], 2.0)), 4.0 * band.std_error[g]);

  const auto mom = cerm::check_moment(dist, geometric_grid(3.0, 20.0, 6), mc, 12, 1.0, 3.0);
  ASSERT_TRUE(mom.exponent_hat.has_value());
  EXPECT_GE(*mom.exponent_hat, 2.7);
  EXPECT_LE(*mom.exponent_hat, 3.3);

  const auto tsy = cerm::check_tsybakov(dist, geometric_grid(0.05, 0.9, 6), mc, 13, 1.0, 0.5);
  ASSERT_TRUE(tsy.exponent_hat.has_value());
  EXPECT_NEAR(*tsy.exponent_hat, 1.0, 0.05);
  for (bool ok : tsy.pass) EXPECT_TRUE(ok);
}

TEST(GaussMargin, TsybakovExponentTracksAlpha) {
  for (double alpha : {0.25, 0.6}) {
    const auto dist = DistributionSpec::gauss_margin(margin_params(3, 1.0, 2.0, alpha));
    const auto tsy = cerm::check_tsybakov(dist, geometric_grid(0.05, 0.9, 6), 300000, 21, 1.0, alpha);
    ASSERT_TRUE(tsy.exponent_hat.has_value());
    EXPECT_NEAR(*tsy.exponent_hat, alpha / (1.0 - alpha), 0.06) << "alpha=" << alpha;
  }
}

TEST(GaussMargin, BoundedSupportHasNoTail) {
  auto p = margin_params(4, 2.0, 2.0, 0.0);
  p.radial_cap = 3.0;
  const auto dist = DistributionSpec::gauss_margin(p);
  // |x|^2 <= (1 + |t|)^2 + 1 + cap^2.
  const auto r = cerm::check_moment(dist, {std::sqrt(4.0 + 1.0 + 9.0) + 1e-9}, 100000, 3);
  EXPECT_EQ(r.mass[0], 0.0);
}

TEST(GaussMargin, BayesPredictorIsSignOfMargin) {
  const auto dist = DistributionSpec::gauss_margin(margin_params(6, 1.5, 2.0, 0.4));
  const auto zo = cerm::make_loss(LossKind::zero_one);
  const auto s = dist.sample(500, 9);
  const auto& w = dist.gauss_margin_params().w_circ;
  for (Eigen::Index i = 0; i < s.X.rows(); ++i) {
    const double m = s.X.row(i).dot(w) - dist.gauss_margin_params().t_circ;
    EXPECT_EQ(cerm::bayes_predict(dist, zo, s.X.row(i)), cerm::sign_of(2.0 * dist.eta(s.X.row(i)) - 1.0));
    if (std::abs(m) > 1e-9 && std::abs(2.0 * dist.eta(s.X.row(i)) - 1.0) > 0.0)
      EXPECT_EQ(cerm::bayes_predict(dist, zo, s.X.row(i)), cerm::sign_of(m));
  }
}

// ---------------------------------------------------------------------------
// Regression family.

cerm::RegressionParams reg_params(int d, double omega, double w_norm, double amp) {
  cerm::RegressionParams p;
  p.d = d;
  p.omega = omega;
  p.W_max = std::max(1.0, w_norm);
  p.w_circ = Vector::Constant(d, w_norm / std::sqrt(static_cast<double>(d)));
  p.t_circ = 0.1;
  if (amp > 0.0) {
    p.noise = cerm::NoiseKind::bounded_uniform;
    p.noise_amplitude = amp;
  }
  return p;
}

TEST(Regression, NoiselessLabelsAreClippedLinear) {
  const auto dist = DistributionSpec::regression(reg_params(6, 0.7, 3.0, 0.0));
  const auto s = dist.sample(1000, 5);
  const auto& p = dist.regression_params();
  for (Eigen::Index i = 0; i < s.X.rows(); ++i) EXPECT_EQ(s.y(i), std::clamp(s.X.row(i).dot(p.w_circ) + p.t_circ, -1.0, 1.0));
  const auto sq = cerm::make_loss(LossKind::squared, 1.0);
  const auto b = cerm::bayes_risk(dist, sq);
  EXPECT_TRUE(b.exact);
  EXPECT_EQ(b.value, 0.0);
  cerm::BatchPredictor phi = [&](const Matrix& X) {
    Matrix out(X.rows(), 1);
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i, 0) = std::clamp(X.row(i).dot(p.w_circ) + p.t_circ, -1.0, 1.0);
    return out;
  };
  EXPECT_EQ(cerm::excess_risks(dist, sq, phi, 1, 20000, 3)[0].value, 0.0);
}

TEST(Regression, CoordinateVariancesFollowSpectrum) {
  const auto dist = DistributionSpec::regression(reg_params(5, 0.5, 1.0, 0.0));
  const int n = 200000;
  const auto s = dist.sample(n, 8);
  for (int r = 0; r < 5; ++r) {
    const double target = std::pow(0.5, r + 1);
    const double var = s.X.col(r).squaredNorm() / n;
    EXPECT_LE(std::abs(var - target), 4.0 * target * std::sqrt(2.0 / n)) << "r=" << r + 1;
  }
}

// Simpson quadrature of g over [a, b], split at the given kinks.
template <typename G>
double simpson(G&& g, double a, double b, std::vector<double> kinks = {}, int intervals = 2000) {
  std::vector<double> cuts{a};
  std::sort(kinks.begin(), kinks.end());
  for (double k : kinks)
    if (k > a && k < b) cuts.push_back(k);
  cuts.push_back(b);
  double total = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double lo = cuts[c], h = (cuts[c + 1] - lo) / intervals;
    double s = g(lo) + g(cuts[c + 1]);
    for (int i = 1; i < intervals; ++i) s += g(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    total += s * h / 3.0;
  }
  return total;
}

TEST(Regression, NoisyBayesQuantitiesMatchQuadrature) {
  const double amp = 0.8, beta = 1.0;
  const auto sq = cerm::make_loss(LossKind::squared, beta);
  for (double z : {-1.7, -0.9, -0.2, 0.0, 0.35, 0.95, 2.5}) {
    cerm::PointLaw law;
    law.uniform_clip = true;
    law.z = z;
    law.amp = amp;
    law.beta = beta;
    auto clip = [&](double u) { return std::clamp(z + u, -beta, beta); };
    const std::vector<double> kinks{-beta - z, beta - z};
    const double mean = simpson(clip, -amp, amp, kinks) / (2.0 * amp);
    EXPECT_NEAR(cerm::detail::point_bayes_action(sq, law), mean, 1e-12) << "z=" << z;
    for (double v : {-0.5, 0.0, 0.7}) {
      const double risk = simpson([&](double u) { return (clip(u) - v) * (clip(u) - v); }, -amp, amp, kinks) / (2.0 * amp);
      EXPECT_NEAR(cerm::detail::point_risk(sq, law, v), risk, 1e-12) << "z=" << z << " v=" << v;
      EXPECT_NEAR(cerm::detail::point_excess(sq, law, v), (v - mean) * (v - mean), 1e-12);
    }
  }
}

TEST(Regression, NoisyBayesRiskIsMonteCarlo) {
  const auto dist = DistributionSpec::regression(reg_params(4, 0.5, 1.0, 0.5));
  const auto r = cerm::bayes_risk(dist, cerm::make_loss(LossKind::squared, 1.0), 20000, 1);
  EXPECT_FALSE(r.exact);
  EXPECT_GT(r.value, 0.0);
  EXPECT_LT(r.value, 0.5 * 0.5 / 3.0 + 1e-12);  // at most the unclipped noise variance
  EXPECT_GT(r.std_error, 0.0);
}

TEST(Regression, RejectsLargeWeights) {
  auto p = reg_params(4, 0.5, 2.0, 0.0);
  p.W_max = 1.5;
  EXPECT_EQ(kind_of([&] { DistributionSpec::regression(p); }), ErrorKind::domain);
}

TEST(Spectral, DiagonalDecayRecovered) {
  const int n = 100000, d = 10;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = std::sqrt(std::pow(0.5, j + 1)) * normal(rng);
  const auto fit = cerm::check_spectral_decay(X);
  ASSERT_TRUE(fit.omega_hat.has_value());
  EXPECT_GE(*fit.omega_hat, 0.45);
  EXPECT_LE(*fit.omega_hat, 0.55);
  EXPECT_FALSE(fit.non_decaying);
}

TEST(Spectral, IsotropicIsFlagged) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix X(20000, 8);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
  const auto fit = cerm::check_spectral_decay(X);
  ASSERT_TRUE(fit.omega_hat.has_value());
  EXPECT_NEAR(*fit.omega_hat, 1.0, 0.05);
  EXPECT_TRUE(fit.non_decaying);
}

TEST(Spectral, SingleColumnIsDegenerate) {
  Matrix X(5, 1);
  X << 1, 2, 3, 4, 5;
  const auto fit = cerm::check_spectral_decay(X);
  EXPECT_FALSE(fit.omega_hat.has_value());
  EXPECT_DOUBLE_EQ(fit.C_hat, 2.5);  // sample variance of 1..5
}

TEST(Spectral, RankDeficiencyReported) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix X(500, 4);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
  X.col(3) = X.col(0) + X.col(1);
  EXPECT_TRUE(cerm::check_spectral_decay(X).rank_deficient);
}

// ---------------------------------------------------------------------------
// Declarative specs.

TEST(Json, RoundTripEveryVariant) {
  std::vector<DistributionSpec> dists;
  dists.push_back(DistributionSpec::gauss_margin(margin_params(5, 2.0, 3.0, 0.3)));
  dists.push_back(DistributionSpec::regression(reg_params(6, 0.6, 0.8, 0.3)));
  dists.push_back(DistributionSpec::assouad(cerm::build_assouad_family(20000, 2.0, 2.0, 0.0), random_sigma(800, 1)));
  dists.push_back(point_base(1.0));
  for (const auto& d : dists) {
    const auto j = cerm::to_json(d);
    const auto back = cerm::distribution_from_json(j);
    EXPECT_EQ(cerm::to_json(back), j);
    EXPECT_EQ(d.sample(50, 3).X, back.sample(50, 3).X);
  }
}

TEST(Json, BuildsFromParametersAndSeeds) {
  const nlohmann::json spec = {{"variant", "assouad"}, {"n", 20000}, {"gamma", 2.0}, {"rho", 2.0}, {"sigma_seed", 7}};
  const auto a = cerm::distribution_from_json(spec);
  const auto b = cerm::distribution_from_json(spec);
  EXPECT_EQ(a.sigma(), b.sigma());
  EXPECT_EQ(a.assouad_params()->q, cerm::build_assouad_family(20000, 2.0, 2.0, 0.0).q);

  const nlohmann::json reg = {{"variant", "regression"}, {"d", 4}, {"omega", 0.5}, {"w_norm", 1.0}};
  EXPECT_NEAR(cerm::distribution_from_json(reg).regression_params().w_circ.norm(), 1.0, 1e-12);

  const nlohmann::json mix = {{"variant", "mixture"},
                              {"base", cerm::to_json(point_base(-1.0))},
                              {"zeta", 0.5},
                              {"points", {{0.0, 1.0}, {0.0, 2.0}}},
                              {"sigma", {1, -1}},
                              {"y0", -1.0},
                              {"y1", 1.0}};
  EXPECT_EQ(cerm::distribution_from_json(mix).atoms().size(), 3u);
}

TEST(Json, ErrorsAreConfigErrors) {
  EXPECT_EQ(kind_of([] { cerm::distribution_from_json({{"variant", "mystery"}}); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { cerm::distribution_from_json({{"variant", "gauss_margin"}, {"d", 3}}); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { cerm::distribution_from_json({{"variant", "regression"}, {"d", 3}, {"omega", 0.5}, {"noise", {{"kind", "cauchy"}}}}); }),
            ErrorKind::config);
}

}  // namespace
