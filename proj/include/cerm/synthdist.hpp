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

#ifndef CERM_SYNTHDIST_HPP
#define CERM_SYNTHDIST_HPP

#include "cerm/core.hpp"
#include "cerm/losses.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace cerm {

struct Sample {
  Matrix X;
  Vector y;
};

/// {x : w.x - t = 0}.
struct Hyperplane {
  Vector w;
  double t = 0.0;
};

/// Nonzero (coordinate, value) pairs of a support point.
using SparsePoint = std::vector<std::pair<int, double>>;

/// Support point with its marginal mass and conditional label law. Labels are
/// -1/+1 for classification and real for regression.
struct FiniteAtom {
  SparsePoint x;
  double mass = 0.0;
  std::vector<LabelMass> labels;
};

struct AssouadParams {
  std::int64_t n = 0;
  std::int64_t q = 1;
  double r = 1.0;
  double v = 0.5;
  double epsilon = 0.25;
  double gamma = 1.0;
  double rho = 1.0;
  double alpha = 0.0;
};

/// Signed margin M = w.x - t with density proportional to |m|^(gamma-1) on
/// [-1, 1], a confidence coordinate Z ~ U[0,1] on an axis orthogonal to w with
/// |2 eta - 1| = Z^((1-a)/a), and a Pareto(rho) radius on a uniform direction
/// in the remaining complement. a = alpha, or label_noise_alpha when alpha = 0.
struct GaussMarginParams {
  int d = 3;
  Vector w_circ;
  double t_circ = 0.0;
  double gamma = 2.0;
  double rho = 2.0;
  double alpha = 0.0;
  double label_noise_alpha = 0.5;
  double radial_cap = std::numeric_limits<double>::infinity();
};

enum class NoiseKind { none, bounded_uniform };

/// X ~ N(0, diag(C_sp * omega^r)), r = 1..d; Y = clip(w.X + t + U, -beta, beta)
/// with U = 0 or U ~ U[-amplitude, amplitude].
struct RegressionParams {
  int d = 8;
  double C_sp = 1.0;
  double omega = 0.5;
  Vector w_circ;
  double t_circ = 0.0;
  double beta = 1.0;
  double W_max = 1.0;
  NoiseKind noise = NoiseKind::none;
  double noise_amplitude = 0.0;
};

enum class DistVariant { finite, assouad, mixture, gauss_margin, regression };

inline const char* to_string(DistVariant v) {
  switch (v) {
    case DistVariant::finite: return "finite";
    case DistVariant::assouad: return "assouad";
    case DistVariant::mixture: return "mixture";
    case DistVariant::gauss_margin: return "gauss_margin";
    case DistVariant::regression: return "regression";
  }
  return "finite";
}

/// Conditional law of Y given one point, in the distribution's label space.
struct PointLaw {
  std::array<LabelMass, 2> labels{};
  int count = 0;
  // Regression with uniform noise: Y = clip(z + U), U ~ U[-amp, amp].
  bool uniform_clip = false;
  double z = 0.0;
  double amp = 0.0;
  double beta = 1.0;
};

/// Ordered (coordinate, value) pairs must be strictly increasing in coordinate.
inline Eigen::RowVectorXd densify(const SparsePoint& p, int d) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(d);
  for (const auto& [j, v] : p) row(j) = v;
  return row;
}

namespace detail {

inline double clip_antiderivative(double s, double beta) {
  return std::abs(s) <= beta ? 0.5 * s * s : beta * std::abs(s) - 0.5 * beta * beta;
}

inline double clip_sq_antiderivative(double s, double beta) {
  if (std::abs(s) <= beta) return s * s * s / 3.0;
  const double tail = beta * beta * beta / 3.0 + beta * beta * (std::abs(s) - beta);
  return s > 0.0 ? tail : -tail;
}

/// E[clip(z + U)] and E[clip(z + U)^2] for U ~ U[-a, a].
inline std::pair<double, double> uniform_clip_moments(double z, double a, double beta) {
  if (a <= 0.0) {
    const double c = std::clamp(z, -beta, beta);
    return {c, c * c};
  }
  const double m1 = (clip_antiderivative(z + a, beta) - clip_antiderivative(z - a, beta)) / (2.0 * a);
  const double m2 = (clip_sq_antiderivative(z + a, beta) - clip_sq_antiderivative(z - a, beta)) / (2.0 * a);
  return {std::clamp(m1, -beta, beta), m2};
}

inline std::vector<LabelMass> to_loss_labels(const LossSpec& loss, std::span<const LabelMass> labels) {
  std::vector<LabelMass> out(labels.begin(), labels.end());
  if (loss.kind == LossKind::kl)
    for (auto& l : out) {
      require(l.y == 1.0 || l.y == -1.0, ErrorKind::domain, "kl loss needs a classification distribution");
      l.y = l.y > 0.0 ? 1.0 : 0.0;
    }
  return out;
}

inline double point_bayes_action(const LossSpec& loss, const PointLaw& law) {
  if (law.uniform_clip) {
    require(loss.kind == LossKind::squared, ErrorKind::domain, "noisy regression supports the squared loss only");
    return uniform_clip_moments(law.z, law.amp, law.beta).first;
  }
  const auto labels = to_loss_labels(loss, std::span<const LabelMass>(law.labels.data(), law.count));
  return bayes_action(loss, labels);
}

inline double point_risk(const LossSpec& loss, const PointLaw& law, double v) {
  if (law.uniform_clip) {
    require(loss.kind == LossKind::squared, ErrorKind::domain, "noisy regression supports the squared loss only");
    require(std::abs(v) <= loss.beta, ErrorKind::domain, "prediction outside [-beta, beta]");
    const auto [m1, m2] = uniform_clip_moments(law.z, law.amp, law.beta);
    return std::max(0.0, v * v - 2.0 * v * m1 + m2);
  }
  const auto labels = to_loss_labels(loss, std::span<const LabelMass>(law.labels.data(), law.count));
  return conditional_risk(loss, v, labels);
}

/// Risk at v minus the minimal conditional risk.
inline double point_excess(const LossSpec& loss, const PointLaw& law, double v) {
  if (law.uniform_clip) {
    require(loss.kind == LossKind::squared, ErrorKind::domain, "noisy regression supports the squared loss only");
    require(std::abs(v) <= loss.beta, ErrorKind::domain, "prediction outside [-beta, beta]");
    const double m = uniform_clip_moments(law.z, law.amp, law.beta).first;
    return (v - m) * (v - m);
  }
  const auto labels = to_loss_labels(loss, std::span<const LabelMass>(law.labels.data(), law.count));
  return conditional_risk(loss, v, labels) - conditional_risk(loss, bayes_action(loss, labels), labels);
}

inline double norm_of(const SparsePoint& p) {
  double s = 0.0;
  for (const auto& [j, v] : p) s += v * v;
  return std::sqrt(s);
}

inline double dot(const Vector& w, const SparsePoint& p) {
  double s = 0.0;
  for (const auto& [j, v] : p) s += w(j) * v;
  return s;
}

inline double eta_of(const std::vector<LabelMass>& labels) {
  double p = 0.0;
  for (const auto& l : labels)
    if (l.y > 0.0) p += l.p;
  return p;
}

inline bool labels_binary(const std::vector<FiniteAtom>& atoms) {
  for (const auto& a : atoms)
    for (const auto& l : a.labels)
      if (l.y != 1.0 && l.y != -1.0) return false;
  return true;
}

}  // namespace detail

/// Atom l of the Assouad family member indexed by sigma: l = 0 is e_0 with
/// mass 1 - v and eta = 1; l >= 1 is r e_l with mass v/q and eta = (1 + eps sigma_l)/2.
inline FiniteAtom assouad_atom(const AssouadParams& p, std::span<const int> sigma, std::int64_t l) {
  FiniteAtom a;
  if (l == 0) {
    a.x = {{0, 1.0}};
    a.mass = 1.0 - p.v;
    a.labels = {{1.0, 1.0}, {-1.0, 0.0}};
    return a;
  }
  const double eta = 0.5 * (1.0 + p.epsilon * sigma[static_cast<std::size_t>(l - 1)]);
  a.x = {{static_cast<int>(l), p.r}};
  a.mass = p.v / static_cast<double>(p.q);
  a.labels = {{1.0, eta}, {-1.0, 1.0 - eta}};
  return a;
}

/// A synthetic data law with analytic Bayes information. Immutable.
class DistributionSpec {
 public:
  static DistributionSpec finite(int d, std::vector<FiniteAtom> atoms, DistVariant tag = DistVariant::finite) {
    require(d >= 1, ErrorKind::invalid_dimension, "finite distribution needs d >= 1");
    require(!atoms.empty(), ErrorKind::invalid_dimension, "finite distribution needs at least one atom");
    double total = 0.0;
    for (const auto& a : atoms) {
      require(a.mass >= 0.0 && std::isfinite(a.mass), ErrorKind::domain, "atom masses must be nonnegative");
      double lp = 0.0;
      for (const auto& l : a.labels) {
        require(l.p >= 0.0, ErrorKind::domain, "label probabilities must be nonnegative");
        lp += l.p;
      }
      require(std::abs(lp - 1.0) <= 1e-12, ErrorKind::domain, "label probabilities of an atom must sum to 1");
      int prev = -1;
      for (const auto& [j, v] : a.x) {
        require(j > prev && j < d, ErrorKind::invalid_dimension, "atom coordinates must be increasing and < d");
        prev = j;
      }
      total += a.mass;
    }
    require(std::abs(total - 1.0) <= 1e-12, ErrorKind::domain, "atom masses must sum to 1");
    DistributionSpec s;
    s.variant_ = tag;
    s.d_ = d;
    s.body_ = std::move(atoms);
    return s;
  }

  /// d = 0 selects the minimal embedding dimension q + 1.
  static DistributionSpec assouad(const AssouadParams& p, std::vector<int> sigma, int d = 0) {
    require(static_cast<std::int64_t>(sigma.size()) == p.q, ErrorKind::dimension_mismatch, "sigma must have q entries");
    for (int s : sigma) require(s == 1 || s == -1, ErrorKind::domain, "sigma entries must be -1 or +1");
    require(p.q + 1 <= std::numeric_limits<int>::max(), ErrorKind::scale_guard, "q too large to materialize");
    const int dim = d == 0 ? static_cast<int>(p.q + 1) : d;
    require(dim >= p.q + 1, ErrorKind::invalid_dimension, "assouad embedding needs d >= q + 1");
    std::vector<FiniteAtom> atoms;
    atoms.reserve(static_cast<std::size_t>(p.q + 1));
    for (std::int64_t l = 0; l <= p.q; ++l) atoms.push_back(assouad_atom(p, sigma, l));
    DistributionSpec s = finite(dim, std::move(atoms), DistVariant::assouad);
    s.assouad_ = p;
    s.sigma_ = std::move(sigma);
    // w = (e_0 + q^{-1/2} sum_l sigma_l e_l) / sqrt(2), t = 0.
    Vector w = Vector::Zero(dim);
    w(0) = 1.0 / std::sqrt(2.0);
    const double c = 1.0 / std::sqrt(2.0 * static_cast<double>(p.q));
    for (std::int64_t l = 1; l <= p.q; ++l) w(l) = c * s.sigma_[static_cast<std::size_t>(l - 1)];
    s.reference_ = Hyperplane{w, 0.0};
    return s;
  }

  static DistributionSpec gauss_margin(GaussMarginParams p) {
    require(p.d >= 2, ErrorKind::invalid_dimension, "gauss_margin needs d >= 2");
    require(p.gamma > 0.0 && p.rho > 0.0, ErrorKind::domain, "gauss_margin needs gamma, rho > 0");
    require(p.alpha >= 0.0 && p.alpha < 1.0, ErrorKind::domain, "gauss_margin needs alpha in [0, 1)");
    require(p.label_noise_alpha > 0.0 && p.label_noise_alpha <= 1.0, ErrorKind::domain,
            "label_noise_alpha must lie in (0, 1]");
    require(p.radial_cap > 1.0, ErrorKind::domain, "radial_cap must exceed 1");
    if (p.w_circ.size() == 0) {
      p.w_circ = Vector::Zero(p.d);
      p.w_circ(0) = 1.0;
    }
    require(p.w_circ.size() == p.d, ErrorKind::dimension_mismatch, "w_circ length must equal d");
    const double nw = p.w_circ.norm();
    require(std::abs(nw - 1.0) <= 1e-9, ErrorKind::domain, "gauss_margin w_circ must be a unit vector");
    p.w_circ /= nw;
    DistributionSpec s;
    s.variant_ = DistVariant::gauss_margin;
    s.d_ = p.d;
    // Confidence axis: the basis vector least aligned with w, orthogonalized.
    Eigen::Index j = 0;
    p.w_circ.cwiseAbs().minCoeff(&j);
    Vector c = Vector::Zero(p.d);
    c(j) = 1.0;
    c -= c.dot(p.w_circ) * p.w_circ;
    c.normalize();
    s.confidence_axis_ = c;
    s.reference_ = Hyperplane{p.w_circ, p.t_circ};
    s.body_ = std::move(p);
    return s;
  }

  static DistributionSpec regression(RegressionParams p) {
    require(p.d >= 1, ErrorKind::invalid_dimension, "regression needs d >= 1");
    require(p.C_sp >= 1.0, ErrorKind::domain, "C_sp must be >= 1");
    require(p.omega > 0.0 && p.omega < 1.0, ErrorKind::domain, "omega must lie in (0, 1)");
    require(p.beta > 0.0, ErrorKind::domain, "beta must be positive");
    require(p.noise_amplitude >= 0.0, ErrorKind::domain, "noise amplitude must be nonnegative");
    if (p.w_circ.size() == 0) p.w_circ = Vector::Constant(p.d, p.W_max / std::sqrt(static_cast<double>(p.d)));
    require(p.w_circ.size() == p.d, ErrorKind::dimension_mismatch, "w_circ length must equal d");
    require(p.w_circ.norm() <= p.W_max * (1.0 + 1e-12), ErrorKind::domain,
            "w_circ norm " + std::to_string(p.w_circ.norm()) + " exceeds W_max " + std::to_string(p.W_max));
    DistributionSpec s;
    s.variant_ = DistVariant::regression;
    s.d_ = p.d;
    s.reference_ = Hyperplane{p.w_circ, -p.t_circ};
    s.body_ = std::move(p);
    return s;
  }

  DistVariant variant() const { return variant_; }
  int dim() const { return d_; }
  bool is_finite() const { return std::holds_alternative<std::vector<FiniteAtom>>(body_); }
  bool is_classification() const {
    if (is_finite()) return detail::labels_binary(atoms());
    return variant_ == DistVariant::gauss_margin;
  }

  const std::vector<FiniteAtom>& atoms() const {
    require(is_finite(), ErrorKind::domain, "distribution has no finite support");
    return std::get<std::vector<FiniteAtom>>(body_);
  }
  const GaussMarginParams& gauss_margin_params() const { return std::get<GaussMarginParams>(body_); }
  const RegressionParams& regression_params() const { return std::get<RegressionParams>(body_); }
  const std::optional<AssouadParams>& assouad_params() const { return assouad_; }
  const std::vector<int>& sigma() const { return sigma_; }
  const std::optional<Hyperplane>& reference() const { return reference_; }
  const Vector& confidence_axis() const { return confidence_axis_; }

  /// i.i.d. draws, deterministic in seed.
  Sample sample(std::int64_t n, std::uint64_t seed) const {
    require(n >= 1, ErrorKind::invalid_dimension, "sample size must be >= 1");
    Sample s;
    draw(n, seed, s.X, s.y, nullptr);
    return s;
  }

  /// Draws plus the conditional label law of each row.
  Sample sample_with_laws(std::int64_t n, std::uint64_t seed, std::vector<PointLaw>& laws) const {
    Sample s;
    draw(n, seed, s.X, s.y, &laws);
    return s;
  }

  /// Conditional law of Y at x (x must be a listed atom for finite laws).
  PointLaw law_at(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    require(x.size() == d_, ErrorKind::dimension_mismatch, "point dimension mismatch");
    PointLaw law;
    if (is_finite()) {
      const Eigen::Index nnz = (x.array() != 0.0).count();
      for (const auto& a : atoms()) {
        Eigen::Index hits = 0;
        bool same = true;
        for (const auto& [j, v] : a.x) {
          if (x(j) != v) {
            same = false;
            break;
          }
          hits += v != 0.0;
        }
        if (!same || hits != nnz) continue;
        law.count = 0;
        for (const auto& l : a.labels)
          if (law.count < 2) law.labels[static_cast<std::size_t>(law.count++)] = l;
        return law;
      }
      throw Error(ErrorKind::domain, "point is not in the support of the finite distribution");
    }
    if (variant_ == DistVariant::gauss_margin) {
      const auto& p = gauss_margin_params();
      const double m = x.dot(p.w_circ) - p.t_circ;
      const double z = std::clamp(x.dot(confidence_axis_), 0.0, 1.0);
      set_eta(law, 0.5 * (1.0 + sign_of(m) * confidence(z)));
      return law;
    }
    const auto& p = regression_params();
    const double z = x.dot(p.w_circ) + p.t_circ;
    if (p.noise == NoiseKind::none || p.noise_amplitude == 0.0) {
      law.count = 1;
      law.labels[0] = {std::clamp(z, -p.beta, p.beta), 1.0};
    } else {
      law.uniform_clip = true;
      law.z = z;
      law.amp = p.noise_amplitude;
      law.beta = p.beta;
    }
    return law;
  }

  /// eta(x) = P(Y = +1 | X = x).
  double eta(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    require(is_classification(), ErrorKind::domain, "eta is defined for classification distributions");
    const PointLaw law = law_at(x);
    double p = 0.0;
    for (int i = 0; i < law.count; ++i)
      if (law.labels[static_cast<std::size_t>(i)].y > 0.0) p += law.labels[static_cast<std::size_t>(i)].p;
    return p;
  }

  /// |2 eta - 1| as a function of the confidence coordinate.
  double confidence(double z) const {
    const double a = noise_a();
    if (a >= 1.0) return 1.0;
    return std::pow(std::clamp(z, 0.0, 1.0), (1.0 - a) / a);
  }

  double noise_a() const {
    const auto& p = gauss_margin_params();
    return p.alpha > 0.0 ? p.alpha : p.label_noise_alpha;
  }

 private:
  void set_eta(PointLaw& law, double eta) const {
    law.count = 2;
    law.labels[0] = {1.0, eta};
    law.labels[1] = {-1.0, 1.0 - eta};
  }

  void draw(std::int64_t n, std::uint64_t seed, Matrix& X, Vector& y, std::vector<PointLaw>* laws) const {
    std::mt19937_64 rng(splitmix64(seed ^ 0x2545f4914f6cdd1dULL));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    X = Matrix::Zero(n, d_);
    y.resize(n);
    if (laws) laws->assign(static_cast<std::size_t>(n), PointLaw{});

    if (is_finite()) {
      const auto& at = atoms();
      std::vector<double> masses;
      masses.reserve(at.size());
      for (const auto& a : at) masses.push_back(a.mass);
      std::discrete_distribution<std::size_t> pick(masses.begin(), masses.end());
      for (std::int64_t i = 0; i < n; ++i) {
        const FiniteAtom& a = at[pick(rng)];
        for (const auto& [j, v] : a.x) X(i, j) = v;
        double u = unif(rng), acc = 0.0;
        y(i) = a.labels.back().y;
        for (const auto& l : a.labels) {
          acc += l.p;
          if (u < acc) {
            y(i) = l.y;
            break;
          }
        }
        if (laws) {
          PointLaw& law = (*laws)[static_cast<std::size_t>(i)];
          for (const auto& l : a.labels)
            if (law.count < 2) law.labels[static_cast<std::size_t>(law.count++)] = l;
        }
      }
      return;
    }

    if (variant_ == DistVariant::gauss_margin) {
      const auto& p = gauss_margin_params();
      const Vector& w = p.w_circ;
      const Vector& c = confidence_axis_;
      const double cap_tail = std::isfinite(p.radial_cap) ? std::pow(p.radial_cap, -p.rho) : 0.0;
      Vector g(d_);
      for (std::int64_t i = 0; i < n; ++i) {
        const double sgn = unif(rng) < 0.5 ? -1.0 : 1.0;
        const double m = sgn * std::pow(unif(rng), 1.0 / p.gamma);
        const double z = unif(rng);
        // Inverse CDF of Pareto(rho) on [1, cap].
        const double radius = std::pow(1.0 - unif(rng) * (1.0 - cap_tail), -1.0 / p.rho);
        Eigen::RowVectorXd row = (m + p.t_circ) * w.transpose() + z * c.transpose();
        if (d_ >= 3) {
          for (int j = 0; j < d_; ++j) g(j) = normal(rng);
          g -= g.dot(w) * w;
          g -= g.dot(c) * c;
          const double gn = g.norm();
          if (gn > 0.0) row += (radius / gn) * g.transpose();
        }
        X.row(i) = row;
        const double eta = 0.5 * (1.0 + sign_of(m) * confidence(z));
        y(i) = unif(rng) < eta ? 1.0 : -1.0;
        if (laws) set_eta((*laws)[static_cast<std::size_t>(i)], eta);
      }
      return;
    }

    const auto& p = regression_params();
    Vector sd(d_);
    for (int j = 0; j < d_; ++j) sd(j) = std::sqrt(p.C_sp * std::pow(p.omega, j + 1));
    const bool noisy = p.noise == NoiseKind::bounded_uniform && p.noise_amplitude > 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      for (int j = 0; j < d_; ++j) X(i, j) = sd(j) * normal(rng);
      const double z = X.row(i).dot(p.w_circ) + p.t_circ;
      const double u = noisy ? p.noise_amplitude * (2.0 * unif(rng) - 1.0) : 0.0;
      y(i) = std::clamp(z + u, -p.beta, p.beta);
      if (laws) {
        PointLaw& law = (*laws)[static_cast<std::size_t>(i)];
        if (noisy) {
          law.uniform_clip = true;
          law.z = z;
          law.amp = p.noise_amplitude;
          law.beta = p.beta;
        } else {
          law.count = 1;
          law.labels[0] = {std::clamp(z, -p.beta, p.beta), 1.0};
        }
      }
    }
  }

  DistVariant variant_ = DistVariant::finite;
  int d_ = 1;
  std::variant<std::vector<FiniteAtom>, GaussMarginParams, RegressionParams> body_;
  std::optional<AssouadParams> assouad_;
  std::vector<int> sigma_;
  std::optional<Hyperplane> reference_;
  Vector confidence_axis_;
};

/// Predictions of P predictors on the rows of X, returned as an n x P matrix.
using BatchPredictor = std::function<Matrix(const Matrix&)>;

inline constexpr std::int64_t kEvalChunk = 4096;

/// Excess risk of each of `count` predictors. Finite laws are summed exactly;
/// otherwise one Monte-Carlo test draw of n_test points, shared by all
/// predictors and generated in fixed chunks, is used.
inline std::vector<RiskEstimate> excess_risks(const DistributionSpec& dist, const LossSpec& loss,
                                              const BatchPredictor& predict, int count, std::int64_t n_test,
                                              std::uint64_t seed) {
  std::vector<RiskEstimate> out(static_cast<std::size_t>(count));
  const int d = dist.dim();
  if (dist.is_finite()) {
    const auto& atoms = dist.atoms();
    std::vector<double> total(static_cast<std::size_t>(count), 0.0);
    const std::size_t chunk = d > 4096 ? 64 : 1024;
    for (std::size_t start = 0; start < atoms.size(); start += chunk) {
      const std::size_t stop = std::min(atoms.size(), start + chunk);
      Matrix X = Matrix::Zero(static_cast<Eigen::Index>(stop - start), d);
      for (std::size_t a = start; a < stop; ++a)
        for (const auto& [j, v] : atoms[a].x) X(static_cast<Eigen::Index>(a - start), j) = v;
      const Matrix P = predict(X);
      require(P.cols() == count && P.rows() == X.rows(), ErrorKind::dimension_mismatch, "predictor output shape");
      for (std::size_t a = start; a < stop; ++a) {
        if (atoms[a].mass <= 0.0) continue;
        const auto labels = detail::to_loss_labels(loss, atoms[a].labels);
        const double base = conditional_risk(loss, bayes_action(loss, labels), labels);
        for (int c = 0; c < count; ++c) {
          const double v = P(static_cast<Eigen::Index>(a - start), c);
          total[static_cast<std::size_t>(c)] += atoms[a].mass * (conditional_risk(loss, v, labels) - base);
        }
      }
    }
    for (int c = 0; c < count; ++c) out[static_cast<std::size_t>(c)] = RiskEstimate::exact_value(total[static_cast<std::size_t>(c)]);
    return out;
  }
  require(n_test >= 1, ErrorKind::domain, "n_test must be positive");
  std::vector<MeanAccumulator> acc(static_cast<std::size_t>(count));
  std::vector<PointLaw> laws;
  for (std::int64_t start = 0, chunk_id = 0; start < n_test; start += kEvalChunk, ++chunk_id) {
    const std::int64_t rows = std::min(kEvalChunk, n_test - start);
    const Sample s = dist.sample_with_laws(rows, derive_seed(seed, static_cast<std::uint64_t>(chunk_id)), laws);
    const Matrix P = predict(s.X);
    require(P.cols() == count && P.rows() == rows, ErrorKind::dimension_mismatch, "predictor output shape");
    for (int c = 0; c < count; ++c) {
      MeanAccumulator local;
      for (std::int64_t i = 0; i < rows; ++i) local.add(detail::point_excess(loss, laws[static_cast<std::size_t>(i)], P(i, c)));
      acc[static_cast<std::size_t>(c)].merge(local);
    }
  }
  for (int c = 0; c < count; ++c) out[static_cast<std::size_t>(c)] = acc[static_cast<std::size_t>(c)].estimate();
  return out;
}

/// Bayes action at x.
inline double bayes_predict(const DistributionSpec& dist, const LossSpec& loss,
                            const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return detail::point_bayes_action(loss, dist.law_at(x));
}

/// Bayes actions at every row of X (finite laws: rows must be support points).
inline Vector bayes_predict_rows(const DistributionSpec& dist, const LossSpec& loss, const Matrix& X) {
  Vector out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = bayes_predict(dist, loss, X.row(i));
  return out;
}

/// Minimal risk: exact for finite laws and noiseless regression, Monte Carlo otherwise.
inline RiskEstimate bayes_risk(const DistributionSpec& dist, const LossSpec& loss, std::int64_t n_test = 100000,
                               std::uint64_t seed = 0) {
  if (dist.is_finite()) {
    double total = 0.0;
    for (const auto& a : dist.atoms()) {
      if (a.mass <= 0.0) continue;
      const auto labels = detail::to_loss_labels(loss, a.labels);
      total += a.mass * conditional_risk(loss, bayes_action(loss, labels), labels);
    }
    return RiskEstimate::exact_value(total);
  }
  if (dist.variant() == DistVariant::regression) {
    require(loss.kind == LossKind::squared, ErrorKind::domain, "regression distributions support the squared loss");
    const auto& p = dist.regression_params();
    if (p.noise == NoiseKind::none || p.noise_amplitude == 0.0) return RiskEstimate::exact_value(0.0);
  }
  MeanAccumulator acc;
  std::vector<PointLaw> laws;
  for (std::int64_t start = 0, chunk_id = 0; start < n_test; start += kEvalChunk, ++chunk_id) {
    const std::int64_t rows = std::min(kEvalChunk, n_test - start);
    dist.sample_with_laws(rows, derive_seed(seed, static_cast<std::uint64_t>(chunk_id)), laws);
    MeanAccumulator local;
    for (std::int64_t i = 0; i < rows; ++i) {
      const PointLaw& law = laws[static_cast<std::size_t>(i)];
      local.add(detail::point_risk(loss, law, detail::point_bayes_action(loss, law)));
    }
    acc.merge(local);
  }
  return acc.estimate();
}

// ---------------------------------------------------------------------------
// Lower-bound constructions.

/// Sample-size guard below which the Assouad construction is not valid.
inline double assouad_n0(double gamma, double rho, double alpha) {
  require(gamma > 0.0 && rho > 0.0 && alpha >= 0.0 && alpha < 1.0, ErrorKind::domain,
          "assouad family needs gamma, rho > 0 and alpha in [0, 1)");
  const double s = 2.0 * (gamma + rho) + gamma * rho * (2.0 - alpha);
  const double a = 1.0 + std::exp2(6.0 * s / (rho * gamma * (2.0 - alpha)));
  const double b = std::exp2(s / (rho * gamma * (1.0 - alpha)));
  return std::max(a, b);
}

inline AssouadParams build_assouad_family(std::int64_t n, double gamma, double rho, double alpha) {
  const double n0 = assouad_n0(gamma, rho, alpha);
  require(static_cast<double>(n) >= n0, ErrorKind::small_n,
          "n = " + std::to_string(n) + " is below the guard n0 = " + std::to_string(n0));
  const double gr = gamma + rho;
  const double expo = 2.0 * gr / (2.0 * gr + rho * gamma * (2.0 - alpha));
  AssouadParams p;
  p.n = n;
  p.gamma = gamma;
  p.rho = rho;
  p.alpha = alpha;
  p.q = static_cast<std::int64_t>(std::ceil(std::pow(32.0 * static_cast<double>(n), expo)));
  const double q = static_cast<double>(p.q);
  p.r = std::pow(q, gamma / (2.0 * gr));
  p.v = std::pow(q, -rho * gamma * alpha / (2.0 * gr));
  p.epsilon = std::pow(q, -gamma * rho * (1.0 - alpha) / (2.0 * gr));
  return p;
}

/// Constants of the classification measure class.
struct ClassConstants {
  double gamma = 1.0;
  double C_G = 1.0;
  double rho = 1.0;
  double C_M = 1.0;
  double alpha = 0.0;
  double C_T = 1.0;
};

/// Class constants under which build_assouad_family output is a member.
inline ClassConstants assouad_constants(const AssouadParams& p) {
  return {p.gamma, std::pow(2.0, p.gamma / 2.0), p.rho, 1.0, p.alpha, 1.0};
}

struct Membership {
  bool geom = false;
  bool moment = false;
  bool tsybakov = false;

  bool all() const { return geom && moment && tsybakov; }
};

/// Relative slack for comparisons that the construction meets with equality.
inline constexpr double kMembershipSlack = 1e-12;

inline Membership check_membership(const AssouadParams& p, const ClassConstants& g) {
  auto leq = [](double lhs, double rhs) { return lhs <= rhs * (1.0 + kMembershipSlack); };
  const double ev = p.epsilon * p.v;
  const double q = static_cast<double>(p.q);
  Membership m;
  m.geom = leq(ev, g.C_G * std::pow(p.r / std::sqrt(2.0 * q), g.gamma));
  m.moment = leq(ev, g.C_M * std::pow(p.r, -g.rho));
  m.tsybakov = g.alpha == 0.0 ? leq(p.v, g.C_T) : leq(p.v, g.C_T * std::pow(p.epsilon, g.alpha / (1.0 - g.alpha)));
  return m;
}

namespace detail {

/// Sum over (atom, label) of (Q - P)^2 / P, with matching atom order.
template <typename AtomAt>
double chi_square_sum(std::int64_t count, AtomAt&& p_atom, AtomAt&& q_atom) {
  double total = 0.0;
  for (std::int64_t i = 0; i < count; ++i) {
    const FiniteAtom a = p_atom(i);
    const FiniteAtom b = q_atom(i);
    require(a.x == b.x, ErrorKind::domain, "chi-square needs matching supports");
    for (const auto& la : a.labels) {
      double pb = 0.0;
      for (const auto& lb : b.labels)
        if (lb.y == la.y) pb += lb.p;
      const double P = a.mass * la.p;
      const double Q = b.mass * pb;
      if (P > 0.0) {
        total += (Q - P) * (Q - P) / P;
      } else if (Q > 0.0) {
        return std::numeric_limits<double>::infinity();
      }
    }
  }
  return total;
}

}  // namespace detail

/// chi^2(Q || P) between two finite laws listed over the same support.
inline double chi_square(const DistributionSpec& P, const DistributionSpec& Q) {
  const auto& a = P.atoms();
  const auto& b = Q.atoms();
  require(a.size() == b.size(), ErrorKind::domain, "chi-square needs matching supports");
  auto pa = [&](std::int64_t i) { return a[static_cast<std::size_t>(i)]; };
  auto qa = [&](std::int64_t i) { return b[static_cast<std::size_t>(i)]; };
  return detail::chi_square_sum(static_cast<std::int64_t>(a.size()), std::function<FiniteAtom(std::int64_t)>(pa),
                                std::function<FiniteAtom(std::int64_t)>(qa));
}

/// chi^2 between two Assouad members, summed atom by atom without materializing.
inline double assouad_chi_square(const AssouadParams& p, std::span<const int> sigma, std::span<const int> sigma2) {
  require(static_cast<std::int64_t>(sigma.size()) == p.q && static_cast<std::int64_t>(sigma2.size()) == p.q,
          ErrorKind::dimension_mismatch, "sigma must have q entries");
  std::function<FiniteAtom(std::int64_t)> a = [&](std::int64_t l) { return assouad_atom(p, sigma, l); };
  std::function<FiniteAtom(std::int64_t)> b = [&](std::int64_t l) { return assouad_atom(p, sigma2, l); };
  return detail::chi_square_sum(p.q + 1, a, b);
}

inline double assouad_chi_square_bound(const AssouadParams& p) {
  return 16.0 * p.epsilon * p.epsilon * p.v / static_cast<double>(p.q);
}

/// (1 - zeta) P0 + zeta P1, where P1 is uniform on (points_j, y0 if sigma_j = -1
/// else y1). intended_n > 0 enforces q >= ceil(2 zeta n).
inline DistributionSpec build_mixture_lb(const DistributionSpec& base, double zeta, const Matrix& points,
                                         const std::vector<int>& sigma, double y0, double y1,
                                         std::int64_t intended_n = 0) {
  require(zeta > 0.0 && zeta <= 1.0, ErrorKind::domain, "zeta must lie in (0, 1]");
  require(points.rows() >= 1 && points.rows() == static_cast<Eigen::Index>(sigma.size()), ErrorKind::dimension_mismatch,
          "need one sigma entry per mixture point");
  require(points.cols() == base.dim(), ErrorKind::dimension_mismatch, "points must live in the base dimension");
  const std::int64_t q = points.rows();
  if (intended_n > 0)
    require(static_cast<double>(q) >= std::ceil(2.0 * zeta * static_cast<double>(intended_n)), ErrorKind::domain,
            "mixture needs q >= ceil(2 zeta n)");
  const int d = base.dim();
  std::vector<FiniteAtom> atoms;
  for (const auto& a : base.atoms()) {
    if (a.mass <= 0.0) continue;
    const Eigen::RowVectorXd x0 = densify(a.x, d);
    for (Eigen::Index j = 0; j < q; ++j)
      require((points.row(j) - x0).cwiseAbs().maxCoeff() != 0.0, ErrorKind::atom_collision,
              "mixture point " + std::to_string(j) + " carries base mass");
    if (zeta < 1.0) {
      FiniteAtom b = a;
      b.mass *= 1.0 - zeta;
      atoms.push_back(std::move(b));
    }
  }
  for (Eigen::Index j = 0; j < q; ++j) {
    const int s = sigma[static_cast<std::size_t>(j)];
    require(s == 1 || s == -1, ErrorKind::domain, "sigma entries must be -1 or +1");
    FiniteAtom a;
    for (int c = 0; c < d; ++c)
      if (points(j, c) != 0.0) a.x.emplace_back(c, points(j, c));
    a.mass = zeta / static_cast<double>(q);
    a.labels = {{s > 0 ? y1 : y0, 1.0}};
    atoms.push_back(std::move(a));
  }
  // Renormalize away the rounding of (1 - zeta) * m + zeta / q.
  double total = 0.0;
  for (const auto& a : atoms) total += a.mass;
  for (auto& a : atoms) a.mass /= total;
  return DistributionSpec::finite(d, std::move(atoms), DistVariant::mixture);
}

// ---------------------------------------------------------------------------
// Distributional condition checkers.

struct CheckerResult {
  std::vector<double> grid;
  std::vector<double> mass;
  std::vector<double> std_error;
  std::vector<bool> pass;
  std::optional<double> C_hat;
  std::optional<double> exponent_hat;
  bool exact = false;
};

namespace detail {

/// Calls f(weight, margin, confidence, norm) for every support point (exact,
/// weight = mass) or for mc_n Monte-Carlo draws (weight = 1).
template <typename F>
bool for_each_point(const DistributionSpec& dist, std::int64_t mc_n, std::uint64_t seed, F&& f) {
  require(dist.is_classification(), ErrorKind::domain, "checker needs a classification distribution");
  const auto& ref = dist.reference();
  if (dist.is_finite()) {
    for (const auto& a : dist.atoms()) {
      if (a.mass <= 0.0) continue;
      const double margin = ref ? dot(ref->w, a.x) - ref->t : std::numeric_limits<double>::infinity();
      f(a.mass, margin, std::abs(2.0 * eta_of(a.labels) - 1.0), norm_of(a.x));
    }
    return true;
  }
  require(mc_n >= 1, ErrorKind::domain, "mc_n must be positive");
  const auto& p = dist.gauss_margin_params();
  const Vector& c = dist.confidence_axis();
  std::vector<PointLaw> laws;
  for (std::int64_t start = 0, chunk = 0; start < mc_n; start += kEvalChunk, ++chunk) {
    const std::int64_t rows = std::min(kEvalChunk, mc_n - start);
    const Sample s = dist.sample_with_laws(rows, derive_seed(seed, static_cast<std::uint64_t>(chunk)), laws);
    for (std::int64_t i = 0; i < rows; ++i) {
      const double margin = s.X.row(i).dot(p.w_circ) - p.t_circ;
      f(1.0, margin, dist.confidence(s.X.row(i).dot(c)), s.X.row(i).norm());
    }
  }
  return false;
}

/// Fits log(mass) = log(C) + slope * log(grid) over positive masses.
inline void fit_power(CheckerResult& r) {
  std::vector<double> lx, ly, w;
  bool weighted = true;
  for (std::size_t i = 0; i < r.grid.size(); ++i)
    if (r.mass[i] > 0.0 && r.std_error[i] <= 0.0) weighted = false;
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    if (r.mass[i] <= 0.0) continue;
    lx.push_back(std::log(r.grid[i]));
    ly.push_back(std::log(r.mass[i]));
    w.push_back(weighted ? (r.mass[i] / r.std_error[i]) * (r.mass[i] / r.std_error[i]) : 1.0);
  }
  if (lx.size() < 2) return;
  std::vector<double> sorted = lx;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) return;
  const LineFit fit = weighted_line_fit(lx, ly, w);
  r.C_hat = std::exp(fit.intercept);
  r.exponent_hat = fit.slope;
}

template <typename Indicator>
CheckerResult band_checker(const DistributionSpec& dist, const std::vector<double>& grid, std::int64_t mc_n,
                           std::uint64_t seed, bool weighted, Indicator&& inside) {
  CheckerResult r;
  r.grid = grid;
  std::vector<double> exact(grid.size(), 0.0);
  std::vector<MeanAccumulator> acc(grid.size());
  r.exact = for_each_point(dist, mc_n, seed, [&](double weight, double margin, double conf, double norm) {
    const double value = weighted ? conf : 1.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double hit = inside(grid[g], margin, conf, norm) ? value : 0.0;
      exact[g] += weight * hit;
      acc[g].add(hit);
    }
  });
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (r.exact) {
      r.mass.push_back(exact[g]);
      r.std_error.push_back(0.0);
    } else {
      const RiskEstimate e = acc[g].estimate();
      r.mass.push_back(e.value);
      r.std_error.push_back(e.std_error);
    }
  }
  fit_power(r);
  return r;
}

inline void set_pass(CheckerResult& r, const std::function<double(double)>& bound) {
  r.pass.clear();
  for (std::size_t g = 0; g < r.grid.size(); ++g) {
    const double b = bound(r.grid[g]);
    r.pass.push_back(r.mass[g] <= b * (1.0 + kMembershipSlack) + 3.0 * r.std_error[g]);
  }
}

}  // namespace detail

/// eta-weighted mass of the band |w.x - t| <= xi around the reference hyperplane;
/// the fitted exponent estimates gamma.
inline CheckerResult check_geometric_margin(const DistributionSpec& dist, const std::vector<double>& xi_grid,
                                            std::int64_t mc_n, std::uint64_t seed, double C_G = 1.0,
                                            double gamma = 1.0, bool weighted = true) {
  require(dist.reference().has_value(), ErrorKind::domain, "distribution has no reference hyperplane");
  CheckerResult r = detail::band_checker(dist, xi_grid, mc_n, seed, weighted,
                                         [](double xi, double margin, double, double) {
                                           return std::abs(margin) <= xi * (1.0 + kMembershipSlack);
                                         });
  detail::set_pass(r, [&](double xi) { return C_G * std::pow(xi, gamma); });
  return r;
}

/// eta-weighted mass of {|x| > s}; the fitted exponent estimates rho (sign flipped).
inline CheckerResult check_moment(const DistributionSpec& dist, const std::vector<double>& s_grid, std::int64_t mc_n,
                                  std::uint64_t seed, double C_M = 1.0, double rho = 1.0) {
  CheckerResult r = detail::band_checker(dist, s_grid, mc_n, seed, true,
                                         [](double s, double, double, double norm) { return norm > s * (1.0 + kMembershipSlack); });
  if (r.exponent_hat) r.exponent_hat = -*r.exponent_hat;
  detail::set_pass(r, [&](double s) { return C_M * std::pow(s, -rho); });
  return r;
}

/// Mass of the low-confidence region {|2 eta - 1| <= eps}; the fitted exponent
/// estimates alpha / (1 - alpha).
inline CheckerResult check_tsybakov(const DistributionSpec& dist, const std::vector<double>& eps_grid,
                                    std::int64_t mc_n, std::uint64_t seed, double C_T = 1.0, double alpha = 0.0) {
  require(alpha >= 0.0 && alpha < 1.0, ErrorKind::domain, "alpha must lie in [0, 1)");
  CheckerResult r = detail::band_checker(dist, eps_grid, mc_n, seed, false,
                                         [](double eps, double, double conf, double) { return conf <= eps * (1.0 + kMembershipSlack); });
  detail::set_pass(r, [&](double eps) { return C_T * std::pow(eps, alpha / (1.0 - alpha)); });
  return r;
}

struct SpectralFit {
  std::vector<double> eigenvalues;
  double C_hat = 0.0;
  std::optional<double> omega_hat;
  bool non_decaying = false;
  bool rank_deficient = false;
};

/// Log-linear fit log(lambda_r) = log(C) + r log(omega) over the top
/// min(d, 20) eigenvalues of the empirical covariance.
inline SpectralFit check_spectral_decay(const Matrix& X) {
  require(X.rows() >= 2 && X.cols() >= 1, ErrorKind::invalid_dimension, "spectral check needs n >= 2, d >= 1");
  const Eigen::RowVectorXd mu = X.colwise().mean();
  const Eigen::MatrixXd centered = X.rowwise() - mu;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(X.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  SpectralFit fit;
  const auto& ev = eig.eigenvalues();
  for (Eigen::Index i = ev.size() - 1; i >= 0; --i) fit.eigenvalues.push_back(std::max(0.0, ev(i)));
  const double top = fit.eigenvalues.front();
  fit.C_hat = top;
  if (fit.eigenvalues.size() == 1 || top <= 0.0) return fit;
  std::vector<double> r, ly, w;
  const std::size_t use = std::min<std::size_t>(fit.eigenvalues.size(), 20);
  for (std::size_t i = 0; i < use; ++i) {
    if (fit.eigenvalues[i] <= 1e-12 * top) {
      fit.rank_deficient = true;
      continue;
    }
    r.push_back(static_cast<double>(i + 1));
    ly.push_back(std::log(fit.eigenvalues[i]));
    w.push_back(1.0);
  }
  if (r.size() < 2) return fit;
  const LineFit lf = weighted_line_fit(r, ly, w);
  fit.omega_hat = std::exp(lf.slope);
  fit.C_hat = std::exp(lf.intercept);
  fit.non_decaying = *fit.omega_hat >= 0.95;
  return fit;
}

// ---------------------------------------------------------------------------
// Declarative specs.

inline nlohmann::json to_json(const DistributionSpec& dist) {
  nlohmann::json j;
  j["variant"] = to_string(dist.variant());
  j["d"] = dist.dim();
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  switch (dist.variant()) {
    case DistVariant::gauss_margin: {
      const auto& p = dist.gauss_margin_params();
      j["w_circ"] = vec(p.w_circ);
      j["t_circ"] = p.t_circ;
      j["gamma"] = p.gamma;
      j["rho"] = p.rho;
      j["alpha"] = p.alpha;
      j["label_noise_alpha"] = p.label_noise_alpha;
      if (std::isfinite(p.radial_cap)) j["radial_cap"] = p.radial_cap;
      break;
    }
    case DistVariant::regression: {
      const auto& p = dist.regression_params();
      j["C_sp"] = p.C_sp;
      j["omega"] = p.omega;
      j["w_circ"] = vec(p.w_circ);
      j["t_circ"] = p.t_circ;
      j["beta"] = p.beta;
      j["W_max"] = p.W_max;
      j["noise"] = p.noise == NoiseKind::none ? nlohmann::json{{"kind", "none"}}
                                              : nlohmann::json{{"kind", "bounded_uniform"}, {"amplitude", p.noise_amplitude}};
      break;
    }
    case DistVariant::assouad: {
      const auto& p = *dist.assouad_params();
      j["n"] = p.n;
      j["q"] = p.q;
      j["r"] = p.r;
      j["v"] = p.v;
      j["epsilon"] = p.epsilon;
      j["gamma"] = p.gamma;
      j["rho"] = p.rho;
      j["alpha"] = p.alpha;
      j["sigma"] = dist.sigma();
      break;
    }
    case DistVariant::finite:
    case DistVariant::mixture: {
      j["variant"] = "finite";
      nlohmann::json atoms = nlohmann::json::array();
      for (const auto& a : dist.atoms()) {
        nlohmann::json labels = nlohmann::json::array();
        for (const auto& l : a.labels) labels.push_back({{"y", l.y}, {"p", l.p}});
        nlohmann::json x = nlohmann::json::array();
        for (const auto& [c, v] : a.x) x.push_back({c, v});
        atoms.push_back({{"x", x}, {"mass", a.mass}, {"labels", labels}});
      }
      j["atoms"] = atoms;
      break;
    }
  }
  return j;
}

namespace detail {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline Vector vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

/// Builds a distribution from its declarative spec. Keys per variant:
///   gauss_margin: d, gamma, rho, alpha, [w_circ, t_circ, label_noise_alpha, radial_cap]
///   regression:   d, omega, [C_sp, w_circ | w_norm, t_circ, beta, W_max, noise{kind, amplitude}]
///   assouad:      n, gamma, rho, alpha, [sigma | sigma_seed, d]
///   finite:       d, atoms[{x: dense list or [[index, value], ...], mass, labels[{y, p}]}]
///   mixture:      base (finite spec), zeta, points, sigma, y0, y1, [intended_n]
inline DistributionSpec distribution_from_json(const nlohmann::json& j) {
  try {
    const std::string variant = j.at("variant").get<std::string>();
    if (variant == "gauss_margin") {
      GaussMarginParams p;
      p.d = j.at("d").get<int>();
      p.gamma = j.at("gamma").get<double>();
      p.rho = j.at("rho").get<double>();
      p.alpha = detail::get_or(j, "alpha", 0.0);
      p.t_circ = detail::get_or(j, "t_circ", 0.0);
      p.label_noise_alpha = detail::get_or(j, "label_noise_alpha", 0.5);
      if (j.contains("radial_cap")) p.radial_cap = j.at("radial_cap").get<double>();
      if (j.contains("w_circ")) p.w_circ = detail::vector_from_json(j.at("w_circ"));
      return DistributionSpec::gauss_margin(std::move(p));
    }
    if (variant == "regression") {
      RegressionParams p;
      p.d = j.at("d").get<int>();
      p.omega = j.at("omega").get<double>();
      p.C_sp = detail::get_or(j, "C_sp", 1.0);
      p.t_circ = detail::get_or(j, "t_circ", 0.0);
      p.beta = detail::get_or(j, "beta", 1.0);
      p.W_max = detail::get_or(j, "W_max", 1.0);
      if (j.contains("w_circ")) {
        p.w_circ = detail::vector_from_json(j.at("w_circ"));
      } else if (j.contains("w_norm")) {
        p.w_circ = Vector::Constant(p.d, j.at("w_norm").get<double>() / std::sqrt(static_cast<double>(p.d)));
      }
      if (j.contains("noise")) {
        const std::string kind = j.at("noise").at("kind").get<std::string>();
        if (kind == "bounded_uniform") {
          p.noise = NoiseKind::bounded_uniform;
          p.noise_amplitude = j.at("noise").at("amplitude").get<double>();
        } else {
          require(kind == "none", ErrorKind::config, "noise.kind must be none or bounded_uniform");
        }
      }
      return DistributionSpec::regression(std::move(p));
    }
    if (variant == "assouad") {
      AssouadParams p;
      if (j.contains("q")) {
        p.n = detail::get_or<std::int64_t>(j, "n", 0);
        p.q = j.at("q").get<std::int64_t>();
        p.r = j.at("r").get<double>();
        p.v = j.at("v").get<double>();
        p.epsilon = j.at("epsilon").get<double>();
        p.gamma = detail::get_or(j, "gamma", 1.0);
        p.rho = detail::get_or(j, "rho", 1.0);
        p.alpha = detail::get_or(j, "alpha", 0.0);
      } else {
        p = build_assouad_family(j.at("n").get<std::int64_t>(), j.at("gamma").get<double>(),
                                 j.at("rho").get<double>(), detail::get_or(j, "alpha", 0.0));
      }
      std::vector<int> sigma;
      if (j.contains("sigma")) {
        sigma = j.at("sigma").get<std::vector<int>>();
      } else {
        std::mt19937_64 rng(splitmix64(detail::get_or<std::uint64_t>(j, "sigma_seed", 0)));
        for (std::int64_t l = 0; l < p.q; ++l) sigma.push_back((rng() & 1ULL) ? 1 : -1);
      }
      return DistributionSpec::assouad(p, std::move(sigma), detail::get_or(j, "d", 0));
    }
    if (variant == "finite") {
      const int d = j.at("d").get<int>();
      std::vector<FiniteAtom> atoms;
      for (const auto& ja : j.at("atoms")) {
        FiniteAtom a;
        const auto& jx = ja.at("x");
        if (!jx.empty() && jx.front().is_array()) {
          for (const auto& e : jx) a.x.emplace_back(e.at(0).get<int>(), e.at(1).get<double>());
        } else {
          require(static_cast<int>(jx.size()) == d, ErrorKind::config, "dense atom x must have d entries");
          for (int c = 0; c < d; ++c)
            if (const double v = jx.at(static_cast<std::size_t>(c)).get<double>(); v != 0.0) a.x.emplace_back(c, v);
        }
        a.mass = ja.at("mass").get<double>();
        for (const auto& jl : ja.at("labels")) a.labels.push_back({jl.at("y").get<double>(), jl.at("p").get<double>()});
        atoms.push_back(std::move(a));
      }
      return DistributionSpec::finite(d, std::move(atoms));
    }
    if (variant == "mixture") {
      const DistributionSpec base = distribution_from_json(j.at("base"));
      const auto rows = j.at("points").get<std::vector<std::vector<double>>>();
      Matrix pts(static_cast<Eigen::Index>(rows.size()), base.dim());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        require(static_cast<int>(rows[i].size()) == base.dim(), ErrorKind::config, "mixture point dimension mismatch");
        for (int c = 0; c < base.dim(); ++c) pts(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
      }
      return build_mixture_lb(base, j.at("zeta").get<double>(), pts, j.at("sigma").get<std::vector<int>>(),
                              j.at("y0").get<double>(), j.at("y1").get<double>(),
                              detail::get_or<std::int64_t>(j, "intended_n", 0));
    }
    throw Error(ErrorKind::config, "unknown distribution variant '" + variant + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("distribution spec: ") + e.what());
  }
}

}  // namespace cerm

#endif  // CERM_SYNTHDIST_HPP
