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

#ifndef CERM_LOSSES_HPP
#define CERM_LOSSES_HPP

#include "cerm/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>

namespace cerm {

enum class LossKind { zero_one, squared, kl };
enum class Combiner { mode, mean };

inline const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::zero_one: return "zero_one";
    case LossKind::squared: return "squared";
    case LossKind::kl: return "kl";
  }
  return "zero_one";
}

inline LossKind loss_kind_from_string(const std::string& s) {
  if (s == "zero_one") return LossKind::zero_one;
  if (s == "squared") return LossKind::squared;
  if (s == "kl") return LossKind::kl;
  throw Error(ErrorKind::config, "unknown loss kind '" + s + "'");
}

/// A loss together with the constants that certify the learning guarantees:
/// bound B, Lipschitz constant, strong mid-point convexity H, quasi-convexity
/// constant and the ensemble combiner it is quasi-convex for.
struct LossSpec {
  LossKind kind = LossKind::zero_one;
  double beta = 1.0;
  double B = 1.0;
  double lambda_lip = 0.5;
  double H = 0.0;
  double lambda_qc = 2.0;
  Combiner combiner = Combiner::mode;
};

inline LossSpec make_loss(LossKind kind, double beta = 1.0) {
  LossSpec s;
  s.kind = kind;
  switch (kind) {
    case LossKind::zero_one:
      s.beta = 1.0;
      s.B = 1.0;
      s.lambda_lip = 0.5;
      s.H = 0.0;
      s.lambda_qc = 2.0;
      s.combiner = Combiner::mode;
      break;
    case LossKind::squared:
      require(beta > 0.0 && std::isfinite(beta), ErrorKind::domain, "squared loss needs beta > 0");
      s.beta = beta;
      s.B = 4.0 * beta * beta;
      s.lambda_lip = 4.0 * beta;
      s.H = 2.0;
      s.lambda_qc = 1.0;
      s.combiner = Combiner::mean;
      break;
    case LossKind::kl: {
      require(beta > 0.0 && std::isfinite(beta), ErrorKind::domain, "kl loss needs beta > 0");
      s.beta = beta;
      s.B = beta + std::numbers::ln2;
      s.lambda_lip = 1.0;
      // e^b / (1 + e^b)^2; the mirrored form e^-b / (1 + e^-b)^2 once e^b would overflow.
      if (beta < 300.0) {
        const double e = std::exp(beta);
        s.H = e / ((1.0 + e) * (1.0 + e));
      } else {
        const double e = std::exp(-beta);
        s.H = e / ((1.0 + e) * (1.0 + e));
      }
      s.lambda_qc = 1.0;
      s.combiner = Combiner::mean;
      break;
    }
  }
  return s;
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double logistic(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

namespace detail {

inline void check_binary(double v, const char* what) {
  require(v == 1.0 || v == -1.0, ErrorKind::domain, std::string(what) + " must be -1 or +1");
}

inline void check_range(double v, double beta, const char* what) {
  require(v >= -beta && v <= beta, ErrorKind::domain, std::string(what) + " outside [-beta, beta]");
}

}  // namespace detail

/// Loss value in [0, B]. The kl loss acts on logits: kl(pi(v), y) = log(1 + exp(-(2y-1) v)).
inline double eval(const LossSpec& loss, double v, double y) {
  switch (loss.kind) {
    case LossKind::zero_one:
      detail::check_binary(v, "prediction");
      detail::check_binary(y, "label");
      return v == y ? 0.0 : 1.0;
    case LossKind::squared:
      detail::check_range(v, loss.beta, "prediction");
      detail::check_range(y, loss.beta, "label");
      return (v - y) * (v - y);
    case LossKind::kl:
      detail::check_range(v, loss.beta, "prediction");
      require(y == 0.0 || y == 1.0, ErrorKind::domain, "kl label must be 0 or 1");
      return softplus(-(2.0 * y - 1.0) * v);
  }
  return 0.0;
}

/// d/dv of the loss (squared and kl only).
inline double derivative(const LossSpec& loss, double v, double y) {
  switch (loss.kind) {
    case LossKind::squared: return 2.0 * (v - y);
    case LossKind::kl: return logistic(v) - y;
    case LossKind::zero_one: break;
  }
  throw Error(ErrorKind::domain, "zero_one loss has no derivative");
}

/// 4 * lambda_lip^2 / H; undefined for losses without strong convexity.
inline double bernstein_constant(const LossSpec& loss) {
  require(loss.H > 0.0, ErrorKind::domain, "bernstein constant undefined when H = 0 (zero_one loss)");
  return 4.0 * loss.lambda_lip * loss.lambda_lip / loss.H;
}

/// A label outcome with its conditional probability.
struct LabelMass {
  double y = 0.0;
  double p = 0.0;
};

/// E[L(v, Y)] under a finite conditional label law.
inline double conditional_risk(const LossSpec& loss, double v, std::span<const LabelMass> labels) {
  double r = 0.0;
  for (const auto& l : labels)
    if (l.p > 0.0) r += l.p * eval(loss, v, l.y);
  return r;
}

/// Minimizer over the action space of E[L(v, Y)]; ties go to +1 for zero_one.
inline double bayes_action(const LossSpec& loss, std::span<const LabelMass> labels) {
  switch (loss.kind) {
    case LossKind::zero_one: {
      double p_pos = 0.0, p_neg = 0.0;
      for (const auto& l : labels) (l.y > 0.0 ? p_pos : p_neg) += l.p;
      return p_pos >= p_neg ? 1.0 : -1.0;
    }
    case LossKind::squared: {
      double mean = 0.0, mass = 0.0;
      for (const auto& l : labels) {
        mean += l.p * l.y;
        mass += l.p;
      }
      if (mass > 0.0) mean /= mass;
      return std::clamp(mean, -loss.beta, loss.beta);
    }
    case LossKind::kl: {
      double p1 = 0.0, mass = 0.0;
      for (const auto& l : labels) {
        if (l.y == 1.0) p1 += l.p;
        mass += l.p;
      }
      if (mass > 0.0) p1 /= mass;
      if (p1 <= 0.0) return -loss.beta;
      if (p1 >= 1.0) return loss.beta;
      return std::clamp(std::log(p1 / (1.0 - p1)), -loss.beta, loss.beta);
    }
  }
  return 0.0;
}

/// Combines member predictions under the loss' combiner rule.
inline double combine(const LossSpec& loss, std::span<const double> votes) {
  if (loss.combiner == Combiner::mode) {
    double s = 0.0;
    for (double v : votes) s += v;
    return sign_of(s);
  }
  double s = 0.0;
  double lo = votes.front(), hi = votes.front();
  for (double v : votes) {
    s += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // Rounding in the sum must not push the average outside the members' hull.
  return std::clamp(s / static_cast<double>(votes.size()), lo, hi);
}

}  // namespace cerm

#endif  // CERM_LOSSES_HPP
