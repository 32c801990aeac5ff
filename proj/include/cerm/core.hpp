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

#ifndef CERM_CORE_HPP
#define CERM_CORE_HPP

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cerm {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr const char* kVersion = "0.3.0";

enum class ErrorKind {
  invalid_dimension,
  dimension_mismatch,
  domain,
  scale_guard,
  small_n,
  atom_collision,
  no_fixed_point,
  insufficient_points,
  config,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_dimension: return "invalid-dimension";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
    case ErrorKind::domain: return "domain";
    case ErrorKind::scale_guard: return "scale-guard";
    case ErrorKind::small_n: return "small-n";
    case ErrorKind::atom_collision: return "atom-collision";
    case ErrorKind::no_fixed_point: return "no-fixed-point";
    case ErrorKind::insufficient_points: return "insufficient-points";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) throw Error(kind, what);
}

/// Monte-Carlo or exactly summed value. `exact` implies a zero standard error.
struct RiskEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n_samples = 0;
  bool exact = false;

  static RiskEstimate exact_value(double v) { return {v, 0.0, 0, true}; }
};

/// max(ln x, 1).
inline double log_plus(double x) {
  require(x > 0.0 && !std::isnan(x), ErrorKind::domain, "log_plus needs x > 0");
  return std::max(std::log(x), 1.0);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed `index` of `master`; distinct indices give distinct streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL));
}

inline double sign_of(double z) { return z >= 0.0 ? 1.0 : -1.0; }

/// Mean and standard error (sample std / sqrt(n)) of a sequence.
inline RiskEstimate mean_with_error(const std::vector<double>& xs) {
  RiskEstimate r;
  r.n_samples = static_cast<std::int64_t>(xs.size());
  if (xs.empty()) return r;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  r.value = mean;
  if (xs.size() > 1) {
    r.std_error = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return r;
}

/// Streaming mean/variance accumulator (Welford), merged in a fixed order.
class MeanAccumulator {
 public:
  void add(double x) {
    ++n_;
    double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  void merge(const MeanAccumulator& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
      *this = other;
      return;
    }
    const double total = static_cast<double>(n_ + other.n_);
    const double delta = other.mean_ - mean_;
    mean_ += delta * static_cast<double>(other.n_) / total;
    m2_ += other.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(other.n_) / total;
    n_ += other.n_;
  }

  std::int64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }

  RiskEstimate estimate() const {
    RiskEstimate r;
    r.value = mean_;
    r.n_samples = n_;
    r.std_error = n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    return r;
  }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Weighted least-squares line y = intercept + slope * x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
  int points = 0;
};

/// Minimizes sum w_i (y_i - a - b x_i)^2. The slope standard error is scaled by
/// the weighted residual variance and the interval uses Student t with
/// points - 2 degrees of freedom.
inline LineFit weighted_line_fit(const std::vector<double>& x, const std::vector<double>& y,
                                 const std::vector<double>& w) {
  require(x.size() == y.size() && x.size() == w.size(), ErrorKind::dimension_mismatch, "fit inputs differ in length");
  require(x.size() >= 2, ErrorKind::insufficient_points, "line fit needs at least two points");
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(w[i] > 0.0 && std::isfinite(w[i]), ErrorKind::domain, "fit weights must be positive");
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double xm = sx / sw, ym = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - xm) * (x[i] - xm);
    sxy += w[i] * (x[i] - xm) * (y[i] - ym);
  }
  require(sxx > 0.0, ErrorKind::insufficient_points, "line fit needs at least two distinct x values");
  LineFit fit;
  fit.points = static_cast<int>(x.size());
  fit.slope = sxy / sxx;
  fit.intercept = ym - fit.slope * xm;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += w[i] * r * r;
    }
    const double dof = static_cast<double>(x.size() - 2);
    fit.slope_se = std::sqrt(rss / dof / sxx);
    const double tq = boost::math::quantile(boost::math::students_t(dof), 0.975);
    fit.ci95_low = fit.slope - tq * fit.slope_se;
    fit.ci95_high = fit.slope + tq * fit.slope_se;
  } else {
    fit.slope_se = std::numeric_limits<double>::quiet_NaN();
    fit.ci95_low = -std::numeric_limits<double>::infinity();
    fit.ci95_high = std::numeric_limits<double>::infinity();
  }
  return fit;
}

/// Thread budget: CERM_THREADS if set, else the hardware concurrency.
inline int thread_budget() {
  if (const char* env = std::getenv("CERM_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results must be
/// written to per-index slots so the outcome does not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t count, int threads, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace cerm

#endif  // CERM_CORE_HPP
