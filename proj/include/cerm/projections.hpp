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

#ifndef CERM_PROJECTIONS_HPP
#define CERM_PROJECTIONS_HPP

#include "cerm/core.hpp"

#include <Eigen/Sparse>

#include <optional>
#include <random>
#include <string>

namespace cerm {

enum class ProjectionFamily { gaussian, rademacher, achlioptas_sparse };

inline const char* to_string(ProjectionFamily f) {
  switch (f) {
    case ProjectionFamily::gaussian: return "gaussian";
    case ProjectionFamily::rademacher: return "rademacher";
    case ProjectionFamily::achlioptas_sparse: return "achlioptas_sparse";
  }
  return "gaussian";
}

inline ProjectionFamily projection_family_from_string(const std::string& s) {
  if (s == "gaussian") return ProjectionFamily::gaussian;
  if (s == "rademacher") return ProjectionFamily::rademacher;
  if (s == "achlioptas_sparse" || s == "achlioptas") return ProjectionFamily::achlioptas_sparse;
  throw Error(ErrorKind::config, "unknown projection family '" + s + "'");
}

/// Ambient dimension at which achlioptas maps switch to compressed storage.
inline constexpr int kSparseStorageThreshold = 10000;

/// Identity of a map. Maps are persisted by descriptor, never as raw matrices.
struct ProjectionDescriptor {
  ProjectionFamily family = ProjectionFamily::gaussian;
  int k = 1;
  int d = 1;
  std::uint64_t seed = 0;

  bool operator==(const ProjectionDescriptor&) const = default;
};

/// A k x d linear compression drawn from one of the i.i.d.-entry families.
/// Immutable after construction; entries are scaled so E|Ax|^2 = |x|^2.
class ProjectionMap {
 public:
  using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  /// Wraps an explicit k x d matrix; the descriptor seed carries no meaning.
  static ProjectionMap from_matrix(const Matrix& m, ProjectionFamily tag = ProjectionFamily::gaussian) {
    require(m.rows() >= 1 && m.cols() >= 1, ErrorKind::invalid_dimension, "projection needs k >= 1 and d >= 1");
    require(m.allFinite(), ErrorKind::domain, "projection entries must be finite");
    ProjectionMap map;
    map.desc_ = {tag, static_cast<int>(m.rows()), static_cast<int>(m.cols()), 0};
    map.dense_ = m;
    return map;
  }

  const ProjectionDescriptor& descriptor() const { return desc_; }
  ProjectionFamily family() const { return desc_.family; }
  int k() const { return desc_.k; }
  int d() const { return desc_.d; }
  std::uint64_t seed() const { return desc_.seed; }
  bool is_sparse() const { return sparse_.has_value(); }

  /// Dense k x d view (materialized on demand for sparse storage).
  Matrix matrix() const {
    if (sparse_) return Matrix(*sparse_);
    return dense_;
  }

  /// Row j of the output is matrix * (row j of X).
  Matrix apply(const Matrix& X) const {
    require(X.cols() == desc_.d, ErrorKind::dimension_mismatch,
            "input has " + std::to_string(X.cols()) + " columns, map expects " + std::to_string(desc_.d));
    if (sparse_) return Matrix(X * sparse_->transpose());
    // Row by row so each output row is bitwise independent of the batch it came in.
    Matrix out(X.rows(), desc_.k);
    for (Eigen::Index j = 0; j < X.rows(); ++j) out.row(j).noalias() = (dense_ * X.row(j).transpose()).transpose();
    return out;
  }

  Vector apply_vector(const Vector& x) const {
    require(x.size() == desc_.d, ErrorKind::dimension_mismatch, "vector length does not match map");
    if (sparse_) return (*sparse_) * x;
    return dense_ * x;
  }

 private:
  friend ProjectionMap sample_projection(ProjectionFamily, int, int, std::uint64_t);

  ProjectionDescriptor desc_;
  Matrix dense_;
  std::optional<SparseRows> sparse_;
};

/// Deterministic in (family, k, d, seed).
inline ProjectionMap sample_projection(ProjectionFamily family, int k, int d, std::uint64_t seed) {
  require(k >= 1 && d >= 1, ErrorKind::invalid_dimension,
          "projection needs k >= 1 and d >= 1 (got k=" + std::to_string(k) + ", d=" + std::to_string(d) + ")");
  ProjectionMap map;
  map.desc_ = {family, k, d, seed};
  std::mt19937_64 rng(splitmix64(seed ^ 0x5851f42d4c957f2dULL));
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));

  switch (family) {
    case ProjectionFamily::gaussian: {
      std::normal_distribution<double> normal(0.0, scale);
      map.dense_.resize(k, d);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < d; ++j) map.dense_(i, j) = normal(rng);
      break;
    }
    case ProjectionFamily::rademacher: {
      map.dense_.resize(k, d);
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < d; j += 64) {
          std::uint64_t bits = rng();
          for (int b = 0; b < 64 && j + b < d; ++b) map.dense_(i, j + b) = ((bits >> b) & 1ULL) ? scale : -scale;
        }
      }
      break;
    }
    case ProjectionFamily::achlioptas_sparse: {
      const double mag = std::sqrt(3.0 / static_cast<double>(k));
      std::uniform_int_distribution<int> die(0, 5);
      auto draw = [&] {
        const int face = die(rng);
        return face == 0 ? -mag : (face == 5 ? mag : 0.0);
      };
      if (d >= kSparseStorageThreshold) {
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(static_cast<std::size_t>(k) * static_cast<std::size_t>(d) / 3 + 16);
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < d; ++j)
            if (double v = draw(); v != 0.0) triplets.emplace_back(i, j, v);
        ProjectionMap::SparseRows sp(k, d);
        sp.setFromTriplets(triplets.begin(), triplets.end());
        map.sparse_ = std::move(sp);
      } else {
        map.dense_.resize(k, d);
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < d; ++j) map.dense_(i, j) = draw();
      }
      break;
    }
  }
  return map;
}

inline ProjectionMap sample_projection(const ProjectionDescriptor& desc) {
  return sample_projection(desc.family, desc.k, desc.d, desc.seed);
}

inline Matrix apply(const ProjectionMap& map, const Matrix& X) { return map.apply(X); }

/// Fraction of trials in which some pair of rows of `points` has its squared
/// distance distorted beyond the factor (1 +/- epsilon). Zero-distance pairs pass.
inline double empirical_jl_check(ProjectionFamily family, const Matrix& points, double epsilon, int k, int trials,
                                 std::uint64_t seed) {
  require(points.rows() >= 2, ErrorKind::invalid_dimension, "jl check needs at least two points");
  require(epsilon > 0.0 && epsilon < 1.0, ErrorKind::domain, "epsilon must lie in (0,1)");
  require(trials >= 1, ErrorKind::domain, "trials must be positive");
  require(points.allFinite(), ErrorKind::domain, "points must be finite");
  const Eigen::Index q = points.rows();

  std::vector<double> base;
  base.reserve(static_cast<std::size_t>(q * (q - 1) / 2));
  for (Eigen::Index a = 0; a < q; ++a)
    for (Eigen::Index b = a + 1; b < q; ++b) base.push_back((points.row(a) - points.row(b)).squaredNorm());

  int failures = 0;
  for (int t = 0; t < trials; ++t) {
    const ProjectionMap map = sample_projection(family, k, static_cast<int>(points.cols()), derive_seed(seed, static_cast<std::uint64_t>(t)));
    const Matrix projected = map.apply(points);
    std::size_t idx = 0;
    bool violated = false;
    for (Eigen::Index a = 0; a < q && !violated; ++a) {
      for (Eigen::Index b = a + 1; b < q; ++b, ++idx) {
        const double orig = base[idx];
        if (orig == 0.0) continue;
        const double comp = (projected.row(a) - projected.row(b)).squaredNorm();
        if (comp < (1.0 - epsilon) * orig || comp > (1.0 + epsilon) * orig) {
          violated = true;
          break;
        }
      }
    }
    if (violated) ++failures;
  }
  return static_cast<double>(failures) / static_cast<double>(trials);
}

/// Target dimension ceil(c_jl * ln(q / delta) / epsilon^2).
inline int jl_target_dimension(int q, double delta, double epsilon, double c_jl = 8.0) {
  require(q >= 1 && delta > 0.0 && delta < 1.0 && epsilon > 0.0 && epsilon < 1.0, ErrorKind::domain,
          "jl_target_dimension arguments out of range");
  return static_cast<int>(std::ceil(c_jl * std::log(static_cast<double>(q) / delta) / (epsilon * epsilon)));
}

}  // namespace cerm

#endif  // CERM_PROJECTIONS_HPP
