#pragma once

#include "one2all/errors.hpp"
#include "one2all/parallel.hpp"
#include "one2all/random.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace one2all {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class MetricKind { EuclideanPower, Precomputed };

/// Relaxed-triangle constant of Euclidean distance raised to `power`.
template <typename Scalar>
Scalar rho_for_power(Scalar power) {
  return power <= Scalar(1) ? Scalar(1) : std::pow(Scalar(2), power - Scalar(1));
}

/// A relaxed metric space: d(x,y) <= rho * (d(x,z) + d(z,y)).
///
/// Points are columns. Euclidean-power spaces take d-dimensional columns and
/// return ||x - y||^p. Precomputed spaces take 1-row columns holding an index
/// into a dense symmetric distance matrix.
template <typename Scalar>
class MetricSpace {
 public:
  static MetricSpace euclidean(Scalar power = Scalar(2)) {
    if (!(power > 0) || !std::isfinite(power)) throw StructuralError("euclidean power must be positive and finite");
    MetricSpace s;
    s.kind_ = MetricKind::EuclideanPower;
    s.power_ = power;
    s.rho_ = rho_for_power(power);
    return s;
  }

  /// Wraps a dense distance matrix. Symmetry, zero diagonal and non-negativity
  /// are checked on every entry; the relaxed triangle inequality on `triples`
  /// random triples (relative tolerance 1e-9).
  static MetricSpace precomputed(Matrix<Scalar> distances, Scalar rho, std::uint64_t seed = 0,
                                 Index triples = 20000) {
    const Index n = distances.rows();
    if (n == 0 || distances.cols() != n) throw StructuralError("distance matrix must be square and nonempty");
    if (!(rho >= 1)) throw StructuralError("rho must be >= 1");
    for (Index i = 0; i < n; ++i) {
      if (distances(i, i) != 0) throw StructuralError("distance matrix diagonal must be zero");
      for (Index j = i + 1; j < n; ++j) {
        const Scalar a = distances(i, j);
        if (!(a >= 0) || !std::isfinite(a)) throw StructuralError("distances must be finite and non-negative");
        if (a != distances(j, i)) throw StructuralError("distance matrix must be symmetric");
      }
    }
    Rng rng(seed);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    for (Index t = 0; t < triples; ++t) {
      const Index x = pick(rng), y = pick(rng), z = pick(rng);
      const Scalar bound = rho * (distances(x, z) + distances(z, y));
      if (distances(x, y) > bound * (1 + Scalar(1e-9)) + std::numeric_limits<Scalar>::min())
        throw StructuralError("relaxed triangle inequality violated for triple (" + std::to_string(x) + ", " +
                              std::to_string(y) + ", " + std::to_string(z) + ")");
    }
    MetricSpace s;
    s.kind_ = MetricKind::Precomputed;
    s.power_ = 1;
    s.rho_ = rho;
    s.matrix_ = std::make_shared<const Matrix<Scalar>>(std::move(distances));
    return s;
  }

  MetricKind kind() const { return kind_; }
  Scalar power() const { return power_; }
  Scalar rho() const { return rho_; }
  bool is_squared_euclidean() const { return kind_ == MetricKind::EuclideanPower && power_ == Scalar(2); }
  const Matrix<Scalar>* matrix() const { return matrix_.get(); }

  /// Dimension every point must have (rows of the point matrix).
  Index required_dim(Index data_dim) const { return kind_ == MetricKind::Precomputed ? 1 : data_dim; }

  /// Distance without dimension checks. Hot loops call this.
  template <typename A, typename B>
  Scalar operator()(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) const {
    if (kind_ == MetricKind::Precomputed)
      return (*matrix_)(static_cast<Index>(x(0)), static_cast<Index>(y(0)));
    const Scalar sq = (x - y).squaredNorm();
    if (power_ == Scalar(2)) return sq;
    if (power_ == Scalar(1)) return std::sqrt(sq);
    return std::pow(sq, power_ / 2);
  }

 private:
  MetricSpace() = default;

  MetricKind kind_ = MetricKind::EuclideanPower;
  Scalar power_ = 2;
  Scalar rho_ = 2;
  std::shared_ptr<const Matrix<Scalar>> matrix_;
};

/// d(x, y) with dimension validation.
template <typename Scalar, typename A, typename B>
Scalar distance(const MetricSpace<Scalar>& space, const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  if (x.size() != y.size()) throw StructuralError("dimension mismatch in distance");
  if (space.kind() == MetricKind::Precomputed) {
    if (x.size() != 1) throw StructuralError("precomputed spaces take 1-d index points");
    const Index n = space.matrix()->rows();
    const auto ix = static_cast<Index>(x(0)), iy = static_cast<Index>(y(0));
    if (ix < 0 || iy < 0 || ix >= n || iy >= n) throw StructuralError("point index out of range");
  }
  return space(x.derived(), y.derived());
}

/// Points (columns) with strictly positive weights.
template <typename Scalar>
class WeightedPointSet {
 public:
  WeightedPointSet(Matrix<Scalar> points, Vector<Scalar> weights)
      : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.cols() < 1) throw StructuralError("point set must be nonempty");
    if (weights_.size() != points_.cols()) throw StructuralError("weights and points differ in length");
    for (Index i = 0; i < weights_.size(); ++i)
      if (!(weights_(i) > 0) || !std::isfinite(weights_(i)))
        throw StructuralError("weights must be positive and finite (index " + std::to_string(i) + ")");
  }

  explicit WeightedPointSet(Matrix<Scalar> points)
      : WeightedPointSet(points, Vector<Scalar>::Ones(points.cols())) {}

  /// Index points 0..n-1 for a precomputed space.
  static WeightedPointSet indices(Index n, Vector<Scalar> weights) {
    Matrix<Scalar> pts(1, n);
    for (Index i = 0; i < n; ++i) pts(0, i) = static_cast<Scalar>(i);
    return WeightedPointSet(std::move(pts), std::move(weights));
  }

  Index size() const { return points_.cols(); }
  Index dim() const { return points_.rows(); }
  const Matrix<Scalar>& points() const { return points_; }
  const Vector<Scalar>& weights() const { return weights_; }
  auto point(Index i) const { return points_.col(i); }
  Scalar weight(Index i) const { return weights_(i); }
  Scalar total_weight() const {
    return reduce_sum<Scalar>(size(), [&](Index i) { return weights_(i); });
  }

 private:
  Matrix<Scalar> points_;
  Vector<Scalar> weights_;
};

/// Ordered set of centroids; exact duplicate columns are dropped (first kept).
template <typename Scalar>
class CentroidSet {
 public:
  explicit CentroidSet(const Matrix<Scalar>& centroids) {
    if (centroids.cols() < 1) throw StructuralError("centroid set must be nonempty");
    std::vector<Index> keep;
    for (Index j = 0; j < centroids.cols(); ++j) {
      bool dup = false;
      for (Index kept : keep)
        if (centroids.col(kept) == centroids.col(j)) {
          dup = true;
          break;
        }
      if (!dup) keep.push_back(j);
    }
    centroids_.resize(centroids.rows(), static_cast<Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) centroids_.col(static_cast<Index>(j)) = centroids.col(keep[j]);
  }

  Index size() const { return centroids_.cols(); }
  Index dim() const { return centroids_.rows(); }
  const Matrix<Scalar>& matrix() const { return centroids_; }
  auto centroid(Index j) const { return centroids_.col(j); }

  /// First `count` centroids.
  CentroidSet prefix(Index count) const { return CentroidSet(centroids_.leftCols(count)); }

 private:
  Matrix<Scalar> centroids_;
};

/// Nearest-centroid partition: owner[x] is the lowest-index centroid at distance dist[x].
template <typename Scalar>
struct Assignment {
  std::vector<Index> owner;
  Vector<Scalar> dist;

  Index size() const { return dist.size(); }
};

namespace detail {

template <typename Scalar>
void check_dims(const MetricSpace<Scalar>& space, Index data_dim, Index centroid_dim) {
  if (data_dim != centroid_dim) throw StructuralError("dimension mismatch between points and centroids");
  if (space.kind() == MetricKind::Precomputed && data_dim != 1)
    throw StructuralError("precomputed spaces take 1-d index points");
}

}  // namespace detail

template <typename Scalar>
Assignment<Scalar> assign(const MetricSpace<Scalar>& space, const Matrix<Scalar>& points,
                          const CentroidSet<Scalar>& Q) {
  detail::check_dims(space, points.rows(), Q.dim());
  const Index n = points.cols(), k = Q.size();
  Assignment<Scalar> a;
  a.owner.assign(static_cast<std::size_t>(n), 0);
  a.dist.resize(n);
  for_each_chunk(n, [&](Index b, Index e, Index) {
    for (Index i = b; i < e; ++i) {
      Index best = 0;
      Scalar bestd = space(points.col(i), Q.centroid(0));
      for (Index j = 1; j < k; ++j) {
        const Scalar dj = space(points.col(i), Q.centroid(j));
        if (dj < bestd) {
          bestd = dj;
          best = j;
        }
      }
      a.owner[static_cast<std::size_t>(i)] = best;
      a.dist(i) = bestd;
    }
  });
  return a;
}

template <typename Scalar>
Assignment<Scalar> assign(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X,
                          const CentroidSet<Scalar>& Q) {
  return assign(space, X.points(), Q);
}

/// sum_x w_x * dist[x], compensated, fixed reduction order.
template <typename Scalar>
Scalar weighted_cost(const Vector<Scalar>& weights, const Vector<Scalar>& dist) {
  return reduce_sum<Scalar>(dist.size(), [&](Index i) { return weights(i) * dist(i); });
}

/// Clustering cost V(Q | X, w).
template <typename Scalar>
Scalar cost(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X, const CentroidSet<Scalar>& Q) {
  detail::check_dims(space, X.dim(), Q.dim());
  const Index k = Q.size();
  return reduce_sum<Scalar>(X.size(), [&](Index i) {
    Scalar bestd = space(X.point(i), Q.centroid(0));
    for (Index j = 1; j < k; ++j) bestd = std::min(bestd, space(X.point(i), Q.centroid(j)));
    return X.weight(i) * bestd;
  });
}

}  // namespace one2all
