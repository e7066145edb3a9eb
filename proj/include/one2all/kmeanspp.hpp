#pragma once

#include "one2all/core.hpp"

#include <cstdint>
#include <vector>

namespace one2all {

/// Ordered kmeans++ centroids m_1..m_l with prefix costs v_i = V({m_1..m_i}).
template <typename Scalar>
struct KmeansPPTrace {
  Matrix<Scalar> centroids;         // d x l, column i-1 holds m_i
  std::vector<Index> indices;       // index in X of each m_i
  std::vector<Scalar> prefixCosts;  // v_1..v_l
  Assignment<Scalar> finalAssignment;
  std::uint64_t seed = 0;
  Index requested = 0;
  bool truncated = false;  // stopped early because every point was at distance 0

  Index length() const { return centroids.cols(); }
  Scalar cost_at(Index i) const { return prefixCosts[static_cast<std::size_t>(i - 1)]; }
  CentroidSet<Scalar> prefix(Index i) const { return CentroidSet<Scalar>(centroids.leftCols(i)); }
};

namespace detail {

/// Index drawn with probability mass(i)/total using one uniform against the
/// running prefix sum. Zero-mass entries are never returned.
template <typename Scalar, typename Mass>
Index draw_proportional(Index n, Mass&& mass, Scalar total, Rng& rng) {
  const Scalar target = static_cast<Scalar>(rng.uniform_open0()) * total;
  Scalar running = 0;
  Index last_positive = -1;
  for (Index i = 0; i < n; ++i) {
    const Scalar m = mass(i);
    if (m <= 0) continue;
    running += m;
    last_positive = i;
    if (running >= target) return i;
  }
  return last_positive;
}

/// Folds centroid `j` (column `c`) into a running nearest-centroid assignment.
template <typename Scalar, typename Col>
void absorb_centroid(const MetricSpace<Scalar>& space, const Matrix<Scalar>& points, const Col& c, Index j,
                     Assignment<Scalar>& a) {
  for_each_chunk(points.cols(), [&](Index b, Index e, Index) {
    for (Index i = b; i < e; ++i) {
      const Scalar d = space(points.col(i), c);
      if (d < a.dist(i)) {
        a.dist(i) = d;
        a.owner[static_cast<std::size_t>(i)] = j;
      }
    }
  });
}

template <typename Scalar, typename Col>
Assignment<Scalar> single_centroid_assignment(const MetricSpace<Scalar>& space, const Matrix<Scalar>& points,
                                              const Col& c) {
  Assignment<Scalar> a;
  a.owner.assign(static_cast<std::size_t>(points.cols()), 0);
  a.dist.resize(points.cols());
  for_each_chunk(points.cols(), [&](Index b, Index e, Index) {
    for (Index i = b; i < e; ++i) a.dist(i) = space(points.col(i), c);
  });
  return a;
}

}  // namespace detail

/// kmeans++ (D^p) seeding of length `ell`. The first centroid is drawn with
/// probability proportional to w_x, each later one proportional to
/// w_x * d(x, prefix). Distances to the prefix are maintained incrementally,
/// so each step costs n distance evaluations.
///
/// `on_prefix(i, assignment, v_i)` is called after each centroid with the
/// assignment to the current prefix; it lets callers reuse the pass.
template <typename Scalar, typename OnPrefix>
KmeansPPTrace<Scalar> run_trace(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X, Index ell,
                                std::uint64_t seed, OnPrefix&& on_prefix) {
  if (ell < 1) throw StructuralError("kmeans++ trace length must be >= 1");
  if (ell > X.size()) throw StructuralError("kmeans++ trace length exceeds number of points");
  detail::check_dims(space, X.dim(), X.dim());

  KmeansPPTrace<Scalar> trace;
  trace.seed = seed;
  trace.requested = ell;
  trace.centroids.resize(X.dim(), ell);
  Rng rng(seed);
  const auto& pts = X.points();
  const auto& w = X.weights();

  const Index first = detail::draw_proportional<Scalar>(X.size(), [&](Index i) { return w(i); }, X.total_weight(), rng);
  trace.indices.push_back(first);
  trace.centroids.col(0) = pts.col(first);
  Assignment<Scalar> a = detail::single_centroid_assignment(space, pts, pts.col(first));
  trace.prefixCosts.push_back(weighted_cost(w, a.dist));
  on_prefix(Index(1), a, trace.prefixCosts.back());

  for (Index i = 1; i < ell; ++i) {
    const Scalar total = trace.prefixCosts.back();
    if (!(total > 0)) {
      trace.truncated = true;
      break;
    }
    const Index next = detail::draw_proportional<Scalar>(X.size(), [&](Index x) { return w(x) * a.dist(x); }, total, rng);
    trace.indices.push_back(next);
    trace.centroids.col(i) = pts.col(next);
    detail::absorb_centroid(space, pts, pts.col(next), i, a);
    trace.prefixCosts.push_back(weighted_cost(w, a.dist));
    on_prefix(i + 1, a, trace.prefixCosts.back());
  }
  trace.centroids.conservativeResize(Eigen::NoChange, static_cast<Index>(trace.indices.size()));
  trace.finalAssignment = std::move(a);
  return trace;
}

template <typename Scalar>
KmeansPPTrace<Scalar> run_trace(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X, Index ell,
                                std::uint64_t seed) {
  return run_trace(space, X, ell, seed, [](Index, const Assignment<Scalar>&, Scalar) {});
}

/// Replays the assignments of X to every prefix of `centroids`, calling
/// `visit(i, assignment)` for i = 1..cols. O(n) distance evaluations per prefix.
template <typename Scalar, typename Visit>
void for_each_prefix(const MetricSpace<Scalar>& space, const Matrix<Scalar>& points, const Matrix<Scalar>& centroids,
                     Visit&& visit) {
  if (centroids.cols() < 1) return;
  detail::check_dims(space, points.rows(), centroids.rows());
  Assignment<Scalar> a = detail::single_centroid_assignment(space, points, centroids.col(0));
  visit(Index(1), a);
  for (Index j = 1; j < centroids.cols(); ++j) {
    detail::absorb_centroid(space, points, centroids.col(j), j, a);
    visit(j + 1, a);
  }
}

}  // namespace one2all
