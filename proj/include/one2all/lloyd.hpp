#pragma once

#include "one2all/core.hpp"
#include "one2all/kmeanspp.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

namespace one2all {

/// Best-of-`restarts` kmeans++ seeding refined by `lloydIters` Lloyd iterations.
struct BaseClustererConfig {
  Index k = 1;
  int restarts = 5;
  int lloydIters = 20;
  std::uint64_t seed = 0;
};

/// Any procedure mapping a weighted point set to k centroids. It must honor
/// the weights, since sampled points carry inverse-probability weights.
template <typename Scalar>
using BaseClusterer =
    std::function<CentroidSet<Scalar>(const MetricSpace<Scalar>&, const WeightedPointSet<Scalar>&, Index k, std::uint64_t seed)>;

/// One Lloyd iteration: every centroid moves to the weighted mean of its cell.
/// Centroids whose cell is empty are re-seeded at the points currently
/// farthest from their owners. Squared Euclidean only.
template <typename Scalar>
CentroidSet<Scalar> lloyd_step(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X,
                               const CentroidSet<Scalar>& Q) {
  if (!space.is_squared_euclidean()) throw UnsupportedOperation("Lloyd iterations require squared Euclidean distance");
  const Assignment<Scalar> a = assign(space, X, Q);
  const Index k = Q.size(), d = X.dim();
  Matrix<Scalar> sums = Matrix<Scalar>::Zero(d, k);
  Vector<Scalar> mass = Vector<Scalar>::Zero(k);
  for (Index i = 0; i < X.size(); ++i) {
    const Index o = a.owner[static_cast<std::size_t>(i)];
    sums.col(o) += X.weight(i) * X.point(i);
    mass(o) += X.weight(i);
  }
  std::vector<Index> empty;
  for (Index j = 0; j < k; ++j) {
    if (mass(j) > 0)
      sums.col(j) /= mass(j);
    else
      empty.push_back(j);
  }
  if (!empty.empty()) {
    std::vector<Index> order(static_cast<std::size_t>(X.size()));
    std::iota(order.begin(), order.end(), Index(0));
    const std::size_t take = std::min(empty.size(), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](Index l, Index r) { return a.dist(l) > a.dist(r) || (a.dist(l) == a.dist(r) && l < r); });
    for (std::size_t e = 0; e < take; ++e) sums.col(empty[e]) = X.point(order[e]);
  }
  return CentroidSet<Scalar>(sums);
}

template <typename Scalar>
struct BaseClusterResult {
  CentroidSet<Scalar> centroids;
  Scalar cost;
  Scalar initCost;                 // cost of the chosen kmeans++ initialization
  std::vector<Scalar> costHistory; // cost after initialization and after each Lloyd step
};

template <typename Scalar>
BaseClusterResult<Scalar> base_cluster(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X,
                                       const BaseClustererConfig& cfg) {
  if (cfg.k < 1 || cfg.k > X.size()) throw StructuralError("base clusterer needs 1 <= k <= n");
  if (cfg.restarts < 1 || cfg.lloydIters < 0) throw StructuralError("restarts must be >= 1 and lloydIters >= 0");
  if (cfg.lloydIters > 0 && !space.is_squared_euclidean())
    throw UnsupportedOperation("Lloyd iterations require squared Euclidean distance");

  KmeansPPTrace<Scalar> best;
  for (int r = 0; r < cfg.restarts; ++r) {
    auto trace = run_trace(space, X, cfg.k, derive_seed(cfg.seed, static_cast<std::uint64_t>(r)));
    if (r == 0 || trace.prefixCosts.back() < best.prefixCosts.back()) best = std::move(trace);
  }
  CentroidSet<Scalar> Q(best.centroids);
  Scalar v = best.prefixCosts.back();
  BaseClusterResult<Scalar> out{Q, v, v, {v}};
  for (int it = 0; it < cfg.lloydIters && v > 0; ++it) {
    CentroidSet<Scalar> next = lloyd_step(space, X, Q);
    const bool moved = next.size() != Q.size() || next.matrix() != Q.matrix();
    Q = std::move(next);
    v = cost(space, X, Q);
    out.costHistory.push_back(v);
    if (!moved) break;
  }
  out.centroids = std::move(Q);
  out.cost = v;
  return out;
}

/// The default base clusterer wrapped as a BaseClusterer.
template <typename Scalar>
BaseClusterer<Scalar> lloyd_clusterer(int restarts = 5, int lloydIters = 20) {
  return [restarts, lloydIters](const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X, Index k,
                                std::uint64_t seed) {
    BaseClustererConfig cfg{std::min(k, X.size()), restarts, lloydIters, seed};
    return base_cluster(space, X, cfg).centroids;
  };
}

}  // namespace one2all
