#pragma once

#include "one2all/core.hpp"
#include "one2all/kmeanspp.hpp"
#include "one2all/sampling.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace one2all {

/// Smallest input value D with sum_{v <= D} w >= W/2 and sum_{v >= D} w >= W/2.
template <typename Scalar>
Scalar weighted_median(std::span<const Scalar> values, std::span<const Scalar> weights) {
  if (values.empty()) throw StructuralError("weighted median of an empty set");
  if (values.size() != weights.size()) throw StructuralError("values and weights differ in length");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  // below[j]: mass of values <= the j-th distinct value; above[j]: mass >= it.
  const std::size_t m = order.size();
  std::vector<Scalar> prefix(m + 1, 0), suffix(m + 1, 0);
  for (std::size_t j = 0; j < m; ++j) prefix[j + 1] = prefix[j] + weights[order[j]];
  for (std::size_t j = m; j-- > 0;) suffix[j] = suffix[j + 1] + weights[order[j]];
  const Scalar half = prefix[m] / 2;
  for (std::size_t j = 0; j < m;) {
    std::size_t end = j;
    while (end < m && values[order[end]] == values[order[j]]) ++end;
    if (prefix[end] >= half && suffix[j] >= half) return values[order[j]];
    j = end;
  }
  return values[order[m - 1]];
}

/// One2all base probabilities for a centroid set M:
///   pi_x = min{1, max{2 rho w_x d(x,M) / V(M), 8 rho^2 w_x / w(X_m)}},  x in X_m.
/// Centroids with empty cells are dropped; they do not change V(M) or pi.
template <typename Scalar>
struct One2AllProbabilities {
  Vector<Scalar> pi;
  Matrix<Scalar> centroids;        // M after dropping empty cells
  std::vector<Index> owner;        // cell of each point, indexing `centroids`
  Scalar costM = 0;
  Vector<Scalar> clusterWeights;   // w(X_m)
  Vector<Scalar> medians;          // Delta_m, weighted median of d(x, m) over X_m
  Scalar rho = 1;
  Index droppedCentroids = 0;

  Index size() const { return centroids.cols(); }
  Scalar overhead() const { return pi.sum(); }
  Scalar overhead_bound() const { return 8 * rho * rho * static_cast<Scalar>(size()) + 2 * rho; }
};

/// Builds the probabilities from an existing assignment of X to the columns of M.
template <typename Scalar>
One2AllProbabilities<Scalar> one2all_from_assignment(const MetricSpace<Scalar>& space,
                                                     const WeightedPointSet<Scalar>& X, const Matrix<Scalar>& M,
                                                     const Assignment<Scalar>& a) {
  const Index n = X.size(), k = M.cols();
  if (a.size() != n) throw StructuralError("assignment does not cover the point set");
  std::vector<CompensatedSum<Scalar>> mass(static_cast<std::size_t>(k));
  std::vector<Index> count(static_cast<std::size_t>(k), 0);
  for (Index i = 0; i < n; ++i) {
    const auto o = static_cast<std::size_t>(a.owner[static_cast<std::size_t>(i)]);
    mass[o].add(X.weight(i));
    ++count[o];
  }

  One2AllProbabilities<Scalar> out;
  out.rho = space.rho();
  std::vector<Index> remap(static_cast<std::size_t>(k), -1);
  Index kept = 0;
  for (Index j = 0; j < k; ++j)
    if (count[static_cast<std::size_t>(j)] > 0) remap[static_cast<std::size_t>(j)] = kept++;
  out.droppedCentroids = k - kept;
  out.centroids.resize(M.rows(), kept);
  out.clusterWeights.resize(kept);
  for (Index j = 0; j < k; ++j) {
    const Index r = remap[static_cast<std::size_t>(j)];
    if (r < 0) continue;
    out.centroids.col(r) = M.col(j);
    out.clusterWeights(r) = mass[static_cast<std::size_t>(j)].value();
  }
  out.owner.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    out.owner[static_cast<std::size_t>(i)] = remap[static_cast<std::size_t>(a.owner[static_cast<std::size_t>(i)])];
  out.costM = weighted_cost(X.weights(), a.dist);

  // Per-cell weighted medians.
  std::vector<std::vector<Scalar>> cellDist(static_cast<std::size_t>(kept)), cellW(static_cast<std::size_t>(kept));
  for (Index i = 0; i < n; ++i) {
    const auto o = static_cast<std::size_t>(out.owner[static_cast<std::size_t>(i)]);
    cellDist[o].push_back(a.dist(i));
    cellW[o].push_back(X.weight(i));
  }
  out.medians.resize(kept);
  for (Index j = 0; j < kept; ++j)
    out.medians(j) = weighted_median<Scalar>(cellDist[static_cast<std::size_t>(j)], cellW[static_cast<std::size_t>(j)]);

  const Scalar rho = out.rho;
  const Scalar first = out.costM > 0 ? 2 * rho / out.costM : Scalar(0);
  const Scalar second = 8 * rho * rho;
  out.pi.resize(n);
  for_each_chunk(n, [&](Index b, Index e, Index) {
    for (Index i = b; i < e; ++i) {
      const Scalar w = X.weight(i);
      const Scalar t1 = first * w * a.dist(i);
      const Scalar t2 = second * w / out.clusterWeights(out.owner[static_cast<std::size_t>(i)]);
      out.pi(i) = std::min(Scalar(1), std::max(t1, t2));
    }
  });
  return out;
}

template <typename Scalar>
One2AllProbabilities<Scalar> one2all_probs(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X,
                                           const CentroidSet<Scalar>& M) {
  return one2all_from_assignment(space, X, M.matrix(), assign(space, X, M));
}

struct DominanceReport {
  bool holds = true;
  double worstRatio = 0;  // max_x min{1, V(Q)/V(M)} psi_x / pi_x
  Index worstPoint = -1;
  double costQ = 0;
};

/// Checks pi^(M) >= min{1, V(Q)/V(M)} psi^(Q) pointwise, with `slack`
/// absolute tolerance for rounding. A zero-cost Q is answered exactly and
/// holds trivially.
template <typename Scalar>
DominanceReport verify_dominance(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X,
                                 const One2AllProbabilities<Scalar>& probs, const CentroidSet<Scalar>& Q,
                                 double slack = 1e-12) {
  DominanceReport rep;
  const Assignment<Scalar> a = assign(space, X, Q);
  const Scalar VQ = weighted_cost(X.weights(), a.dist);
  rep.costQ = static_cast<double>(VQ);
  if (!(VQ > 0)) return rep;
  const Scalar factor = probs.costM > 0 ? std::min(Scalar(1), VQ / probs.costM) : Scalar(1);
  for (Index i = 0; i < X.size(); ++i) {
    const Scalar need = factor * X.weight(i) * a.dist(i) / VQ;
    const double ratio = static_cast<double>(need / probs.pi(i));
    if (ratio > rep.worstRatio) {
      rep.worstRatio = ratio;
      rep.worstPoint = i;
    }
    if (static_cast<double>(need) > static_cast<double>(probs.pi(i)) + slack) rep.holds = false;
  }
  return rep;
}

/// Candidate sampling probabilities for prefix cost v and threshold C:
/// min{1, max{1, v/C} eps^-2 pi}.
template <typename Scalar>
Vector<Scalar> threshold_probabilities(const Vector<Scalar>& pi, Scalar v, Scalar C, Scalar eps) {
  return cap(std::max(Scalar(1), v / C) / (eps * eps), pi);
}

/// 1-based argmin of i * v_i; ties go to the smallest i.
template <typename Scalar>
Index rough_sweet_spot(std::span<const Scalar> prefixCosts) {
  if (prefixCosts.empty()) throw StructuralError("empty prefix-cost sequence");
  Index best = 1;
  Scalar bestScore = prefixCosts[0];
  for (std::size_t i = 1; i < prefixCosts.size(); ++i) {
    const Scalar score = static_cast<Scalar>(i + 1) * prefixCosts[i];
    if (score < bestScore) {
      bestScore = score;
      best = static_cast<Index>(i + 1);
    }
  }
  return best;
}

struct SweetSpotMode {
  enum class Kind { Exact, Rough };
  Kind kind = Kind::Rough;
  double C = 0;
  double eps = 0;

  static SweetSpotMode exact(double C, double eps) { return {Kind::Exact, C, eps}; }
  static SweetSpotMode rough() { return {Kind::Rough, 0, 0}; }
};

template <typename Scalar>
struct SweetSpot {
  Index index = 1;  // 1-based prefix length
  One2AllProbabilities<Scalar> probs;
  Vector<Scalar> sampling;     // exact mode: winning min{1, max{1, v_i/C} eps^-2 pi}
  Scalar expectedSize = 0;     // exact mode: |sampling|_1
  std::vector<Scalar> scores;  // per-prefix |p'|_1 (exact) or i v_i (rough)
};

/// Chooses the kmeans++ prefix whose one2all probabilities give the smallest
/// sample. Exact mode evaluates |min{1, max{1, v_i/C} eps^-2 pi^(M_i)}|_1 for
/// every prefix; rough mode minimizes i v_i and only builds pi for the winner.
template <typename Scalar>
SweetSpot<Scalar> sweet_spot(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X,
                             const KmeansPPTrace<Scalar>& trace, const SweetSpotMode& mode) {
  if (trace.length() < 1) throw StructuralError("empty kmeans++ trace");
  SweetSpot<Scalar> out;
  if (mode.kind == SweetSpotMode::Kind::Rough) {
    for (Index i = 1; i <= trace.length(); ++i) out.scores.push_back(static_cast<Scalar>(i) * trace.cost_at(i));
    out.index = rough_sweet_spot<Scalar>(trace.prefixCosts);
    out.probs = one2all_probs(space, X, trace.prefix(out.index));
    return out;
  }
  if (!(mode.C > 0) || !(mode.eps > 0)) throw StructuralError("exact sweet spot needs C > 0 and eps > 0");
  const auto C = static_cast<Scalar>(mode.C), eps = static_cast<Scalar>(mode.eps);
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for_each_prefix(space, X.points(), trace.centroids, [&](Index i, const Assignment<Scalar>& a) {
    auto probs = one2all_from_assignment(space, X, trace.centroids.leftCols(i).eval(), a);
    Vector<Scalar> p = threshold_probabilities(probs.pi, trace.cost_at(i), C, eps);
    const Scalar size = p.sum();
    out.scores.push_back(size);
    if (size < best) {
      best = size;
      out.index = i;
      out.probs = std::move(probs);
      out.sampling = std::move(p);
      out.expectedSize = size;
    }
  });
  return out;
}

}  // namespace one2all
