#pragma once

#include "one2all/core.hpp"
#include "one2all/kmeanspp.hpp"
#include "one2all/probabilities.hpp"
#include "one2all/sampling.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace one2all {

/// A weighted sample answering clustering-cost queries, with the state needed
/// to grow it when a query falls below the supported cost threshold C.
///
/// Invariants: p >= min{1, max{1, V(M_i)/C} eps^-2 pi} pointwise; C never
/// increases and each feedback update at least halves it; sample members are
/// exactly {x : u_x <= p_x} under a fixed u.
///
/// `query` is read-only and may run concurrently; `feedback_query` mutates and
/// needs exclusive access.
template <typename Scalar>
struct OracleState {
  CoordinatedSample<Scalar> sample;
  One2AllProbabilities<Scalar> probs;  // pi of the winning prefix
  Vector<Scalar> p;                    // current sampling probabilities
  Scalar C = 0;                        // supported cost threshold; 0 means p == 1
  Scalar eps = 0;
  Index k = 0;
  Index prefixIndex = 0;
  Index updateCount = 0;
  std::uint64_t seed = 0;
  std::vector<Scalar> prefixCosts;  // kmeans++ v_1..v_l used at build time

  Index population() const { return p.size(); }
};

namespace detail {

template <typename Scalar>
OracleState<Scalar> oracle_from_trace(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X,
                                      const KmeansPPTrace<Scalar>& trace, Scalar C, Scalar eps, Index k,
                                      std::uint64_t seed) {
  const std::uint64_t sampleSeed = derive_seed(seed, 0x0a11ULL);
  if (C > 0) {
    auto ss = sweet_spot(space, X, trace, SweetSpotMode::exact(static_cast<double>(C), static_cast<double>(eps)));
    auto sample = CoordinatedSample<Scalar>::draw(X, ss.sampling, sampleSeed);
    return OracleState<Scalar>{std::move(sample), std::move(ss.probs), std::move(ss.sampling), C, eps, k,
                               ss.index, 0, seed, trace.prefixCosts};
  }
  // Every point is a centroid: keep everything, answers are exact.
  auto probs = one2all_from_assignment(space, X, trace.centroids, trace.finalAssignment);
  Vector<Scalar> p = Vector<Scalar>::Ones(X.size());
  auto sample = CoordinatedSample<Scalar>::draw(X, p, sampleSeed);
  return OracleState<Scalar>{std::move(sample), std::move(probs), std::move(p), Scalar(0), eps, k,
                             trace.length(), 0, seed, trace.prefixCosts};
}

}  // namespace detail

/// Fixed-threshold oracle: runs `ell` kmeans++ iterations, keeps the prefix
/// whose probabilities min{1, max{1, v_i/C} eps^-2 pi^(M_i)} have the
/// smallest sum, and draws one coordinated sample from them.
template <typename Scalar>
OracleState<Scalar> build_oracle(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X, Index ell,
                                 Scalar C, Scalar eps, std::uint64_t seed, Index k = 0) {
  if (!(C > 0) || !(eps > 0)) throw StructuralError("oracle needs C > 0 and eps > 0");
  const auto trace = run_trace(space, X, ell, seed);
  return detail::oracle_from_trace(space, X, trace, C, eps, k > 0 ? k : ell, seed);
}

/// Feedback oracle initialization: ell = 2k and C = V(M_2k).
template <typename Scalar>
OracleState<Scalar> build_feedback_oracle(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X,
                                          Index k, Scalar eps, std::uint64_t seed) {
  if (k < 1 || !(eps > 0)) throw StructuralError("feedback oracle needs k >= 1 and eps > 0");
  const auto trace = run_trace(space, X, std::min<Index>(2 * k, X.size()), seed);
  return detail::oracle_from_trace(space, X, trace, trace.prefixCosts.back(), eps, k, seed);
}

/// Estimate V(Q | S, w'). O(|S| |Q|) distance evaluations.
template <typename Scalar>
Scalar query(const MetricSpace<Scalar>& space, const OracleState<Scalar>& state, const CentroidSet<Scalar>& Q) {
  return estimate_cost(space, state.sample, Q);
}

template <typename Scalar>
struct FeedbackAnswer {
  Scalar value = 0;
  bool wasExact = false;
};

/// Returns the estimate when it exceeds C. Otherwise computes the exact cost
/// V, grows p by max{2, 2C/V} (capped at 1), lowers C to min{C, V}/2 and
/// extends the sample under the same randomization.
template <typename Scalar>
FeedbackAnswer<Scalar> feedback_query(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X,
                                      OracleState<Scalar>& state, const CentroidSet<Scalar>& Q) {
  const Scalar est = estimate_cost(space, state.sample, Q);
  if (est > state.C) return {est, false};
  const Scalar V = cost(space, X, Q);
  if (V > 0) {
    const Scalar factor = std::max(Scalar(2), 2 * state.C / V);
    state.p = state.p.unaryExpr([factor](Scalar v) { return std::min(Scalar(1), factor * v); });
    state.C = std::min(state.C, V) / 2;
  } else {
    state.p.setOnes();
    state.C = 0;
  }
  state.sample = state.sample.grow(X, state.p);
  ++state.updateCount;
  return {V, true};
}

/// Binary oracle file, little-endian:
///   "O2AORCL\0", u32 version, u32 metric kind, f64 power, f64 rho,
///   u64 n, d, k, prefix index, update count, seed,
///   f64 eps, C, V(M), u64 |M|, f64 M[d*|M|], f64 pi[n], f64 p[n],
///   u64 m, u64 members[m], f64 member points [d*m], f64 member weights [m].
/// The sample's randomization is re-derived from the seed on load.
void save_oracle(const OracleState<double>& state, const MetricSpace<double>& space, const std::filesystem::path& path);

struct LoadedOracle {
  OracleState<double> state;
  MetricKind kind;
  double power;
};

LoadedOracle load_oracle(const std::filesystem::path& path);

}  // namespace one2all
