#pragma once

#include "one2all/core.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace one2all {

/// pps base probabilities psi_x = w_x d(x,Q) / V(Q).
template <typename Scalar>
struct PpsBase {
  Vector<Scalar> psi;
  Scalar cost = 0;
};

template <typename Scalar>
PpsBase<Scalar> pps_base(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X,
                         const CentroidSet<Scalar>& Q) {
  const Assignment<Scalar> a = assign(space, X, Q);
  PpsBase<Scalar> out;
  out.cost = weighted_cost(X.weights(), a.dist);
  if (!(out.cost > 0)) throw DegenerateDistribution("pps probabilities undefined: clustering cost is zero");
  out.psi = X.weights().cwiseProduct(a.dist) / out.cost;
  return out;
}

/// The cap operator r * b = min{1, r b}. An infinite r saturates every
/// positive entry to 1.
template <typename Scalar>
Vector<Scalar> cap(Scalar r, const Vector<Scalar>& base) {
  Vector<Scalar> out(base.size());
  for (Index i = 0; i < base.size(); ++i) out(i) = base(i) > 0 ? std::min(Scalar(1), r * base(i)) : Scalar(0);
  return out;
}

/// Multi-objective pps base probabilities over every Q subset of X with |Q| = k,
/// by enumeration. Test oracle for small instances.
template <typename Scalar>
struct MoPps {
  Vector<Scalar> psi;
  Scalar overhead = 0;   // h = |psi|_1
  std::size_t sets = 0;  // number of Q enumerated
  std::size_t zeroCostSets = 0;  // Q with V(Q)=0, answerable exactly and skipped
};

template <typename Scalar>
MoPps<Scalar> mo_pps_bruteforce(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X, Index k) {
  const Index n = X.size();
  if (k < 1 || k > n) throw StructuralError("brute-force multi-objective pps needs 1 <= k <= n");
  double combos = 1;
  for (Index i = 0; i < k; ++i) combos = combos * static_cast<double>(n - i) / static_cast<double>(i + 1);
  if (combos > 1e6) throw StructuralError("brute-force enumeration refused: C(n,k) > 1e6");

  MoPps<Scalar> out;
  out.psi = Vector<Scalar>::Zero(n);
  std::vector<Index> pick(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) pick[static_cast<std::size_t>(i)] = i;
  Matrix<Scalar> q(X.dim(), k);
  while (true) {
    for (Index j = 0; j < k; ++j) q.col(j) = X.point(pick[static_cast<std::size_t>(j)]);
    ++out.sets;
    try {
      out.psi = out.psi.cwiseMax(pps_base(space, X, CentroidSet<Scalar>(q)).psi);
    } catch (const DegenerateDistribution&) {
      ++out.zeroCostSets;
    }
    Index pos = k - 1;
    while (pos >= 0 && pick[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
    if (pos < 0) break;
    ++pick[static_cast<std::size_t>(pos)];
    for (Index j = pos + 1; j < k; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  out.overhead = out.psi.sum();
  return out;
}

/// Poisson sample with coordinated randomization: point x is a member iff
/// u_x <= p_x, with u_x in (0,1] fixed for the sample's lifetime. Members
/// carry inverse-probability weights w_x / p_x.
template <typename Scalar>
class CoordinatedSample {
 public:
  /// u_x derived from (seed, x) by a counter-based generator.
  static CoordinatedSample draw(const WeightedPointSet<Scalar>& X, const Vector<Scalar>& probs, std::uint64_t seed) {
    Vector<Scalar> u(X.size());
    for (Index i = 0; i < X.size(); ++i) u(i) = static_cast<Scalar>(counter_uniform(seed, static_cast<std::uint64_t>(i)));
    return CoordinatedSample(X, probs, std::move(u), seed);
  }

  /// Caller-provided randomization (tests construct adversarial samples this way).
  static CoordinatedSample from_uniforms(const WeightedPointSet<Scalar>& X, const Vector<Scalar>& probs,
                                         Vector<Scalar> u, std::uint64_t seed = 0) {
    if (u.size() != X.size()) throw StructuralError("uniforms and points differ in length");
    for (Index i = 0; i < u.size(); ++i)
      if (!(u(i) > 0 && u(i) <= 1)) throw StructuralError("uniforms must lie in (0,1]");
    return CoordinatedSample(X, probs, std::move(u), seed);
  }

  /// Same randomization at pointwise larger probabilities. Never evicts members.
  CoordinatedSample grow(const WeightedPointSet<Scalar>& X, const Vector<Scalar>& probs) const {
    if (probs.size() != p_.size()) throw StructuralError("probability vector length changed");
    for (Index i = 0; i < probs.size(); ++i)
      if (probs(i) < p_(i)) throw StructuralError("coordinated growth requires pointwise non-decreasing probabilities");
    return CoordinatedSample(X, probs, u_, seed_);
  }

  Index size() const { return static_cast<Index>(members_.size()); }
  bool empty() const { return members_.empty(); }
  Index population() const { return p_.size(); }
  std::uint64_t seed() const { return seed_; }
  const Vector<Scalar>& uniforms() const { return u_; }
  const Vector<Scalar>& probabilities() const { return p_; }
  const std::vector<Index>& members() const { return members_; }
  const Matrix<Scalar>& points() const { return points_; }
  const Vector<Scalar>& weights() const { return weights_; }  // original w_x of members
  const Vector<Scalar>& adjusted_weights() const { return wPrime_; }
  Scalar expected_size() const { return p_.sum(); }
  bool saturated() const { return (p_.array() >= Scalar(1)).all(); }

  /// Members with inverse-probability weights, ready for a base clusterer.
  WeightedPointSet<Scalar> as_point_set() const {
    if (empty()) throw StructuralError("empty sample");
    return WeightedPointSet<Scalar>(points_, wPrime_);
  }

 private:
  CoordinatedSample(const WeightedPointSet<Scalar>& X, const Vector<Scalar>& probs, Vector<Scalar> u,
                    std::uint64_t seed)
      : seed_(seed), u_(std::move(u)), p_(probs) {
    if (p_.size() != X.size()) throw StructuralError("probabilities and points differ in length");
    for (Index i = 0; i < p_.size(); ++i) {
      if (!(p_(i) >= 0 && p_(i) <= 1)) throw StructuralError("probabilities must lie in [0,1]");
      if (p_(i) > 0 && u_(i) <= p_(i)) members_.push_back(i);
    }
    const auto m = static_cast<Index>(members_.size());
    points_.resize(X.dim(), m);
    weights_.resize(m);
    wPrime_.resize(m);
    for (Index j = 0; j < m; ++j) {
      const Index x = members_[static_cast<std::size_t>(j)];
      points_.col(j) = X.point(x);
      weights_(j) = X.weight(x);
      wPrime_(j) = X.weight(x) / p_(x);
    }
  }

  std::uint64_t seed_;
  Vector<Scalar> u_;
  Vector<Scalar> p_;
  std::vector<Index> members_;
  Matrix<Scalar> points_;
  Vector<Scalar> weights_;
  Vector<Scalar> wPrime_;
};

/// Inverse-probability estimate V(Q | S, w') of V(Q | X, w). An empty sample
/// yields 0; `sample.empty()` is the diagnostic.
template <typename Scalar>
Scalar estimate_cost(const MetricSpace<Scalar>& space, const CoordinatedSample<Scalar>& sample,
                     const CentroidSet<Scalar>& Q) {
  detail::check_dims(space, sample.points().rows(), Q.dim());
  if (sample.empty()) return 0;
  const Index k = Q.size();
  const auto& pts = sample.points();
  const auto& wp = sample.adjusted_weights();
  return reduce_sum<Scalar>(sample.size(), [&](Index i) {
    Scalar bestd = space(pts.col(i), Q.centroid(0));
    for (Index j = 1; j < k; ++j) bestd = std::min(bestd, space(pts.col(i), Q.centroid(j)));
    return wp(i) * bestd;
  });
}

/// Upper-tail bound on Pr[estimate >= V / alpha] under weak pps sampling at
/// probabilities alpha eps^-2 * psi, for alpha <= 1/2:
///   min{ alpha / (1 - 2 alpha), exp(-(1 - alpha) ln(1/alpha) eps^-2 / 2) }.
inline double overestimate_bound(double alpha, double eps) {
  if (!(alpha > 0 && alpha <= 0.5)) throw StructuralError("overestimate bound needs 0 < alpha <= 1/2");
  const double markov = alpha < 0.5 ? alpha / (1 - 2 * alpha) : std::numeric_limits<double>::infinity();
  const double chernoff = std::exp(-(1 - alpha) * std::log(1 / alpha) / (eps * eps) / 2);
  return std::min(markov, chernoff);
}

/// Upper multiplicative Chernoff bound Pr[estimate >= (1 + delta) V] for
/// probabilities alpha eps^-2 * psi.
inline double upper_tail_bound(double delta, double alpha, double eps) {
  return std::exp(-delta * std::log1p(delta) * alpha / (eps * eps) / 2);
}

/// Lower multiplicative Chernoff bound Pr[estimate <= (1 - delta) V], delta <= 1.
inline double lower_tail_bound(double delta, double alpha, double eps) {
  return std::exp(-delta * delta * alpha / (eps * eps) / 2);
}

struct ConcentrationReport {
  double alpha = 0;
  double eps = 0;
  double threshold = 0;  // estimate/V ratio counted as an overestimate
  int trials = 0;
  int overestimates = 0;
  double frequency = 0;
  double bound = 0;
  double slack = 0;  // 3 binomial standard deviations at the bound
  bool within() const { return frequency <= bound + slack; }
};

/// Monte Carlo tail check of weak pps sampling at p = alpha eps^-2 * psi^(Q).
/// For alpha <= 1/2 the event is estimate >= V/alpha against the
/// overestimation bound; otherwise estimate >= 2V against the upper Chernoff
/// form with delta = 1.
template <typename Scalar>
ConcentrationReport concentration_check(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X,
                                        const CentroidSet<Scalar>& Q, double alpha, double eps, int trials,
                                        std::uint64_t seed) {
  if (!(alpha > 0 && alpha <= 1) || !(eps > 0) || trials < 1) throw StructuralError("bad concentration parameters");
  const Assignment<Scalar> a = assign(space, X, Q);
  const Scalar V = weighted_cost(X.weights(), a.dist);
  if (!(V > 0)) throw DegenerateDistribution("concentration check needs V(Q) > 0");
  const Vector<Scalar> contrib = X.weights().cwiseProduct(a.dist);
  const Vector<Scalar> p = cap(static_cast<Scalar>(alpha / (eps * eps)), Vector<Scalar>(contrib / V));

  ConcentrationReport rep;
  rep.alpha = alpha;
  rep.eps = eps;
  rep.trials = trials;
  if (alpha <= 0.5) {
    rep.threshold = 1 / alpha;
    rep.bound = overestimate_bound(alpha, eps);
  } else {
    rep.threshold = 2;
    rep.bound = upper_tail_bound(1.0, alpha, eps);
  }
  rep.slack = 3 * std::sqrt(std::min(1.0, rep.bound) * std::max(0.0, 1 - rep.bound) / trials);
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(t));
    CompensatedSum<Scalar> est;
    for (Index i = 0; i < X.size(); ++i)
      if (p(i) > 0 && counter_uniform(s, static_cast<std::uint64_t>(i)) <= p(i)) est.add(contrib(i) / p(i));
    if (est.value() >= static_cast<Scalar>(rep.threshold) * V) ++rep.overestimates;
  }
  rep.frequency = static_cast<double>(rep.overestimates) / trials;
  return rep;
}

}  // namespace one2all
