#pragma once

#include "one2all/core.hpp"
#include "one2all/kmeanspp.hpp"
#include "one2all/lloyd.hpp"
#include "one2all/probabilities.hpp"
#include "one2all/sampling.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace one2all {

enum class CertifyMode { Exact, Validation };

struct WrapperOptions {
  std::uint64_t seed = 0;
  int maxRounds = 40;
  CertifyMode certify = CertifyMode::Exact;
  int copies = 1;  // > 1 confirms a passing clustering on extra independent samples
  Index ell = 0;   // kmeans++ iterations on the full data; 0 means 2k
};

struct RoundRecord {
  int round = 0;
  double r = 0;
  Index sampleSize = 0;
  double expectedSize = 0;
  double estimate = 0;
  double VQ = 0;
  double bestV = 0;
  int growthSteps = 0;
  std::string action;  // "break", "grow" or "confirm-grow"
};

struct WrapperReport {
  bool certified = false;
  int rounds = 0;
  Index sweetSpot = 0;
  Index traceLength = 0;
  double vM = 0;
  double v2k = 0;
  double vk = 0;
  double r = 0;
  double finalVQ = 0;        // V_Q of the last clustering tested
  double finalEstimate = 0;  // its estimate on the final sample
  double bestV = 0;
  Index finalSampleSize = 0;
  double finalExpectedSize = 0;
  double overhead = 0;       // |pi|_1 of the sweet-spot prefix
  double overheadBound = 0;  // 8 rho^2 |M| + 2 rho
  std::vector<double> prefixCosts;
  std::vector<RoundRecord> log;
};

template <typename Scalar>
struct WrapperResult {
  CentroidSet<Scalar> centroids;
  WrapperReport report;
  One2AllProbabilities<Scalar> probs;
  Vector<Scalar> finalProbabilities;
};

template <typename Scalar>
struct Certification {
  Scalar VQ = 0;
  Scalar estimate = 0;
  bool pass = false;
};

/// Tests whether the sample fooled the base clusterer:
/// pass iff V(Q | X) <= (1 + eps) V(Q | S, w'). Validation mode replaces the
/// exact V(Q | X) with an estimate from an independent sample drawn at the
/// same probabilities with `validationSeed`.
template <typename Scalar>
Certification<Scalar> certify(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X,
                              const CoordinatedSample<Scalar>& sample, const CentroidSet<Scalar>& Q, Scalar eps,
                              CertifyMode mode = CertifyMode::Exact, std::uint64_t validationSeed = 0) {
  Certification<Scalar> c;
  c.estimate = estimate_cost(space, sample, Q);
  if (mode == CertifyMode::Exact) {
    c.VQ = cost(space, X, Q);
  } else {
    const auto validation = CoordinatedSample<Scalar>::draw(X, sample.probabilities(), validationSeed);
    c.VQ = estimate_cost(space, validation, Q);
  }
  c.pass = c.VQ <= (1 + eps) * c.estimate;
  return c;
}

template <typename Scalar>
struct Confirmation {
  CentroidSet<Scalar> centroids;
  Scalar cost;
  std::vector<Scalar> costs;  // exact cost of each copy's clustering
};

/// Runs the base clusterer on `copies` independent samples at `probabilities`
/// and keeps the clustering with the lowest exact cost.
template <typename Scalar>
Confirmation<Scalar> multi_sample_confirm(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X,
                                          const Vector<Scalar>& probabilities, const BaseClusterer<Scalar>& base,
                                          Index k, int copies, std::uint64_t seed) {
  if (copies < 1) throw StructuralError("copies must be >= 1");
  std::optional<Confirmation<Scalar>> best;
  std::vector<Scalar> costs;
  for (int c = 0; c < copies; ++c) {
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(c));
    const auto sample = CoordinatedSample<Scalar>::draw(X, probabilities, s);
    if (sample.empty()) continue;
    auto Q = base(space, sample.as_point_set(), k, derive_seed(s, 1));
    const Scalar v = cost(space, X, Q);
    costs.push_back(v);
    if (!best || v < best->cost) best = Confirmation<Scalar>{std::move(Q), v, {}};
  }
  if (!best) throw StructuralError("every confirmation sample was empty");
  best->costs = std::move(costs);
  return std::move(*best);
}

/// Adaptive clustering over samples.
///
/// Runs 2k kmeans++ iterations on the full data and keeps the one2all
/// probabilities pi of the prefix minimizing i v_i. Starting from
/// r = v_M / v_2k it repeatedly clusters the sample drawn at
/// min{1, r eps^-2 pi}, and stops once the returned Q satisfies
/// V_Q <= (1 + eps) V(Q | S, w') and V_Q >= v_M / r. Otherwise r grows by
/// max{2, V_Q / v_M, v_M / (r Vbar)} and keeps doubling until the estimate
/// of Q exceeds min{(1 + eps) Vbar, (1 - eps) V_Q}. Samples are coordinated
/// through a fixed u, so growth only adds points.
///
/// `uniforms`, when given, replaces the seeded randomization.
template <typename Scalar>
WrapperResult<Scalar> run_wrapper(const MetricSpace<Scalar>& space, const WeightedPointSet<Scalar>& X, Index k,
                                  Scalar eps, const BaseClusterer<Scalar>& base, const WrapperOptions& opt = {},
                                  const Vector<Scalar>* uniforms = nullptr) {
  const Index n = X.size();
  if (k < 1 || k > n) throw StructuralError("wrapper needs 1 <= k <= n");
  if (!(eps > 0)) throw StructuralError("eps must be positive");
  if (opt.maxRounds < 1) throw StructuralError("maxRounds must be >= 1");
  const Index ell = opt.ell > 0 ? std::min(opt.ell, n) : std::min<Index>(2 * k, n);

  const auto trace = run_trace(space, X, ell, opt.seed);
  auto ss = sweet_spot(space, X, trace, SweetSpotMode::rough());
  const Scalar vM = trace.cost_at(ss.index);
  const Scalar v2k = trace.prefixCosts.back();
  const Index kPrefix = std::min(k, trace.length());
  const Scalar inf = std::numeric_limits<Scalar>::infinity();

  WrapperReport rep;
  rep.sweetSpot = ss.index;
  rep.traceLength = trace.length();
  rep.vM = static_cast<double>(vM);
  rep.v2k = static_cast<double>(v2k);
  rep.vk = static_cast<double>(trace.cost_at(kPrefix));
  rep.overhead = static_cast<double>(ss.probs.overhead());
  rep.overheadBound = static_cast<double>(ss.probs.overhead_bound());
  rep.prefixCosts.assign(trace.prefixCosts.begin(), trace.prefixCosts.end());

  const Vector<Scalar>& pi = ss.probs.pi;
  const Scalar invEps2 = 1 / (eps * eps);
  auto probabilitiesAt = [&](Scalar r) { return r == inf ? cap(inf, pi) : cap(r * invEps2, pi); };
  auto supportedCost = [&](Scalar r) { return r == inf ? Scalar(0) : vM / r; };

  Scalar r = v2k > 0 ? vM / v2k : inf;
  CentroidSet<Scalar> bestQ = trace.prefix(kPrefix);
  Scalar bestV = trace.cost_at(kPrefix);

  Vector<Scalar> u(n);
  if (uniforms) {
    u = *uniforms;
  } else {
    const std::uint64_t useed = derive_seed(opt.seed, 0x0a11ULL);
    for (Index i = 0; i < n; ++i) u(i) = static_cast<Scalar>(counter_uniform(useed, static_cast<std::uint64_t>(i)));
  }
  auto S = CoordinatedSample<Scalar>::from_uniforms(X, probabilitiesAt(r), u, opt.seed);

  for (int round = 1; round <= opt.maxRounds; ++round) {
    RoundRecord rec;
    rec.round = round;
    rec.r = static_cast<double>(r);
    rec.sampleSize = S.size();
    rec.expectedSize = static_cast<double>(S.expected_size());
    rep.rounds = round;

    const std::uint64_t roundSeed = derive_seed(opt.seed, 1000 + static_cast<std::uint64_t>(round));
    if (S.empty()) {
      // Nothing to cluster yet; treat as a failed round.
      r = std::max(2 * r, Scalar(1) / (invEps2 * pi.maxCoeff()));
      S = S.grow(X, probabilitiesAt(r));
      rec.action = "grow";
      rep.log.push_back(rec);
      continue;
    }
    CentroidSet<Scalar> Q = base(space, S.as_point_set(), k, roundSeed);
    auto cert = certify(space, X, S, Q, eps, opt.certify, derive_seed(roundSeed, 7));
    Scalar VQ = cert.VQ;
    Scalar est = cert.estimate;
    if (VQ < bestV) {
      bestV = VQ;
      bestQ = Q;
    }
    rec.estimate = static_cast<double>(est);
    rec.VQ = static_cast<double>(VQ);
    rep.finalVQ = rec.VQ;
    rep.finalEstimate = rec.estimate;

    if (cert.pass && VQ >= supportedCost(r)) {
      bool confirmed = true;
      if (opt.copies > 1) {
        auto conf = multi_sample_confirm(space, X, S.probabilities(), base, k, opt.copies, derive_seed(roundSeed, 11));
        if (conf.cost < bestV) {
          bestV = conf.cost;
          bestQ = conf.centroids;
        }
        if (conf.cost < supportedCost(r)) {
          confirmed = false;
          Q = std::move(conf.centroids);
          VQ = conf.cost;
          est = estimate_cost(space, S, Q);
        }
      }
      if (confirmed) {
        rec.action = "break";
        rec.bestV = static_cast<double>(bestV);
        rep.log.push_back(rec);
        rep.certified = true;
        break;
      }
      rec.action = "confirm-grow";
    } else {
      rec.action = "grow";
    }

    // Increase the size parameter: at least double, and far enough that the
    // supported cost v_M / r drops below the best cost seen.
    Scalar factor = std::max(Scalar(2), vM > 0 ? VQ / vM : Scalar(2));
    if (r != inf) factor = std::max(factor, bestV > 0 ? vM / (r * bestV) : inf);
    r = (r == inf || factor == inf) ? inf : r * factor;
    const Scalar clear = std::min((1 + eps) * bestV, (1 - eps) * VQ);
    while (true) {
      S = S.grow(X, probabilitiesAt(r));
      ++rec.growthSteps;
      if (estimate_cost(space, S, Q) > clear || S.saturated()) break;
      r = r == inf ? inf : 2 * r;
    }
    rec.bestV = static_cast<double>(bestV);
    rep.log.push_back(rec);
  }

  rep.r = static_cast<double>(r);
  rep.bestV = static_cast<double>(bestV);
  rep.finalSampleSize = S.size();
  rep.finalExpectedSize = static_cast<double>(S.expected_size());
  return WrapperResult<Scalar>{std::move(bestQ), std::move(rep), std::move(ss.probs), S.probabilities()};
}

}  // namespace one2all
