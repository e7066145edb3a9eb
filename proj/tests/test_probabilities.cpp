#include "doctest.h"
#include "helpers.hpp"

#include "one2all/data.hpp"
#include "one2all/probabilities.hpp"

#include <random>

using namespace one2all;
using namespace one2all::testing;

namespace {

double wmedian(std::vector<double> v, std::vector<double> w) {
  return weighted_median<double>(std::span<const double>(v), std::span<const double>(w));
}

// Straight-line reading of the probability formula, one point at a time.
std::vector<double> reference_pi(const Matrix<double>& X, const Vector<double>& w, const Matrix<double>& M,
                                 double power) {
  const double rho = power <= 1 ? 1 : std::pow(2.0, power - 1);
  const Index n = X.cols();
  std::vector<int> owner(static_cast<std::size_t>(n));
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    double best = -1;
    for (Index j = 0; j < M.cols(); ++j) {
      const double d = std::pow((X.col(i) - M.col(j)).norm(), power);
      if (best < 0 || d < best) {
        best = d;
        owner[static_cast<std::size_t>(i)] = static_cast<int>(j);
      }
    }
    dist[static_cast<std::size_t>(i)] = best;
  }
  double V = 0;
  std::vector<double> cell(static_cast<std::size_t>(M.cols()), 0.0);
  for (Index i = 0; i < n; ++i) {
    V += w(i) * dist[static_cast<std::size_t>(i)];
    cell[static_cast<std::size_t>(owner[static_cast<std::size_t>(i)])] += w(i);
  }
  std::vector<double> pi(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double a = V > 0 ? 2 * rho * w(i) * dist[static_cast<std::size_t>(i)] / V : 0.0;
    const double b = 8 * rho * rho * w(i) / cell[static_cast<std::size_t>(owner[static_cast<std::size_t>(i)])];
    pi[static_cast<std::size_t>(i)] = std::min(1.0, std::max(a, b));
  }
  return pi;
}

}  // namespace

TEST_CASE("weighted median examples") {
  CHECK(wmedian({1, 2, 3}, {1, 1, 1}) == 2);
  CHECK(wmedian({1, 2}, {1, 1}) == 1);
  CHECK(wmedian({5, 1, 9, 3}, {1, 3, 1, 1}) == 1);
  CHECK(wmedian({4, 4, 4}, {1, 2, 3}) == 4);
  CHECK(wmedian({0, 10}, {1, 5}) == 10);
  CHECK_THROWS_AS(wmedian({}, {}), StructuralError);
}

TEST_CASE("weighted median agrees with exhaustive search") {
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<int> val(0, 6), len(1, 9);
  std::uniform_real_distribution<double> wt(0.1, 2.0);
  for (int rep = 0; rep < 500; ++rep) {
    const int m = len(gen);
    std::vector<double> v(static_cast<std::size_t>(m)), w(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      v[static_cast<std::size_t>(i)] = val(gen);
      w[static_cast<std::size_t>(i)] = wt(gen);
    }
    double W = 0;
    for (double x : w) W += x;
    double expect = std::numeric_limits<double>::infinity();
    for (double cand : v) {
      double lo = 0, hi = 0;
      for (int i = 0; i < m; ++i) {
        if (v[static_cast<std::size_t>(i)] <= cand) lo += w[static_cast<std::size_t>(i)];
        if (v[static_cast<std::size_t>(i)] >= cand) hi += w[static_cast<std::size_t>(i)];
      }
      if (lo >= W / 2 && hi >= W / 2) expect = std::min(expect, cand);
    }
    CHECK(wmedian(v, w) == expect);
  }
}

TEST_CASE("tiny instance saturates at 1") {
  const auto sq = MetricSpace<double>::euclidean(2);
  const auto P = one2all_probs(sq, line_set({0, 4, 10}), line_centroids({0, 10}));
  CHECK(P.costM == 16);
  CHECK(P.pi(0) == 1);
  CHECK(P.pi(1) == 1);
  CHECK(P.pi(2) == 1);
  CHECK(P.medians(0) == 0);
}

TEST_CASE("every point its own centroid gives pi = 1") {
  const auto sq = MetricSpace<double>::euclidean(2);
  const auto P = one2all_probs(sq, line_set({0, 1, 5}), line_centroids({0, 1, 5}));
  CHECK(P.costM == 0);
  CHECK((P.pi.array() == 1.0).all());
}

TEST_CASE("empty cells are dropped") {
  const auto sq = MetricSpace<double>::euclidean(2);
  const auto P = one2all_probs(sq, line_set({0, 1, 2}), line_centroids({1, 100}));
  CHECK(P.size() == 1);
  CHECK(P.droppedCentroids == 1);
  CHECK(P.overhead_bound() == 8 * 4 * 1 + 4);
}

TEST_CASE("probabilities match an independent reimplementation") {
  const auto sq = MetricSpace<double>::euclidean(2);
  Matrix<double> X(1, 100);
  for (Index i = 0; i < 100; ++i) X(0, i) = static_cast<double>(i) / 99.0;
  WeightedPointSet<double> P(X);

  double bestCost = std::numeric_limits<double>::infinity();
  KmeansPPTrace<double> best;
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto tr = run_trace(sq, P, 2, s);
    if (tr.prefixCosts.back() < bestCost) {
      bestCost = tr.prefixCosts.back();
      best = std::move(tr);
    }
  }
  const auto probs = one2all_probs(sq, P, best.prefix(2));
  const auto ref = reference_pi(X, P.weights(), best.centroids, 2);
  double refSum = 0;
  for (Index i = 0; i < 100; ++i) {
    CHECK(probs.pi(i) == doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-12));
    refSum += ref[static_cast<std::size_t>(i)];
  }
  CHECK(std::abs(probs.overhead() - refSum) <= 1e-12 * refSum);
  CHECK(probs.overhead() <= 68);
}

TEST_CASE("probability invariants on weighted random data") {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> wt(0.01, 5.0);
  for (double power : {1.0, 2.0, 3.0}) {
    const auto space = MetricSpace<double>::euclidean(power);
    for (int rep = 0; rep < 20; ++rep) {
      Matrix<double> X(3, 300);
      for (Index i = 0; i < X.size(); ++i) X(i) = g(gen) * (i % 7 == 0 ? 10 : 1);
      Vector<double> w(300);
      for (Index i = 0; i < 300; ++i) w(i) = wt(gen);
      WeightedPointSet<double> P(X, w);
      const auto tr = run_trace(space, P, 8, static_cast<std::uint64_t>(rep));
      for (Index m = 1; m <= tr.length(); ++m) {
        const auto probs = one2all_probs(space, P, tr.prefix(m));
        const auto ref = reference_pi(X, w, tr.centroids.leftCols(m), power);
        const double rho = probs.rho;
        CHECK(probs.overhead() <= probs.overhead_bound());
        for (Index i = 0; i < 300; ++i) {
          REQUIRE(probs.pi(i) > 0);
          REQUIRE(probs.pi(i) <= 1);
          CHECK(probs.pi(i) == doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-9));
          const Index o = probs.owner[static_cast<std::size_t>(i)];
          CHECK(probs.pi(i) >= std::min(1.0, 8 * rho * rho * w(i) / probs.clusterWeights(o)) * (1 - 1e-12));
        }
      }
    }
  }
}

TEST_CASE("Q = M holds with room to spare") {
  const auto data = gen_gmm(2000, 3, 4, 2);
  const auto sq = MetricSpace<double>::euclidean(2);
  const auto tr = run_trace(sq, data.points, 4, 1);
  const auto probs = one2all_probs(sq, data.points, tr.prefix(4));
  const auto rep = verify_dominance(sq, data.points, probs, tr.prefix(4));
  CHECK(rep.holds);
  CHECK(rep.worstRatio <= 1 / (2 * probs.rho) + 1e-12);
}

TEST_CASE("dominance holds for every pair Q of small random instances") {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> wt(0.1, 4.0);
  for (double power : {1.0, 2.0}) {
    const auto space = MetricSpace<double>::euclidean(power);
    for (int rep = 0; rep < 20; ++rep) {
      Matrix<double> X(2, 12);
      for (Index i = 0; i < X.size(); ++i) X(i) = g(gen);
      Vector<double> w(12);
      for (Index i = 0; i < 12; ++i) w(i) = wt(gen);
      WeightedPointSet<double> P(X, w);
      const auto tr = run_trace(space, P, 3, static_cast<std::uint64_t>(rep));
      for (Index m = 1; m <= tr.length(); ++m) {
        const auto probs = one2all_probs(space, P, tr.prefix(m));
        for (Index a = 0; a < 12; ++a)
          for (Index b = a + 1; b < 12; ++b) {
            Matrix<double> q(2, 2);
            q.col(0) = X.col(a);
            q.col(1) = X.col(b);
            CHECK(verify_dominance(space, P, probs, CentroidSet<double>(q)).holds);
          }
      }
    }
  }
}

TEST_CASE("dominance holds for random ambient Q") {
  const auto data = gen_gmm(200, 3, 4, 6);
  const auto sq = MetricSpace<double>::euclidean(2);
  const auto tr = run_trace(sq, data.points, 6, 2);
  const auto probs = one2all_probs(sq, data.points, tr.prefix(6));
  std::mt19937_64 gen(8);
  std::normal_distribution<double> g(0, 15);
  int held = 0;
  for (int t = 0; t < 1000; ++t) {
    Matrix<double> q(3, 5);
    for (Index i = 0; i < q.size(); ++i) q(i) = g(gen);
    held += verify_dominance(sq, data.points, probs, CentroidSet<double>(q)).holds;
  }
  CHECK(held == 1000);
}

TEST_CASE("verify_dominance flags a violation") {
  const auto sq = MetricSpace<double>::euclidean(2);
  auto X = line_set({0, 1, 2, 3});
  auto probs = one2all_probs(sq, X, line_centroids({0, 3}));
  probs.pi.setConstant(1e-6);
  CHECK_FALSE(verify_dominance(sq, X, probs, line_centroids({0})).holds);
}

TEST_CASE("rough sweet spot") {
  std::vector<double> flat{10, 10, 10, 10};
  CHECK(rough_sweet_spot<double>(flat) == 1);
  std::vector<double> v{100, 40, 39, 39};
  CHECK(rough_sweet_spot<double>(v) == 2);
  CHECK_THROWS_AS(rough_sweet_spot<double>(std::vector<double>{}), StructuralError);
}

TEST_CASE("exact sweet spot picks the smallest sample") {
  const auto data = gen_gmm(3000, 4, 5, 10);
  const auto sq = MetricSpace<double>::euclidean(2);
  const auto tr = run_trace(sq, data.points, 10, 3);
  const double C = *data.groundTruthCost, eps = 0.2;
  const auto ss = sweet_spot(sq, data.points, tr, SweetSpotMode::exact(C, eps));
  REQUIRE(ss.scores.size() == static_cast<std::size_t>(tr.length()));
  for (Index i = 1; i <= tr.length(); ++i) {
    const auto pi = one2all_probs(sq, data.points, tr.prefix(i)).pi;
    const double size = threshold_probabilities<double>(pi, tr.cost_at(i), C, eps).sum();
    CHECK(size == doctest::Approx(ss.scores[static_cast<std::size_t>(i - 1)]).epsilon(1e-12));
    CHECK(ss.expectedSize <= size * (1 + 1e-12));
  }
  CHECK(ss.sampling.sum() == doctest::Approx(ss.expectedSize));
  const auto rough = sweet_spot(sq, data.points, tr, SweetSpotMode::rough());
  CHECK(rough.index == rough_sweet_spot<double>(tr.prefixCosts));
}
