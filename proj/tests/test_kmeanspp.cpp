#include "doctest.h"
#include "helpers.hpp"

#include "one2all/data.hpp"
#include "one2all/kmeanspp.hpp"

#include <map>

using namespace one2all;
using namespace one2all::testing;

TEST_CASE("first draw is uniform under unit weights") {
  const auto sq = MetricSpace<double>::euclidean(2);
  const auto X = line_set({0, 1, 2, 3, 4});
  std::vector<int> hits(5, 0);
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) ++hits[static_cast<std::size_t>(run_trace(sq, X, 1, static_cast<std::uint64_t>(t)).indices[0])];
  const double sigma = std::sqrt(trials * 0.2 * 0.8);
  for (int h : hits) CHECK(std::abs(h - trials * 0.2) <= 3 * sigma);
}

TEST_CASE("two points: the second centroid is the other point") {
  const auto sq = MetricSpace<double>::euclidean(2);
  const auto X = line_set({0, 10});
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto tr = run_trace(sq, X, 2, s);
    REQUIRE(tr.length() == 2);
    CHECK(tr.indices[0] != tr.indices[1]);
    CHECK(tr.prefixCosts[1] == 0.0);
  }
}

TEST_CASE("D2 chain on four points matches hand enumeration") {
  const auto sq = MetricSpace<double>::euclidean(2);
  const double xs[] = {0, 1, 9, 10};
  const auto X = line_set({0, 1, 9, 10});

  // P(pair {a,b}) = sum over orders of 1/4 * d(a,b)^2 / sum_c d(a,c)^2.
  std::map<std::pair<int, int>, double> exact;
  for (int a = 0; a < 4; ++a) {
    double total = 0;
    for (int c = 0; c < 4; ++c) total += (xs[a] - xs[c]) * (xs[a] - xs[c]);
    for (int b = 0; b < 4; ++b) {
      if (b == a) continue;
      exact[{std::min(a, b), std::max(a, b)}] += 0.25 * (xs[a] - xs[b]) * (xs[a] - xs[b]) / total;
    }
  }

  const int trials = 100000;
  std::map<std::pair<int, int>, int> seen;
  for (int t = 0; t < trials; ++t) {
    const auto tr = run_trace(sq, X, 2, derive_seed(99, static_cast<std::uint64_t>(t)));
    const int a = static_cast<int>(tr.indices[0]), b = static_cast<int>(tr.indices[1]);
    ++seen[{std::min(a, b), std::max(a, b)}];
  }
  for (const auto& [pair, p] : exact) {
    const double sigma = std::sqrt(trials * p * (1 - p));
    CHECK(std::abs(seen[pair] - trials * p) <= 4 * sigma + 1);
  }
  // Adjacent pairs are rare, cross pairs dominate.
  CHECK(exact[{0, 1}] < 0.01);
  CHECK(exact[{0, 3}] > 0.2);
}

TEST_CASE("prefix costs are non-increasing and match core cost") {
  const auto data = gen_gmm(3000, 4, 6, 12);
  for (double power : {1.0, 2.0}) {
    const auto space = MetricSpace<double>::euclidean(power);
    const auto tr = run_trace(space, data.points, 15, 3);
    for (std::size_t i = 1; i < tr.prefixCosts.size(); ++i) CHECK(tr.prefixCosts[i] <= tr.prefixCosts[i - 1]);
    for (Index i = 1; i <= tr.length(); ++i)
      CHECK(tr.cost_at(i) == doctest::Approx(cost(space, data.points, tr.prefix(i))).epsilon(1e-9));
  }
}

TEST_CASE("same seed reproduces the trace bit for bit") {
  const auto data = gen_gmm(2000, 3, 4, 1);
  const auto sq = MetricSpace<double>::euclidean(2);
  const auto a = run_trace(sq, data.points, 8, 42);
  const auto b = run_trace(sq, data.points, 8, 42);
  CHECK(a.indices == b.indices);
  CHECK(a.prefixCosts == b.prefixCosts);
  CHECK(a.centroids == b.centroids);
}

TEST_CASE("trace stops once every point is a centroid") {
  const auto sq = MetricSpace<double>::euclidean(2);
  const auto X = line_set({1, 1, 5, 5});
  const auto tr = run_trace(sq, X, 4, 0);
  CHECK(tr.length() == 2);
  CHECK(tr.truncated);
  CHECK(tr.prefixCosts.back() == 0.0);
}

TEST_CASE("trace length is validated") {
  const auto sq = MetricSpace<double>::euclidean(2);
  const auto X = line_set({0, 1});
  CHECK_THROWS_AS(run_trace(sq, X, 0, 0), StructuralError);
  CHECK_THROWS_AS(run_trace(sq, X, 3, 0), StructuralError);
}

TEST_CASE("heavier points are drawn first more often") {
  const auto sq = MetricSpace<double>::euclidean(2);
  const auto X = line_set({0, 1}, {3, 1});
  int first = 0;
  const int trials = 8000;
  for (int t = 0; t < trials; ++t) first += run_trace(sq, X, 1, static_cast<std::uint64_t>(t)).indices[0] == 0;
  CHECK(std::abs(first - 0.75 * trials) <= 4 * std::sqrt(trials * 0.75 * 0.25));
}

TEST_CASE("precomputed spaces run kmeans++") {
  Matrix<double> D(3, 3);
  D << 0, 1, 4, 1, 0, 1, 4, 1, 0;
  const auto s = MetricSpace<double>::precomputed(D, 2);
  const auto X = WeightedPointSet<double>::indices(3, Vector<double>::Ones(3));
  const auto tr = run_trace(s, X, 3, 5);
  CHECK(tr.length() == 3);
  CHECK(tr.prefixCosts.back() == 0.0);
}

TEST_CASE("for_each_prefix replays the trace") {
  const auto data = gen_gmm(1000, 2, 3, 4);
  const auto sq = MetricSpace<double>::euclidean(2);
  const auto tr = run_trace(sq, data.points, 6, 8);
  std::vector<double> replay;
  for_each_prefix(sq, data.points.points(), tr.centroids, [&](Index, const Assignment<double>& a) {
    replay.push_back(weighted_cost(data.points.weights(), a.dist));
  });
  REQUIRE(replay.size() == tr.prefixCosts.size());
  for (std::size_t i = 0; i < replay.size(); ++i) CHECK(replay[i] == doctest::Approx(tr.prefixCosts[i]).epsilon(1e-12));
}
