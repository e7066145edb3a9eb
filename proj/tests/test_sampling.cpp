#include "doctest.h"
#include "helpers.hpp"

#include "one2all/data.hpp"
#include "one2all/probabilities.hpp"
#include "one2all/sampling.hpp"

#include <random>

using namespace one2all;
using namespace one2all::testing;

TEST_CASE("pps base examples") {
  const auto sq = MetricSpace<double>::euclidean(2);
  auto b = pps_base(sq, line_set({0, 4, 10}), line_centroids({0, 10}));
  CHECK(b.psi(0) == 0);
  CHECK(b.psi(1) == 1);
  CHECK(b.psi(2) == 0);
  b = pps_base(sq, line_set({-1, 1}), line_centroids({0}));
  CHECK(b.psi(0) == 0.5);
  CHECK(b.psi(1) == 0.5);
  b = pps_base(sq, line_set({0, 1, 3}), line_centroids({0}));
  CHECK(b.psi(1) == doctest::Approx(0.1));
  CHECK(b.psi(2) == doctest::Approx(0.9));
  CHECK_THROWS_AS(pps_base(sq, line_set({0, 1}), line_centroids({0, 1})), DegenerateDistribution);
}

TEST_CASE("cap operator") {
  Vector<double> b(3);
  b << 0, 0.1, 0.5;
  const auto c = cap(4.0, b);
  CHECK(c(0) == 0);
  CHECK(c(1) == doctest::Approx(0.4));
  CHECK(c(2) == 1);
  const auto inf = cap(std::numeric_limits<double>::infinity(), b);
  CHECK(inf(0) == 0);
  CHECK(inf(1) == 1);
}

TEST_CASE("multi-objective pps by enumeration") {
  const auto sq = MetricSpace<double>::euclidean(2);
  const auto X = line_set({0, 4, 10});
  // Q={0}: d=(0,16,100)/116; Q={4}: (16,0,36)/52; Q={10}: (100,36,0)/136.
  const auto mo = mo_pps_bruteforce(sq, X, 1);
  CHECK(mo.sets == 3);
  CHECK(mo.psi(0) == doctest::Approx(std::max(16.0 / 52, 100.0 / 136)));
  CHECK(mo.psi(1) == doctest::Approx(std::max(16.0 / 116, 36.0 / 136)));
  CHECK(mo.psi(2) == doctest::Approx(std::max(100.0 / 116, 36.0 / 52)));

  const auto two = mo_pps_bruteforce(sq, X, 2);
  CHECK(two.sets == 3);
  // Each pair leaves one point uncovered, which then carries all the cost.
  CHECK((two.psi.array() == 1.0).all());
  CHECK_THROWS_AS(mo_pps_bruteforce(sq, gen_gmm(100, 2, 2, 1).points, 6), StructuralError);
}

TEST_CASE("multi-objective overhead respects the k-clustering bound") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> g;
  for (double power : {1.0, 2.0}) {
    const auto space = MetricSpace<double>::euclidean(power);
    const double rho = space.rho();
    for (int rep = 0; rep < 10; ++rep) {
      Matrix<double> X(2, 8);
      for (Index i = 0; i < X.size(); ++i) X(i) = g(gen);
      const auto mo = mo_pps_bruteforce(space, WeightedPointSet<double>(X), 2);
      CHECK(mo.overhead <= 8 * rho * rho * 2 + 2 * rho);
    }
  }
}

TEST_CASE("draw with p = 1 keeps everything at original weight") {
  const auto X = line_set({0, 1, 2}, {1, 2, 3});
  const auto S = CoordinatedSample<double>::draw(X, Vector<double>::Ones(3), 4);
  CHECK(S.size() == 3);
  CHECK(S.adjusted_weights() == X.weights());
  CHECK(S.saturated());
}

TEST_CASE("draw at p = 1/2 concentrates") {
  Matrix<double> X = Matrix<double>::Zero(1, 100000);
  const auto S = CoordinatedSample<double>::draw(WeightedPointSet<double>(X), Vector<double>::Constant(100000, 0.5), 17);
  CHECK(std::abs(S.size() - 50000) <= 700);
}

TEST_CASE("members are exactly the u <= p set and w' p = w") {
  const auto data = gen_gmm(5000, 2, 3, 5);
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> up(0, 1);
  Vector<double> p(5000);
  for (Index i = 0; i < 5000; ++i) p(i) = i % 10 == 0 ? 0.0 : up(gen);
  const auto S = CoordinatedSample<double>::draw(data.points, p, 33);
  std::vector<Index> expect;
  for (Index i = 0; i < 5000; ++i)
    if (p(i) > 0 && counter_uniform(33, static_cast<std::uint64_t>(i)) <= p(i)) expect.push_back(i);
  CHECK(S.members() == expect);
  for (Index j = 0; j < S.size(); ++j) {
    const Index x = S.members()[static_cast<std::size_t>(j)];
    CHECK(S.adjusted_weights()(j) * p(x) == doctest::Approx(data.points.weight(x)).epsilon(1e-15));
  }
}

TEST_CASE("growing probabilities never evicts members") {
  const auto data = gen_gmm(3000, 2, 3, 6);
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> up(0, 1);
  for (int schedule = 0; schedule < 20; ++schedule) {
    Vector<double> p(3000);
    for (Index i = 0; i < 3000; ++i) p(i) = 0.05 * up(gen);
    auto S = CoordinatedSample<double>::draw(data.points, p, static_cast<std::uint64_t>(schedule));
    for (int step = 0; step < 8; ++step) {
      for (Index i = 0; i < 3000; ++i) p(i) = std::min(1.0, p(i) * (1 + 2 * up(gen)));
      auto next = S.grow(data.points, p);
      CHECK(std::includes(next.members().begin(), next.members().end(), S.members().begin(), S.members().end()));
      S = std::move(next);
    }
  }
  Vector<double> p = Vector<double>::Constant(3000, 0.5);
  const auto S = CoordinatedSample<double>::draw(data.points, p, 1);
  p(0) = 0.25;
  CHECK_THROWS_AS(S.grow(data.points, p), StructuralError);
}

TEST_CASE("estimate is exact on a full sample and zero when Q covers X") {
  const auto sq = MetricSpace<double>::euclidean(2);
  const auto X = line_set({0, 4, 10}, {1, 2, 1});
  const auto full = CoordinatedSample<double>::draw(X, Vector<double>::Ones(3), 0);
  CHECK(estimate_cost(sq, full, line_centroids({0, 10})) == 32.0);
  Vector<double> p(3);
  p << 0.3, 0.6, 0.9;
  for (std::uint64_t s = 0; s < 20; ++s)
    CHECK(estimate_cost(sq, CoordinatedSample<double>::draw(X, p, s), line_centroids({0, 4, 10})) == 0.0);
  Matrix<double> q2 = Matrix<double>::Zero(2, 1);
  CHECK_THROWS_AS(estimate_cost(sq, full, CentroidSet<double>(q2)), StructuralError);
}

TEST_CASE("pps estimator is unbiased with CV at most eps") {
  const auto sq = MetricSpace<double>::euclidean(2);
  const auto data = gen_gmm(4000, 3, 4, 8);
  const auto Q = data.groundTruth->prefix(3);
  const auto base = pps_base(sq, data.points, Q);
  const double V = base.cost;
  const double eps = 0.2;
  const auto p = cap(1 / (eps * eps), base.psi);

  // Var = sum_x c_x^2 (1 - p_x) / p_x with c_x = psi_x V.
  double var = 0;
  for (Index i = 0; i < p.size(); ++i)
    if (p(i) > 0) var += std::pow(base.psi(i) * V, 2) * (1 - p(i)) / p(i);
  const double cv = std::sqrt(var) / V;
  CHECK(cv <= eps);

  const int draws = 2000;
  std::vector<double> est;
  for (int t = 0; t < draws; ++t)
    est.push_back(estimate_cost(sq, CoordinatedSample<double>::draw(data.points, p, derive_seed(5, static_cast<std::uint64_t>(t))), Q));
  double mean = 0;
  for (double e : est) mean += e / draws;
  double svar = 0;
  for (double e : est) svar += (e - mean) * (e - mean) / (draws - 1);
  CHECK(std::abs(mean - V) <= 3 * std::sqrt(svar / draws));
  // Sample standard deviation within 4 standard errors of the exact one.
  CHECK(std::abs(std::sqrt(svar) / V - cv) <= 4 * cv / std::sqrt(2.0 * draws) * 1.5);
}

TEST_CASE("tail bound closed forms") {
  CHECK(overestimate_bound(0.25, 0.5) == doctest::Approx(std::min(0.5, std::exp(-0.75 * std::log(4.0) * 2))));
  CHECK(overestimate_bound(0.5, 0.5) == doctest::Approx(std::exp(-0.5 * std::log(2.0) * 2)));
  CHECK_THROWS_AS(overestimate_bound(0.75, 0.5), StructuralError);
  CHECK(upper_tail_bound(1, 1, 0.5) == doctest::Approx(std::exp(-std::log(2.0) * 4 / 2)));
  CHECK(lower_tail_bound(0.5, 1, 0.5) == doctest::Approx(std::exp(-0.25 * 4 / 2)));
}

TEST_CASE("concentration checks") {
  const auto sq = MetricSpace<double>::euclidean(2);
  const auto data = gen_gmm(2000, 2, 3, 3);
  const auto Q = data.groundTruth->prefix(2);
  const auto one = concentration_check(sq, data.points, Q, 1.0, 0.5, 2000, 1);
  CHECK(one.threshold == 2);
  CHECK(one.within());
  const auto quarter = concentration_check(sq, data.points, Q, 0.25, 0.5, 2000, 2);
  CHECK(quarter.threshold == 4);
  CHECK(quarter.within());
  // p = 1 everywhere: the estimate is exact.
  const auto sure = concentration_check(sq, data.points, Q, 1.0, 0.001, 50, 3);
  CHECK(sure.overestimates == 0);
}
