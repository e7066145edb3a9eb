#pragma once

#include "one2all/core.hpp"

#include <initializer_list>
#include <vector>

namespace one2all::testing {

// Points on the real line as a 1 x n matrix.
inline Matrix<double> line(std::initializer_list<double> xs) {
  Matrix<double> m(1, static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) m(0, i++) = x;
  return m;
}

inline WeightedPointSet<double> line_set(std::initializer_list<double> xs) { return WeightedPointSet<double>(line(xs)); }

inline WeightedPointSet<double> line_set(std::initializer_list<double> xs, std::initializer_list<double> ws) {
  Vector<double> w(static_cast<Index>(ws.size()));
  Index i = 0;
  for (double v : ws) w(i++) = v;
  return WeightedPointSet<double>(line(xs), w);
}

inline CentroidSet<double> line_centroids(std::initializer_list<double> xs) { return CentroidSet<double>(line(xs)); }

// Plain squared distance to the nearest centroid, no library code involved.
inline double brute_cost(const Matrix<double>& X, const Vector<double>& w, const Matrix<double>& Q, double power) {
  double total = 0;
  for (Index i = 0; i < X.cols(); ++i) {
    double best = -1;
    for (Index j = 0; j < Q.cols(); ++j) {
      double s = 0;
      for (Index t = 0; t < X.rows(); ++t) s += (X(t, i) - Q(t, j)) * (X(t, i) - Q(t, j));
      const double d = std::pow(std::sqrt(s), power);
      if (best < 0 || d < best) best = d;
    }
    total += w(i) * best;
  }
  return total;
}

}  // namespace one2all::testing
