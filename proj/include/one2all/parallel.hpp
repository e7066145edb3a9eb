#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <vector>

namespace one2all {

namespace detail {

inline std::atomic<int>& thread_setting() {
  static std::atomic<int> value{0};
  return value;
}

}  // namespace detail

/// Number of worker threads used by data-parallel passes. 0 selects the
/// `ONE2ALL_THREADS` environment variable, falling back to hardware concurrency.
inline void set_thread_count(int threads) { detail::thread_setting().store(std::max(0, threads)); }

inline int thread_count() {
  int t = detail::thread_setting().load();
  if (t > 0) return t;
  if (const char* env = std::getenv("ONE2ALL_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Chunk size for point-parallel loops. Fixed so that reductions are
/// combined in the same order no matter how many threads run.
inline constexpr Eigen::Index kChunk = 8192;

/// Calls `body(begin, end, chunk_index)` on consecutive ranges of [0, n).
/// Chunk boundaries depend only on n.
template <typename Body>
void for_each_chunk(Eigen::Index n, Body&& body) {
  const Eigen::Index chunks = (n + kChunk - 1) / kChunk;
  const int workers = static_cast<int>(std::min<Eigen::Index>(thread_count(), chunks));
  if (workers <= 1) {
    for (Eigen::Index c = 0; c < chunks; ++c) body(c * kChunk, std::min(n, (c + 1) * kChunk), c);
    return;
  }
  std::atomic<Eigen::Index> next{0};
  auto run = [&] {
    for (Eigen::Index c = next++; c < chunks; c = next++) body(c * kChunk, std::min(n, (c + 1) * kChunk), c);
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (int t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
}

/// Neumaier-compensated accumulator.
template <typename Scalar>
class CompensatedSum {
 public:
  void add(Scalar v) {
    Scalar t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  void add(const CompensatedSum& other) {
    add(other.sum_);
    add(other.comp_);
  }
  Scalar value() const { return sum_ + comp_; }

 private:
  Scalar sum_ = 0;
  Scalar comp_ = 0;
};

/// Compensated sum of `term(i)` over [0, n), reduced chunk by chunk in index order.
template <typename Scalar, typename Term>
Scalar reduce_sum(Eigen::Index n, Term&& term) {
  const Eigen::Index chunks = (n + kChunk - 1) / kChunk;
  std::vector<CompensatedSum<Scalar>> partial(static_cast<std::size_t>(chunks));
  for_each_chunk(n, [&](Eigen::Index b, Eigen::Index e, Eigen::Index c) {
    CompensatedSum<Scalar> s;
    for (Eigen::Index i = b; i < e; ++i) s.add(term(i));
    partial[static_cast<std::size_t>(c)] = s;
  });
  CompensatedSum<Scalar> total;
  for (const auto& s : partial) total.add(s);
  return total.value();
}

}  // namespace one2all
