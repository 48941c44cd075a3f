#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace vtrace {

/// Number of worker threads used by the per-atom maps in quadrature and
/// assembly. Reductions never depend on this value: terms are written to
/// a buffer and summed sequentially, so results are bit-identical for any
/// thread count.
void set_thread_count(unsigned threads);
unsigned thread_count();

/// Calls body(begin, end) over disjoint chunks covering [0, n). Runs
/// inline when n is small or a single thread is configured.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body);

/// Neumaier-compensated sum in index order.
double compensated_sum(std::span<const double> terms);

/// Running Neumaier accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if ((sum_ >= 0 ? sum_ : -sum_) >= (x >= 0 ? x : -x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace vtrace
