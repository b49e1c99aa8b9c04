#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace qstrat {

/// Process-wide worker count used by every data-parallel loop. Results never
/// depend on it: work is split into index ranges and reduced in index order.
void set_thread_count(int threads);
int thread_count();

/// Calls body(i) for every i in [0, n). Each index is visited exactly once.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Fixed-order pairwise summation; bit-identical for identical inputs.
double pairwise_sum(std::span<const double> values);

/// Sums f(i) over [0, n) with a reduction tree fixed by n alone.
double deterministic_sum(std::size_t n, const std::function<double(std::size_t)>& f);

}  // namespace qstrat
