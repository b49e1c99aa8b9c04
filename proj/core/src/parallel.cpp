#include "qstrat/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace qstrat {
namespace {

std::atomic<int> g_threads{1};
// Nested loops inside a worker run serially.
thread_local bool t_in_worker = false;

constexpr std::size_t kSumBlock = 256;

}  // namespace

void set_thread_count(int threads) { g_threads.store(std::max(1, threads)); }

int thread_count() { return g_threads.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(thread_count());
  if (workers <= 1 || n < 2 || t_in_worker) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  // Dynamic chunk hand-out; every index writes only its own output slot.
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  std::size_t err_index = n;
  const std::size_t chunk = std::max<std::size_t>(1, n / (workers * 8));
  auto worker = [&] {
    const bool outer = t_in_worker;
    t_in_worker = true;
    for (;;) {
      const std::size_t begin = next.fetch_add(chunk);
      if (begin >= n) break;
      const std::size_t end = std::min(n, begin + chunk);
      for (std::size_t i = begin; i < end; ++i) {
        try {
          body(i);
        } catch (...) {
          // Keep the failure with the lowest index so the reported error matches a serial run.
          std::lock_guard lock(err_mutex);
          if (i < err_index) {
            err_index = i;
            err = std::current_exception();
          }
        }
      }
    }
    t_in_worker = outer;
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < std::min(workers, n); ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double deterministic_sum(std::size_t n, const std::function<double(std::size_t)>& f) {
  const std::size_t blocks = (n + kSumBlock - 1) / kSumBlock;
  std::vector<double> partial(blocks, 0.0);
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t begin = b * kSumBlock;
    const std::size_t end = std::min(n, begin + kSumBlock);
    double buf[kSumBlock];
    for (std::size_t i = begin; i < end; ++i) buf[i - begin] = f(i);
    partial[b] = pairwise_sum(std::span<const double>(buf, end - begin));
  });
  return pairwise_sum(partial);
}

}  // namespace qstrat
