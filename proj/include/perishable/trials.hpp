#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace perishable {

/// Trials are grouped into fixed-size blocks; block results are merged in block
/// order, so a report does not depend on how many workers ran it.
inline constexpr std::size_t kTrialBlock = 256;

/// Runs `trial(t, acc)` for t = 0..trials-1 over `workers` threads.
/// `make()` yields an empty accumulator; Acc must provide merge(const Acc&).
template <class Acc, class Make, class Trial>
Acc parallel_trials(std::size_t trials, std::size_t workers, Make make, Trial trial) {
  const std::size_t blocks = (trials + kTrialBlock - 1) / kTrialBlock;
  std::vector<Acc> partial;
  partial.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) partial.push_back(make());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t b = next++; b < blocks; b = next++) {
      try {
        const std::size_t end = std::min(trials, (b + 1) * kTrialBlock);
        for (std::size_t t = b * kTrialBlock; t < end; ++t) trial(t, partial[b]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(blocks, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  Acc total = make();
  for (const Acc& p : partial) total.merge(p);
  return total;
}

/// Sum and sum of squares of a scalar sample.
struct Moments {
  std::size_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double v) {
    ++count;
    sum += v;
    sum_sq += v * v;
  }

  void merge(const Moments& o) {
    count += o.count;
    sum += o.sum;
    sum_sq += o.sum_sq;
  }

  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }

  /// Standard error of the mean (unbiased variance).
  double stderr_of_mean() const {
    if (count < 2) return 0.0;
    const double n = static_cast<double>(count);
    const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
    return std::sqrt(var / n);
  }
};

}  // namespace perishable
