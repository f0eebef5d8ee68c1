#include "ddcm/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

#include <cblas.h>

#include "ddcm/error.hpp"

namespace ddcm {
namespace {

int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::atomic<int> g_threads{default_threads()};

}  // namespace

void set_num_threads(int threads) {
  if (threads < 1) throw ConfigError("thread count must be >= 1, got " + std::to_string(threads));
  g_threads = threads;
  openblas_set_num_threads(threads);
}

int num_threads() noexcept { return g_threads.load(); }

void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& fn, std::int64_t grain) {
  const std::int64_t total = end - begin;
  if (total <= 0) return;
  const std::int64_t max_workers = std::max<std::int64_t>(1, total / std::max<std::int64_t>(grain, 1));
  const auto workers = std::min<std::int64_t>(num_threads(), max_workers);
  if (workers <= 1) {
    fn(begin, end);
    return;
  }
  const std::int64_t chunk = (total + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (std::int64_t w = 1; w < workers; ++w) {
    const std::int64_t lo = begin + w * chunk;
    const std::int64_t hi = std::min(end, lo + chunk);
    if (lo < hi) pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  fn(begin, std::min(end, begin + chunk));
  for (auto& t : pool) t.join();
}

}  // namespace ddcm
