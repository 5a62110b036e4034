#include "lanerl/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace lanerl {

int parallel_width() {
  static const int width = [] {
    if (const char* env = std::getenv("LANERL_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1) return std::min(v, 16);
    }
    unsigned int hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 8u));
  }();
  return width;
}

void parallel_ranges(std::size_t n, double flops_estimate,
                     const std::function<void(std::size_t, std::size_t)>& fn) {
  int width = parallel_width();
  // A spawn costs on the order of 50us; require enough work per extra thread.
  if (n == 0) return;
  if (width <= 1 || n < 2 || flops_estimate < 2e6) {
    fn(0, n);
    return;
  }
  std::size_t chunks = std::min<std::size_t>(static_cast<std::size_t>(width), n);
  std::vector<std::thread> workers;
  workers.reserve(chunks - 1);
  std::size_t base = n / chunks, rem = n % chunks, begin = 0;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t c = 0; c < chunks; ++c) {
    std::size_t len = base + (c < rem ? 1 : 0);
    ranges.emplace_back(begin, begin + len);
    begin += len;
  }
  for (std::size_t c = 1; c < chunks; ++c) {
    workers.emplace_back([&fn, r = ranges[c]] { fn(r.first, r.second); });
  }
  fn(ranges[0].first, ranges[0].second);
  for (std::thread& w : workers) w.join();
}

}  // namespace lanerl
