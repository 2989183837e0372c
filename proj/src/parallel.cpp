#include "rlx/parallel.hpp"

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace rlx {

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  if (n <= 0) return;
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  // Static contiguous chunks; chunk boundaries depend only on n and threads.
  for (int t = 0; t < threads; ++t) {
    const int lo = static_cast<int>(static_cast<long>(n) * t / threads);
    const int hi = static_cast<int>(static_cast<long>(n) * (t + 1) / threads);
    pool.emplace_back([lo, hi, &body] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (std::thread& th : pool) th.join();
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RLX_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

}  // namespace rlx
