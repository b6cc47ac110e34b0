#ifndef SKYHEAL_PARALLEL_HPP
#define SKYHEAL_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace skyheal {

// Runs fn(i) for i in [0, count) on up to `threads` workers. Callers write
// results into slot i, so the outcome never depends on scheduling.
template <class Fn>
void parallel_for(int count, int threads, Fn&& fn)
{
  threads = std::clamp(threads, 1, std::max(1, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        fn(i);
      }
    });
  }
}

} // namespace skyheal

#endif // SKYHEAL_PARALLEL_HPP
