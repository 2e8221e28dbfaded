#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace contrastgeo {

/// Evaluates fn(0..n-1) on a small thread pool and returns results in index
/// order, so output never depends on scheduling.  The first exception (by
/// index) is rethrown after all workers finish.
template <class T>
std::vector<T> parallel_map(int n, const std::function<T(int)>& fn, unsigned threads = 0) {
  std::vector<T> out(static_cast<std::size_t>(std::max(n, 0)));
  std::vector<std::exception_ptr> errors(out.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(n, 1)));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace contrastgeo
