#ifndef RELCI_PARALLEL_H_
#define RELCI_PARALLEL_H_

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace relci {

// Runs body(i) for i in [0, count) on up to `threads` workers. Work items are
// claimed dynamically, so callers must write results to index-addressed
// storage. The first exception thrown is rethrown after all workers join.
inline void ParallelFor(int count, int threads,
                        const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& thread : pool) thread.join();
  if (error) std::rethrow_exception(error);
}

inline int DefaultThreads() {
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace relci

#endif  // RELCI_PARALLEL_H_
