#include "aedr/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace aedr {

int resolve_workers(int requested, std::size_t jobs) {
  int workers = requested;
  if (workers <= 0) {
    if (const char* env = std::getenv("AEDR_WORKERS")) {
      try {
        workers = std::stoi(env);
      } catch (const std::exception&) {
        workers = 0;
      }
    }
  }
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(workers, 1);
  if (jobs > 0) workers = static_cast<int>(std::min<std::size_t>(workers, jobs));
  return workers;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  workers = resolve_workers(workers, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::jthread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) threads.emplace_back(body);
  threads.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace aedr
