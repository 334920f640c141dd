#include "span/threading.hpp"

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace span {

int thread_budget() {
  int budget = 0;
  if (const char* env = std::getenv("SPAN_THREADS")) {
    try {
      budget = std::stoi(env);
    } catch (...) {
      budget = 1;
    }
    if (budget < 0) budget = 1;
  }
  if (budget == 0) {
    budget = static_cast<int>(std::thread::hardware_concurrency());
    if (budget < 1) budget = 1;
  }
  return budget;
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace span
