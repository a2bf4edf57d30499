#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace swave {

// Runs `replicas` independent evaluations on a pool of `workers` threads.
// Replicas are grouped in fixed chunks; each chunk is reduced in replica
// order and chunks are merged in chunk order, so the result does not depend
// on the number of workers.  `body(replica, acc)` folds one replica into a
// chunk accumulator; Acc must provide merge(const Acc&).
template <class Acc, class Body>
Acc run_replicas(std::size_t replicas, unsigned workers, const Acc& init,
                 Body&& body, std::size_t chunk = 16) {
  if (chunk == 0) chunk = 1;
  const std::size_t chunks = (replicas + chunk - 1) / chunk;
  std::vector<Acc> partial(chunks, init);
  std::vector<std::exception_ptr> errors(chunks);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (;;) {
      std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        std::size_t end = std::min(replicas, (c + 1) * chunk);
        for (std::size_t r = c * chunk; r < end; ++r) body(r, partial[c]);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };

  unsigned pool = std::max(1u, std::min<unsigned>(
                                   workers, static_cast<unsigned>(chunks)));
  if (pool == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (unsigned t = 0; t < pool; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }

  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  Acc total = init;
  for (const auto& p : partial) total.merge(p);
  return total;
}

// Collects one value per replica, stored by replica id.
template <class T>
struct ReplicaTable {
  std::vector<std::pair<std::size_t, T>> rows;
  void merge(const ReplicaTable& o) {
    rows.insert(rows.end(), o.rows.begin(), o.rows.end());
  }
};

}  // namespace swave
