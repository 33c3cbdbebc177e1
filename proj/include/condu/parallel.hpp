#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace condu {

//! Number of workers to use when the caller passes 0.
inline std::size_t default_workers()
{
  auto hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

//! Runs body(i) for i in [0, count) on `workers` threads using a static
//! block partition. Each index is handled by exactly one call, so outputs
//! written per index do not depend on the worker count.
template <class Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body)
{
  if (workers == 0) {
    workers = default_workers();
  }
  workers = std::min(workers, std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      body(i);
    }
    return;
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t block = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * block;
    const std::size_t end = std::min(count, begin + block);
    threads.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) {
          body(i);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) {
    t.join();
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

} // namespace condu
