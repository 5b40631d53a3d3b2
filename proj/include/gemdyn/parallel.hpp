// Copyright 2026 The gemdyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GEMDYN_PARALLEL_HPP_
#define GEMDYN_PARALLEL_HPP_

// Fan-out of independent jobs over a few threads. Every job owns its RNG
// streams, so results do not depend on the worker count.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "gemdyn/errors.hpp"

namespace gemdyn {

// GEM_NUM_WORKERS when set, otherwise the hardware thread count.
inline int worker_limit() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* v = std::getenv("GEM_NUM_WORKERS")) {
    char* end = nullptr;
    const long parsed = std::strtol(v, &end, 10);
    if (end == v || *end != '\0' || parsed < 1)
      throw ContractError("GEM_NUM_WORKERS must be a positive integer");
    n = static_cast<int>(parsed);
  }
  return n;
}

// Runs job(i) for i in [0, n). The first failing index (in index order) is
// rethrown after all jobs finish.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& job) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace gemdyn

#endif  // GEMDYN_PARALLEL_HPP_
