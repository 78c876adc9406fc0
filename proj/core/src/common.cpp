/*
 * Copyright (c) 2026, the graspcritic authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "graspcritic/common.hpp"

#include <algorithm>
#include <cstdio>
#include <thread>
#include <vector>

namespace graspcritic {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  int w = std::min(workers, n);
  if (w <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(w);
  for (int t = 0; t < w; ++t) {
    int begin = static_cast<int>(static_cast<long long>(n) * t / w);
    int end = static_cast<int>(static_cast<long long>(n) * (t + 1) / w);
    threads.emplace_back([begin, end, &fn] {
      for (int i = begin; i < end; ++i) fn(i);
    });
  }
  for (std::thread& t : threads) t.join();
}

}  // namespace graspcritic
