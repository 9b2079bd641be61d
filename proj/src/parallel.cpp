// SPDX-License-Identifier: Apache-2.0

#include "egmd/parallel.hpp"

#include <algorithm>
#include <atomic>

namespace egmd::parallel
{

namespace
{
std::atomic<int> g_threads{1};
}

int threads() { return g_threads.load(std::memory_order_relaxed); }

void set_threads(int n) { g_threads.store(std::max(1, n), std::memory_order_relaxed); }

}  // namespace egmd::parallel
