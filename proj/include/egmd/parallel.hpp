// SPDX-License-Identifier: Apache-2.0

#ifndef EGMD_PARALLEL_HPP
#define EGMD_PARALLEL_HPP

#include <cstddef>
#include <type_traits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace egmd::parallel
{

// Thread count used by the dispatching kernels. 1 selects the serial reference paths.
int threads();
void set_threads(int n);

// Evaluates fn(i) for i in [0, n) and returns the results in index order. The OpenMP variant
// only parallelizes the evaluation; callers merge results serially, so the outcome is
// bitwise identical to the serial variant.
template <class Fn>
auto map_serial(std::size_t n, Fn &&fn)
{
  using T = std::invoke_result_t<Fn &, std::size_t>;
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    out[i] = fn(i);
  }
  return out;
}

template <class Fn>
auto map_omp(std::size_t n, Fn &&fn)
{
  using T = std::invoke_result_t<Fn &, std::size_t>;
  std::vector<T> out(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) num_threads(threads())
  for (std::ptrdiff_t i = 0; i < count; ++i)
  {
    out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
  }
  return out;
}

template <class Fn>
auto map(std::size_t n, Fn &&fn)
{
  return threads() > 1 ? map_omp(n, fn) : map_serial(n, fn);
}

}  // namespace egmd::parallel

#endif  // EGMD_PARALLEL_HPP
