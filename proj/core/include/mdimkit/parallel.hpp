#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace mdimkit {

/// Worker count used by the estimators. Defaults to MDIMKIT_THREADS or 1.
int thread_count();
void set_thread_count(int n);

/// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; callers
/// write results by index, so outputs do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, Fn&& fn) {
  std::vector<T> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

}  // namespace mdimkit
