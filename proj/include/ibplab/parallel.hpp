#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ibplab/stats.hpp"

namespace ibplab {

enum class Execution {
  /// Chunks distributed over OpenMP threads, merged in chunk order.
  Parallel,
  /// Same chunking as Parallel on the calling thread; bit-identical to it.
  ChunkedSerial,
  /// Reference: one accumulator fed path by path.
  Serial,
};

struct RunOptions {
  Execution execution = Execution::Parallel;
  std::size_t chunk = 256;
  int threads = 0;  // 0: OpenMP default
};

template <std::size_t N>
using Accumulators = std::array<McAccumulator, N>;

namespace detail {

template <std::size_t N>
void add_all(Accumulators<N>& acc, const std::array<double, N>& sample) {
  for (std::size_t i = 0; i < N; ++i) acc[i].add(sample[i]);
}

template <std::size_t N>
void merge_all(Accumulators<N>& into, const Accumulators<N>& from) {
  for (std::size_t i = 0; i < N; ++i) into[i].merge(from[i]);
}

}  // namespace detail

/// Serial reference kernel driver.
template <std::size_t N, class Scratch, class Kernel>
Accumulators<N> run_paths_serial(std::size_t n, const Kernel& kernel) {
  Accumulators<N> acc{};
  Scratch scratch{};
  for (std::size_t i = 0; i < n; ++i) detail::add_all<N>(acc, kernel(i, scratch));
  return acc;
}

/// Evaluates kernel(i, scratch) -> std::array<double, N> for i in [0, n) and
/// accumulates every column. Chunk boundaries depend only on opts.chunk, so
/// Parallel and ChunkedSerial agree bit for bit at any thread count.
template <std::size_t N, class Scratch, class Kernel>
Accumulators<N> run_paths(std::size_t n, const Kernel& kernel, const RunOptions& opts = {}) {
  if (opts.execution == Execution::Serial) return run_paths_serial<N, Scratch>(n, kernel);

  const std::size_t chunk = std::max<std::size_t>(opts.chunk, 1);
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<Accumulators<N>> partial(n_chunks);

  auto run_chunk = [&](std::size_t c, Scratch& scratch) {
    const std::size_t begin = c * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    for (std::size_t i = begin; i < end; ++i) detail::add_all<N>(partial[c], kernel(i, scratch));
  };

  if (opts.execution == Execution::ChunkedSerial) {
    Scratch scratch{};
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c, scratch);
  } else {
    std::exception_ptr failure;
    const long long count = static_cast<long long>(n_chunks);
#ifdef _OPENMP
    const int threads = opts.threads > 0 ? opts.threads : omp_get_max_threads();
#pragma omp parallel num_threads(threads)
#endif
    {
      Scratch scratch{};
#ifdef _OPENMP
#pragma omp for schedule(dynamic, 1)
#endif
      for (long long c = 0; c < count; ++c) {
        try {
          run_chunk(static_cast<std::size_t>(c), scratch);
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical(ibplab_failure)
#endif
          if (!failure) failure = std::current_exception();
        }
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  Accumulators<N> total{};
  for (const auto& p : partial) detail::merge_all<N>(total, p);
  return total;
}

}  // namespace ibplab
