// Wall time of the path kernels under each execution mode.
//   bench_paths [n_paths] [threads]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <omp.h>

#include "ibplab/estimators.hpp"

using namespace ibplab;

namespace {

template <class Fn>
double time_ms(Fn&& fn, double& value) {
  const auto start = std::chrono::steady_clock::now();
  value = fn();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

const char* name_of(Execution e) {
  switch (e) {
    case Execution::Serial: return "serial";
    case Execution::Parallel: return "parallel";
    case Execution::ChunkedSerial: return "chunked-serial";
  }
  return "?";
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 20000;
  const int threads = argc > 2 ? std::atoi(argv[2]) : omp_get_max_threads();

  const auto sphere = SdeSystem::sphere2_bm();
  const PointOnM x{Vec(1, 0, 0)};
  const TangentVec v0{x.coords, Vec(0, 0, 1)};
  const auto f = CylFunctional::coord(2, 1.0);
  const auto h = CmProcess::linear(Vec(0, 0, 1));

  std::printf("paths %zu, m 512, threads %d\n", n, threads);
  std::printf("%-22s %-15s %12s %12s %22s\n", "kernel", "mode", "ms", "ns/step", "value");
  double serial_ms[2] = {0.0, 0.0};
  for (Execution e : {Execution::Serial, Execution::ChunkedSerial, Execution::Parallel}) {
    McConfig mc;
    mc.n_paths = n;
    mc.steps_per_unit = 512;
    mc.seed = 7;
    mc.run.execution = e;
    mc.run.threads = threads;
    const double steps = static_cast<double>(n) * 512.0;

    double value = 0.0;
    const double bel = time_ms([&] { return bismut_gradient(sphere, x, v0, f, 1.0, mc).value; }, value);
    std::printf("%-22s %-15s %12.1f %12.1f %22.17g\n", "bismut_gradient", name_of(e), bel, 1e6 * bel / steps, value);

    const double damped = time_ms([&] { return damped_ibp(sphere, x, f, h, 1.0, mc).z; }, value);
    std::printf("%-22s %-15s %12.1f %12.1f %22.17g\n", "damped_ibp", name_of(e), damped, 1e6 * damped / steps, value);

    if (e == Execution::Serial) {
      serial_ms[0] = bel;
      serial_ms[1] = damped;
    } else if (e == Execution::Parallel) {
      std::printf("speedup vs serial: bismut %.2fx, damped %.2fx\n", serial_ms[0] / bel, serial_ms[1] / damped);
    }
  }
  return 0;
}
