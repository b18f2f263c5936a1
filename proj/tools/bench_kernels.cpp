// Micro-benchmark for the point-cloud distance kernels: serial reference vs
// the parallel implementation, over seeded random clouds of growing size.
//
//   bench_kernels [max_jobs]
//
// Prints one line per (size, jobs) pair with the speedup against serial.

#include <chrono>
#include <complex>
#include <iomanip>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "orbita/kernels.hpp"
#include "orbita/types.hpp"

namespace {

using orbita::CMat;
using Clock = std::chrono::steady_clock;

CMat random_cloud(int n, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CMat m(n, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < n; ++i) m(i, j) = {u(rng), u(rng)};
  return m;
}

template <typename F>
double time_ms(F&& f, int reps) {
  // One warm-up pass, then the best of `reps` timed passes.
  f();
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    f();
    const auto t1 = Clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const int max_jobs = argc > 1 ? std::max(1, std::atoi(argv[1])) : orbita::kernels::max_jobs();
  std::mt19937_64 rng(20240817u);

  std::cout << "directed max-min distance, n=3, reps: best-of-5\n";
  std::cout << std::left << std::setw(10) << "points" << std::setw(8) << "jobs" << std::setw(12)
            << "serial_ms" << std::setw(12) << "par_ms" << "speedup\n";

  for (int cols : {256, 1024, 4096}) {
    const CMat from = random_cloud(3, cols, rng);
    const CMat to = random_cloud(3, cols, rng);

    double ser = 0.0, par = 0.0;
    const double t_ser =
        time_ms([&] { ser = orbita::kernels::directed_max_min_distance_serial(from, to); }, 5);

    for (int jobs = 1; jobs <= max_jobs; jobs *= 2) {
      orbita::kernels::set_jobs(jobs);
      const double t_par =
          time_ms([&] { par = orbita::kernels::directed_max_min_distance(from, to); }, 5);
      if (ser != par) {
        std::cerr << "mismatch at " << cols << " points, jobs=" << jobs << ": " << ser
                  << " != " << par << '\n';
        return 1;
      }
      std::cout << std::left << std::setw(10) << cols << std::setw(8) << jobs << std::setw(12)
                << std::fixed << std::setprecision(3) << t_ser << std::setw(12) << t_par
                << std::setprecision(2) << t_ser / t_par << "x\n";
    }
  }
  return 0;
}
