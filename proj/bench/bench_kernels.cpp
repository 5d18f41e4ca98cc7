// Wall-clock comparison of the serial reference loops against the OpenMP kernels.
// Usage: bench_kernels [repeats]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "sloppykit/fim.hpp"
#include "sloppykit/identifiability.hpp"
#include "sloppykit/models.hpp"
#include "sloppykit/multiscale.hpp"
#include "sloppykit/reference.hpp"

using namespace sloppykit;

namespace {

double best_of(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, int repeats, const std::function<void(Execution)>& fn) {
  const double serial = best_of(repeats, [&] { fn(Execution::Serial); });
  const double parallel = best_of(repeats, [&] { fn(Execution::Parallel); });
  std::printf("%-28s %10.4f %10.4f %8.2fx\n", name, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 3;
  std::printf("threads: %d, repeats: %d\n", omp_get_max_threads(), repeats);
  std::printf("%-28s %10s %10s %9s\n", "kernel", "serial s", "openmp s", "speedup");

  const auto se = models::make_sum_exp({1.0 / 3, 1, 3});
  const Vector p0 = (Vector(2) << 4, 0.5).finished();
  const GridAxis x{0, 0, 8, 400}, y{1, 0, 8, 400};
  row("level-set grid 400x400", repeats, [&](Execution e) { level_set_grid(se, p0, x, y, true, e); });

  const double ref = best_of(repeats, [&] { reference::level_set_grid(se, p0, x, y, true); });
  std::printf("%-28s %10.4f\n", "  reference loop", ref);

  row("delta sloppiness 8 radii", repeats, [&](Execution e) {
    DeltaOptions o;
    o.seed = 1;
    o.execution = e;
    delta_sloppiness(se, p0, {0.01, 0.1, 0.25, 0.5, 1, 1.5, 2, 3}, o);
  });

  const auto se_k = models::make_sum_exp({1.0 / 3, 1, 3}, {std::nullopt, 1000});
  row("MLE covariance 1000 trials", repeats, [&](Execution e) {
    MleCovarianceOptions o;
    o.trials = 1000;
    o.seed = 2;
    o.execution = e;
    mle_covariance_mc(se_k, (Vector(2) << 4, 0.125).finished(), o);
  });

  const auto line = models::make_line({0, 1});
  row("coverage 2000 trials", repeats, [&](Execution e) {
    simulate_coverage(line, (Vector(2) << 1, 2).finished(), 0.05, 2000, 3, e);
  });
  return 0;
}
