// Times the two parallel kernels (bootstrap replicates, sweep trials) at one
// worker versus all cores. Usage: stratbound_bench [replicates] [trials]
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "stratbound/bootstrap.hpp"
#include "stratbound/simulation.hpp"

using namespace stratbound;

namespace {

template <typename F>
double seconds(F&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t replicates = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 400;
  const std::size_t trials = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 8;

  SimScenario sc = echs_scenario();
  sc.noise_sd = {1.0, 1.0, 1.0};
  const LatentPopulation pop = simulate_population(sc, 1234);
  const Dataset ds = observe(pop, sc, 1234);

  AnalysisPlan plan;
  plan.slice = SlicePlan{};
  plan.slice->primary_covariate = "x1";
  plan.slice->primary_bins = 4;

  auto bootstrap_at = [&](int workers) {
    BootstrapConfig cfg;
    cfg.replicates = replicates;
    cfg.seed = 99;
    cfg.workers = workers;
    bootstrap_bounds(ds, plan, cfg);
  };
  auto grid_at = [&](int workers) {
    NoiseGridConfig cfg;
    cfg.sigma2 = {0.0, 1.0};
    cfg.trials = trials;
    cfg.seed = 99;
    cfg.workers = workers;
    run_noise_grid(sc, cfg);
  };

  bootstrap_at(1);  // warm-up

  const double boot_serial = seconds([&] { bootstrap_at(1); });
  const double boot_parallel = seconds([&] { bootstrap_at(0); });
  const double grid_serial = seconds([&] { grid_at(1); });
  const double grid_parallel = seconds([&] { grid_at(0); });

  std::printf("%-28s %10s %10s %8s\n", "task", "serial s", "all-core s", "speedup");
  std::printf("%-28s %10.3f %10.3f %8.2f\n", "bootstrap replicates", boot_serial,
              boot_parallel, boot_serial / boot_parallel);
  std::printf("%-28s %10.3f %10.3f %8.2f\n", "noise-grid trials", grid_serial,
              grid_parallel, grid_serial / grid_parallel);
  return 0;
}
