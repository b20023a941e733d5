// Serial reference vs OpenMP kernels. Arg 0 = serial, 1 = parallel.
#include <benchmark/benchmark.h>

#include <numbers>

#include "spopo/montecarlo.hpp"
#include "spopo/spectra.hpp"

using namespace spopo;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

void bm_noise_spectrum_full(benchmark::State& state) {
  const SpopoParams p = normalized_params(0.01, 0.9, 0.02);
  const HomodyneSetup lo = gaussian_lo_setup(1.0, 0.005, std::numbers::pi / 2);
  const std::vector<double> omega = linear_grid(0.0, 4 * std::numbers::pi, 256);
  for (auto _ : state) {
    benchmark::DoNotOptimize(noise_spectrum_full(p, lo, omega, Quadrature::Y, 0, mode(state)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(omega.size()));
}

void bm_run_monte_carlo(benchmark::State& state) {
  set_warning_handler([](const std::string&) {});
  const SpopoParams p = normalized_params(0.1, 0.9, 0.05);
  McConfig c(p, mc_grid(p, 16));
  c.n_traj = 64;
  c.n_pulses = 2000;
  c.exec = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(run_monte_carlo(c));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(c.n_traj * c.n_pulses));
}

}  // namespace

BENCHMARK(bm_noise_spectrum_full)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_run_monte_carlo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
