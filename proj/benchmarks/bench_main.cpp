#include <benchmark/benchmark.h>

#include "tlsim/analysis.hpp"
#include "tlsim/propagation.hpp"

namespace {

using namespace tlsim;

void BM_FresnelTransfer(benchmark::State& state) {
  const Grid grid{static_cast<std::size_t>(state.range(0)), 1388.0};
  const auto t = grating_transmission_profile(GratingSpec{.period_um = 1.0}, grid);
  const ComplexField f{CVector(t.begin(), t.end()), grid.spacing_um()};
  for (auto _ : state) benchmark::DoNotOptimize(fresnel_transfer(f, 10.295, 0.118));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FresnelTransfer)->Arg(1 << 14)->Arg(1 << 17)->Unit(benchmark::kMillisecond);

void BM_QuantumIntensity(benchmark::State& state) {
  SimulationConfig c;
  c.resolution.n_angles = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(quantum_intensity(c, 14.0, c.geometry.l2_m));
}
BENCHMARK(BM_QuantumIntensity)->Arg(64)->Arg(512)->Unit(benchmark::kSecond);

std::vector<Event> events(std::size_t n) {
  DetectorSpec det;
  return sample_events(sinusoid_model(5.881, 0.2, det), n, 1, det).events;
}

void BM_RayleighPower(benchmark::State& state) {
  const auto ev = events(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(rayleigh_power(ev, 5.881, 0.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RayleighPower)->Arg(10000)->Arg(1000000);

void BM_FitFringes(benchmark::State& state) {
  const auto ev = events(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_fringes(ev, {5.76, 6.0}, {-2.0, 2.0}));
}
BENCHMARK(BM_FitFringes)->Arg(20000)->Arg(200000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
