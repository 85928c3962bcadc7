#include <benchmark/benchmark.h>

#include "nnri/design.hpp"
#include "nnri/population.hpp"
#include "nnri/response.hpp"
#include "nnri/smooth.hpp"

namespace {

void BM_FitGam(benchmark::State& state) {
  nnri::PopulationConfig pc;
  pc.scenario = nnri::Scenario::kUniform100k;
  pc.population_size = 1000;
  pc.seed = 17;
  const auto pop = nnri::generate_population(pc);
  const auto sample = nnri::draw_sample(pop, nnri::default_design(), 17);
  const auto delta = nnri::draw_response(sample, nnri::mcar(0.75), 17);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nnri::fit_gam_multinomial(sample, delta));
  }
}
BENCHMARK(BM_FitGam)->Unit(benchmark::kMillisecond);

}  // namespace
