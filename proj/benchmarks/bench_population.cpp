#include <benchmark/benchmark.h>

#include "nnri/population.hpp"
#include "nnri/simulation.hpp"

namespace {

void BM_GeneratePopulation(benchmark::State& state) {
  nnri::PopulationConfig config;
  config.scenario = static_cast<nnri::Scenario>(state.range(0));
  config.population_size = 1000;
  config.seed = 3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(nnri::generate_population(config));
  }
}
BENCHMARK(BM_GeneratePopulation)->Arg(0)->Arg(1)->Arg(2);

void BM_Replicate(benchmark::State& state) {
  nnri::StudyConfig config;
  config.scenario = nnri::Scenario::kUniform100k;
  config.population_size = 1000;
  config.replicates = 2;
  config.seed = 5;
  config.estimation.methods = {nnri::VarianceMethod::kNaive,
                               nnri::VarianceMethod::kParam2,
                               nnri::VarianceMethod::kParam2M};
  int b = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(nnri::run_replicate(config, b++ % 1000));
  }
}
BENCHMARK(BM_Replicate);

}  // namespace

BENCHMARK_MAIN();
