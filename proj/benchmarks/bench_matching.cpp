#include <benchmark/benchmark.h>

#include "nnri/matching.hpp"
#include "nnri/response.hpp"

namespace {

nnri::Sample make_sample(int n) {
  nnri::Sample s;
  s.num_items = 2;
  s.stratum_size = {static_cast<double>(n)};
  s.stratum_count = {n};
  s.y.resize(n, 2);
  nnri::SubstreamRng rng(7, nnri::Stream::kGeneric);
  for (int i = 0; i < n; ++i) {
    s.id.push_back(i + 1);
    s.stratum.push_back(1);
    const double x = 1.0 + 99999.0 * rng.uniform01();
    s.x.push_back(x);
    s.weight.push_back(1.0);
    s.y(i, 0) = 0.6 * x;
    s.y(i, 1) = 0.4 * x;
  }
  return s;
}

void BM_MatchDonors(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const nnri::Sample s = make_sample(n);
  const std::vector<std::uint8_t> delta = nnri::draw_response(s, nnri::mcar(0.5), 11);
  const std::vector<int> cells(n, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nnri::match_donors(s, delta, cells));
  }
}
BENCHMARK(BM_MatchDonors)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_MatchDonorsBruteForce(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const nnri::Sample s = make_sample(n);
  const std::vector<std::uint8_t> delta = nnri::draw_response(s, nnri::mcar(0.5), 11);
  const std::vector<int> cells(n, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nnri::match_donors_bruteforce(s, delta, cells));
  }
}
BENCHMARK(BM_MatchDonorsBruteForce)->Arg(1000)->Arg(4000);

}  // namespace
