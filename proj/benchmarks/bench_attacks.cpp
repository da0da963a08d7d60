#include <benchmark/benchmark.h>

#include <flipforge/attacks.hpp>
#include <flipforge/certificates.hpp>
#include <flipforge/dictionary.hpp>
#include <flipforge/harness.hpp>
#include <flipforge/lattice.hpp>

using namespace flipforge;

static void BM_LllEmbedded(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const FlipDictionary dict = gaussian_dictionary(64, n, 1);
  const LatticeBasis basis{embedded_basis(dict, 0.3)};
  for (auto _ : state) benchmark::DoNotOptimize(lll_reduce(basis, 0.75));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LllEmbedded)->RangeMultiplier(2)->Range(8, 64)->Complexity();

static void BM_LatticeAttack(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const FlipDictionary dict = gaussian_dictionary(64, n, 2);
  const PlantedAttack p = plant_attack(dict, 5, 3);
  for (auto _ : state) benchmark::DoNotOptimize(bal_attack(dict, p.g_dagger, {0.3, 0.75, false}));
}
BENCHMARK(BM_LatticeAttack)->RangeMultiplier(2)->Range(8, 64);

static void BM_Pursuit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const FlipDictionary dict = gaussian_dictionary(64, n, 2);
  const PlantedAttack p = plant_attack(dict, 5, 3);
  for (auto _ : state) benchmark::DoNotOptimize(bmp_attack(dict, -p.g_dagger, {5, 0.0}));
}
BENCHMARK(BM_Pursuit)->RangeMultiplier(2)->Range(8, 64);

static void BM_Coherence(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    const FlipDictionary dict = gaussian_dictionary(200, n, 4);
    benchmark::DoNotOptimize(dict.coherence());
  }
}
BENCHMARK(BM_Coherence)->Arg(50)->Arg(200);

static void BM_BruteForce(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const FlipDictionary dict = gaussian_dictionary(8, n, 5);
  const PlantedAttack p = plant_attack(dict, 3, 6);
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_min_flip(dict, p.g_dagger, 1e-9));
}
BENCHMARK(BM_BruteForce)->DenseRange(8, 16, 4);
BENCHMARK_MAIN();
