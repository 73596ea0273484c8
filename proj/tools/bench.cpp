// Serial-reference vs OpenMP kernel comparison. The world-space kernels
// dominate satisfaction and relation updates, the frontier loop dominates
// exploration; run with --benchmark_filter=... to pick one.

#include <benchmark/benchmark.h>

#include <random>

#include "kepal/cluedo.hpp"
#include "kepal/kern.hpp"
#include "kepal/parser.hpp"
#include "kepal/pool.hpp"

using namespace kepal;

namespace {

PartitionRelation make_partition(std::uint32_t at, std::uint32_t blocks) {
  std::mt19937_64 rng(12345);
  const std::uint32_t n = 1u << at;
  std::vector<std::uint64_t> keys(n);
  for (auto& k : keys) k = rng() % blocks;
  return PartitionRelation::from_keys(keys);
}

WorldSet make_set(std::uint32_t at) {
  std::mt19937_64 rng(54321);
  const std::uint32_t n = 1u << at;
  WorldSet s(n);
  for (std::uint32_t w = 0; w < n; ++w)
    if (rng() & 1) s.set(w);
  return s;
}

void bm_know_filter_serial(benchmark::State& state) {
  auto r = make_partition(static_cast<std::uint32_t>(state.range(0)), 1024);
  auto s = make_set(static_cast<std::uint32_t>(state.range(0)));
  WorldSet out;
  for (auto _ : state) {
    kern::serial::know_filter(r, s, out);
    benchmark::DoNotOptimize(out);
  }
}

void bm_know_filter_parallel(benchmark::State& state) {
  auto r = make_partition(static_cast<std::uint32_t>(state.range(0)), 1024);
  auto s = make_set(static_cast<std::uint32_t>(state.range(0)));
  WorldSet out;
  for (auto _ : state) {
    kern::know_filter(r, s, out);
    benchmark::DoNotOptimize(out);
  }
}

void bm_split_serial(benchmark::State& state) {
  auto r = make_partition(static_cast<std::uint32_t>(state.range(0)), 1024);
  auto s = make_set(static_cast<std::uint32_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kern::serial::split_blocks(r, s));
}

void bm_split_parallel(benchmark::State& state) {
  auto r = make_partition(static_cast<std::uint32_t>(state.range(0)), 1024);
  auto s = make_set(static_cast<std::uint32_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kern::split_blocks(r, s));
}

void bm_merge_serial(benchmark::State& state) {
  auto r = make_partition(static_cast<std::uint32_t>(state.range(0)), 1024);
  for (auto _ : state) benchmark::DoNotOptimize(kern::serial::merge_flip(r, 3));
}

void bm_merge_parallel(benchmark::State& state) {
  auto r = make_partition(static_cast<std::uint32_t>(state.range(0)), 1024);
  for (auto _ : state) benchmark::DoNotOptimize(kern::merge_flip(r, 3));
}

void bm_explore(benchmark::State& state, bool parallel) {
  cluedo::Config cfg{3, 2, 1, 1};
  auto spec = cluedo::build_system(cfg);
  for (auto _ : state) {
    auto r = explore(spec, ExploreOptions{1'000'000, UINT32_MAX, parallel});
    benchmark::DoNotOptimize(r.graph.n_states());
  }
}

void bm_explore_serial(benchmark::State& state) { bm_explore(state, false); }
void bm_explore_parallel(benchmark::State& state) { bm_explore(state, true); }

}  // namespace

BENCHMARK(bm_know_filter_serial)->Arg(14)->Arg(18)->Arg(20);
BENCHMARK(bm_know_filter_parallel)->Arg(14)->Arg(18)->Arg(20);
BENCHMARK(bm_split_serial)->Arg(14)->Arg(18)->Arg(20);
BENCHMARK(bm_split_parallel)->Arg(14)->Arg(18)->Arg(20);
BENCHMARK(bm_merge_serial)->Arg(14)->Arg(18)->Arg(20);
BENCHMARK(bm_merge_parallel)->Arg(14)->Arg(18)->Arg(20);
BENCHMARK(bm_explore_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_explore_parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
