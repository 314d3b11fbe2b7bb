#include <benchmark/benchmark.h>

#include "mpcjoin/hypercube.hpp"
#include "mpcjoin/instance.hpp"
#include "mpcjoin/join.hpp"
#include "mpcjoin/multiround.hpp"
#include "mpcjoin/packing.hpp"
#include "mpcjoin/query.hpp"

namespace mpcjoin {
namespace {

void BM_ShareLpCycle(benchmark::State& state) {
  auto q = cycle_query(static_cast<int>(state.range(0)));
  auto stats = Statistics::equal(q, 1 << 20, 1 << 20);
  for (auto _ : state) benchmark::DoNotOptimize(optimize_shares_skewfree(q, stats, 64));
}
BENCHMARK(BM_ShareLpCycle)->DenseRange(3, 6);

void BM_PackingVertices(benchmark::State& state) {
  auto q = named_query(state.range(0) == 0 ? "K4" : "B4_3");
  for (auto _ : state) benchmark::DoNotOptimize(packing_vertices(q));
}
BENCHMARK(BM_PackingVertices)->Arg(0)->Arg(1);

void BM_RouteTriangle(benchmark::State& state) {
  auto q = cycle_query(3);
  const auto m = static_cast<std::uint64_t>(state.range(0));
  auto inst = random_matching_db(q, Statistics::equal(q, m, m), 1);
  auto rels = relation_pointers(inst);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(route_one_round(q, rels, inst.n, {4, 4, 4}, 64, ++seed));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 3 * m));
}
BENCHMARK(BM_RouteTriangle)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_OneRoundTriangle(benchmark::State& state) {
  auto q = cycle_query(3);
  const auto m = static_cast<std::uint64_t>(state.range(0));
  auto inst = random_matching_db(q, Statistics::equal(q, m, m), 2);
  auto rels = relation_pointers(inst);
  for (auto _ : state) benchmark::DoNotOptimize(run_one_round(q, rels, inst.n, {4, 4, 4}, 64, 7));
}
BENCHMARK(BM_OneRoundTriangle)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_OracleJoin(benchmark::State& state) {
  auto q = named_query(state.range(0) == 0 ? "L4" : "K4e");
  auto inst = random_matching_db(q, Statistics::equal(q, 50000, 50000), 3);
  for (auto _ : state) benchmark::DoNotOptimize(oracle_count(q, inst));
}
BENCHMARK(BM_OracleJoin)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BuildPlan(benchmark::State& state) {
  auto q = line_query(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_plan(q, Rational(1, 2)));
}
BENCHMARK(BM_BuildPlan)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace mpcjoin

BENCHMARK_MAIN();
