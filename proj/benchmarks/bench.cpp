#include <benchmark/benchmark.h>

#include <random>

#include "chemlambda/chemistry.hpp"
#include "chemlambda/engine.hpp"
#include "chemlambda/iso.hpp"
#include "chemlambda/lambda.hpp"

using namespace chemlambda;

namespace {

Molecule closed_term(const char* text) {
  return close_boundary(lambda::to_molecule(lambda::expand_library(lambda::parse_lambda(text))),
                        KindTable::standard());
}

// Church numeral n applied through succ grows linearly in n.
Molecule numeral(int n) {
  auto t = lambda::Term::app(lambda::combinators().at("succ"), lambda::church(static_cast<unsigned>(n)));
  return close_boundary(lambda::to_molecule(t), KindTable::standard());
}

const Chemistry& v2() { return builtin_chemistry("chemlambda-v2"); }

}  // namespace

static void BM_CanonicalCode(benchmark::State& state) {
  auto m = numeral(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(canonical_code(m));
  state.counters["nodes"] = static_cast<double>(m.size());
}
BENCHMARK(BM_CanonicalCode)->Arg(2)->Arg(8)->Arg(32)->Arg(96);

static void BM_FindMatches(benchmark::State& state) {
  auto m = closed_term("mul 3 3");
  ReductionConfig cfg;
  cfg.max_cycles = static_cast<std::size_t>(state.range(0));
  auto grown = reduce(m, v2(), cfg).final_molecule;
  for (auto _ : state) benchmark::DoNotOptimize(find_matches(grown, v2()));
  state.counters["nodes"] = static_cast<double>(grown.size());
}
BENCHMARK(BM_FindMatches)->Arg(1)->Arg(4)->Arg(8);

static void BM_OmegaCycles(benchmark::State& state) {
  auto m = closed_term("Omega");
  ReductionConfig cfg;
  cfg.max_cycles = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(reduce(m, v2(), cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_OmegaCycles)->Arg(1000);

static void BM_ReduceWeighted(benchmark::State& state) {
  auto m = closed_term("add 2 3");
  ReductionConfig cfg;
  cfg.strategy = Strategy::weighted_random;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    cfg.seed = ++seed;
    benchmark::DoNotOptimize(reduce(m, v2(), cfg));
  }
}
BENCHMARK(BM_ReduceWeighted);
BENCHMARK_MAIN();
