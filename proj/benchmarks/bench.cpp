#include <benchmark/benchmark.h>

#include <string>

#include "fapisim/knowledge.hpp"
#include "fapisim/monitors.hpp"
#include "fapisim/scenario.hpp"

#ifndef FAPISIM_SCENARIO_DIR
#define FAPISIM_SCENARIO_DIR "scenarios"
#endif

using namespace fapisim;

namespace {
const std::string kDir = FAPISIM_SCENARIO_DIR;

// A knowledge base with layered encryptions, the shape the monitors see.
KnowledgeBase layeredKb(int layers) {
  KnowledgeBase kb;
  for (int i = 0; i < layers; ++i) {
    Term key = Term::nonce(static_cast<uint64_t>(1000 + i), "k");
    Term payload = Term::seq({Term::nonce(static_cast<uint64_t>(i), "m"),
                              Term::nonce(static_cast<uint64_t>(2000 + i), "k")});
    kb.add(encS(payload, key));
  }
  kb.add(Term::nonce(1000, "k"));
  return kb;
}
}  // namespace

static void BM_DerivabilityClosure(benchmark::State& state) {
  KnowledgeBase kb = layeredKb(static_cast<int>(state.range(0)));
  Term tgt = Term::nonce(static_cast<uint64_t>(state.range(0) - 1), "m");
  for (auto _ : state) {
    KnowledgeBase fresh = kb;
    benchmark::DoNotOptimize(fresh.derivable(tgt));
  }
}
BENCHMARK(BM_DerivabilityClosure)->Arg(8)->Arg(32)->Arg(128);

static void BM_SeededRun(benchmark::State& state) {
  ScenarioConfig sc = loadScenario(kDir + "/rw-confoautb-webserver-hybrid.json");
  uint64_t seed = 0;
  for (auto _ : state) {
    Trace t = runSeeded(sc, seed++, 400);
    benchmark::DoNotOptimize(t.steps.size());
  }
}
BENCHMARK(BM_SeededRun);

static void BM_MonitoredRun(benchmark::State& state) {
  ScenarioConfig sc = loadScenario(kDir + "/rw-confmtls-app-jarm.json");
  BuiltScenario b = buildScenario(sc);
  uint64_t seed = 0;
  for (auto _ : state) {
    Trace t = runSeeded(sc, seed++, 400);
    benchmark::DoNotOptimize(checkAll(t, b.mc).size());
  }
}
BENCHMARK(BM_MonitoredRun);

static void BM_Exploration(benchmark::State& state) {
  ScenarioConfig sc = loadScenario(kDir + "/r-pub-app.json");
  PruningPolicy p;
  for (auto _ : state) {
    ExploreResult r = exploreExhaustive(sc, state.range(0), p);
    benchmark::DoNotOptimize(r.nodes);
  }
}
BENCHMARK(BM_Exploration)->Arg(4)->Arg(6)->Arg(8);

BENCHMARK_MAIN();
