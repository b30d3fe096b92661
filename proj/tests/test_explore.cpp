#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "fapisim/runtime.hpp"
#include "fapisim/scenario.hpp"

#ifndef FAPISIM_SCENARIO_DIR
#define FAPISIM_SCENARIO_DIR "scenarios"
#endif

using namespace fapisim;

namespace {
const std::string kDir = FAPISIM_SCENARIO_DIR;
}

TEST_CASE("small exhaustive exploration of a fixed scenario stays clean") {
  ScenarioConfig sc = loadScenario(kDir + "/r-pub-app.json");
  PruningPolicy p;
  ExploreResult r = exploreExhaustive(sc, 6, p);
  CHECK(r.violating.empty());
  CHECK(!r.aborted);
  CHECK(r.nodes > 0);
  CHECK(r.maxDepthReached <= 6);
}

TEST_CASE("node limit abort is reported, never swallowed") {
  ScenarioConfig sc = loadScenario(kDir + "/rw-confoautb-webserver-hybrid.json");
  PruningPolicy p;
  p.nodeLimit = 5;
  ExploreResult r = exploreExhaustive(sc, 12, p);
  CHECK(r.aborted);  // inconclusive: must not be read as a pass
  CHECK(r.nodes <= p.nodeLimit);
}

TEST_CASE("deeper bounds never explore fewer nodes") {
  ScenarioConfig sc = loadScenario(kDir + "/r-pub-app.json");
  PruningPolicy p;
  ExploreResult r4 = exploreExhaustive(sc, 4, p);
  ExploreResult r7 = exploreExhaustive(sc, 7, p);
  CHECK(!r4.aborted);
  CHECK(!r7.aborted);
  CHECK(r7.nodes >= r4.nodes);
  CHECK(r7.maxDepthReached >= r4.maxDepthReached);
}

TEST_CASE("state deduplication only prunes, never adds") {
  ScenarioConfig sc = loadScenario(kDir + "/r-pub-app.json");
  PruningPolicy dedup, raw;
  raw.dedupStates = false;
  ExploreResult a = exploreExhaustive(sc, 5, dedup);
  ExploreResult b = exploreExhaustive(sc, 5, raw);
  CHECK(a.nodes <= b.nodes);
  CHECK(a.violating.empty());
  CHECK(b.violating.empty());
}

TEST_CASE("exploration is deterministic") {
  ScenarioConfig sc = loadScenario(kDir + "/r-confjws-webserver.json");
  PruningPolicy p;
  ExploreResult a = exploreExhaustive(sc, 5, p);
  ExploreResult b = exploreExhaustive(sc, 5, p);
  CHECK(a.nodes == b.nodes);
  CHECK(a.maxDepthReached == b.maxDepthReached);
  CHECK(a.violating.size() == b.violating.size());
}

TEST_CASE("attack scenarios with fixes enabled explore clean") {
  for (const char* f : {"cuckoo", "pkce-chosen-challenge"}) {
    ScenarioConfig sc = loadScenario(kDir + "/" + std::string(f) + ".json");
    PruningPolicy p;
    ExploreResult r = exploreExhaustive(sc, 8, p);
    CAPTURE(f);
    CHECK(r.violating.empty());
    CHECK(!r.aborted);
  }
}
