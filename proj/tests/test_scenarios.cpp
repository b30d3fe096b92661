#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "fapisim/https_base.hpp"
#include "fapisim/monitors.hpp"
#include "fapisim/scenario.hpp"

#ifndef FAPISIM_SCENARIO_DIR
#define FAPISIM_SCENARIO_DIR "scenarios"
#endif

using namespace fapisim;

namespace {

const std::string kDir = FAPISIM_SCENARIO_DIR;

const char* kLegalFixtures[] = {
    "r-pub-app",
    "r-confjws-webserver",
    "r-confmtls-webserver",
    "rw-pub-oautb-app-hybrid",
    "rw-confmtls-app-jarm",
    "rw-confmtls-webserver-hybrid",
    "rw-confoautb-webserver-hybrid",
    "rw-confoautb-app-jarm",
};

std::string minimalScenario(const std::string& profile,
                            const std::string& clientType, bool app,
                            const std::string& responseMode = "") {
  return std::string(R"({
    "attacker": {"domains": [], "identities": []},
    "browsers": [{"id": "b1",
                  "identities": [{"name": "alice", "domain": "as.example"}],
                  "preload": ["https://client.example/"]}],
    "clients": [{"id": "c1", "domains": ["client.example"], "app": )") +
         (app ? "true" : "false") + R"(,
      "registrations": [{"as": "as.example", "client_id": "client1",
        "profile": ")" + profile + R"(", "client_type": ")" + clientType +
         R"(", "response_mode": ")" + responseMode + R"(",
        "redirect_paths": ["/redirect_ep"],
        "resource_servers": ["rs.example"]}]}],
    "authservers": [{"id": "as1", "domain": "as.example"}],
    "resourceservers": [{"id": "rs1", "domain": "rs.example",
                         "authserver": "as.example"}]
  })";
}

void expectRule(const std::string& json, const std::string& ruleName) {
  try {
    loadScenarioFromString(json, "t");
    FAIL_CHECK("expected rejection by rule " << ruleName);
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(ruleName) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("all eight legal configuration fixtures load and validate") {
  for (const char* f : kLegalFixtures) {
    ScenarioConfig sc = loadScenario(kDir + "/" + f + ".json");
    CHECK(sc.browsers.size() == 1);
    CHECK(sc.clients.size() == 1);
    CHECK(sc.recipe.empty());
    // Threat-model defaults: leaks and fixes all ON.
    CHECK(sc.knobs.fixes.atHash);
    CHECK(sc.knobs.fixes.atIss);
    CHECK(sc.knobs.fixes.signedRequestJws);
    CHECK(sc.knobs.leaks.authRequest);
    CHECK(sc.knobs.leaks.accessTokenRW);
  }
}

TEST_CASE("deployment matrix violations are rejected by name") {
  expectRule(minimalScenario("rw", "pub", false),
             "rw-public-client-must-be-app");
  expectRule(minimalScenario("rw", "conf_JWS", false),
             "rw-confidential-requires-mtls-or-oautb");
  expectRule(minimalScenario("r", "conf_OAUTB", false), "r-profile-no-oautb");
  expectRule(minimalScenario("r", "pub", true, "hybrid"),
             "response-mode-only-for-rw");
  expectRule(minimalScenario("rw", "conf_MTLS", false, "implicit"),
             "unknown-response-mode");
  expectRule(minimalScenario("zz", "pub", true), "unknown-profile");
}

TEST_CASE("legal minimal combinations pass validation") {
  CHECK_NOTHROW(loadScenarioFromString(minimalScenario("rw", "pub", true),
                                       "rw-pub-app"));
  CHECK_NOTHROW(loadScenarioFromString(
      minimalScenario("rw", "conf_MTLS", false, "jarm"), "rw-mtls-jarm"));
  CHECK_NOTHROW(loadScenarioFromString(minimalScenario("r", "conf_JWS", false),
                                       "r-jws"));
}

TEST_CASE("topology errors are rejected by name") {
  // RS trusting an undeclared AS.
  std::string bad = minimalScenario("r", "pub", true);
  size_t p = bad.find("\"authserver\": \"as.example\"");
  REQUIRE(p != std::string::npos);
  bad.replace(p, 26, "\"authserver\": \"nope.example\"");
  expectRule(bad, "unknown-authserver");

  std::string dup = minimalScenario("r", "pub", true);
  p = dup.find("\"domains\": [\"client.example\"]");
  REQUIRE(p != std::string::npos);
  dup.replace(p, 29, "\"domains\": [\"as.example\"]");
  expectRule(dup, "duplicate-domain");
}

TEST_CASE("every legal fixture completes for some seed") {
  for (const char* f : kLegalFixtures) {
    ScenarioConfig sc = loadScenario(kDir + "/" + f + ".json");
    bool done = false;
    for (uint64_t seed = 0; seed < 10 && !done; ++seed) {
      Trace t = runSeeded(sc, seed, 400);
      done = countNotes(t, "loggedIn") > 0 || countNotes(t, "resourceStored") > 0;
    }
    CAPTURE(f);
    CHECK(done);
  }
}

TEST_CASE("seeded runs are monitored clean on all bundled fixtures") {
  for (const char* f : kLegalFixtures) {
    ScenarioConfig sc = loadScenario(kDir + "/" + f + ".json");
    BuiltScenario b = buildScenario(sc);
    for (uint64_t seed = 0; seed < 5; ++seed) {
      Trace t = runSeeded(sc, seed, 400);
      CAPTURE(f);
      CHECK(checkAll(t, b.mc).empty());
    }
  }
}

TEST_CASE("identical scenario and seed give byte-identical traces") {
  for (const char* f : {"rw-confoautb-webserver-hybrid", "authreq-leak"}) {
    ScenarioConfig sc = loadScenario(kDir + "/" + std::string(f) + ".json");
    for (uint64_t seed : {0ull, 17ull}) {
      Trace a = runSeeded(sc, seed, 400);
      Trace b = runSeeded(sc, seed, 400);
      CAPTURE(f);
      CHECK(renderTraceJson(a) == renderTraceJson(b));
    }
    Trace a = runSeeded(sc, 1, 400);
    Trace b = runSeeded(sc, 2, 400);
    // Different seeds are allowed to agree, but the renderer must embed the
    // seed, so renderings differ.
    CHECK(renderTraceJson(a) != renderTraceJson(b));
  }
}

TEST_CASE("parseUrl round trips scheme, host and path") {
  Term u = parseUrl("https://client.example/redirect_ep");
  CHECK(urlHost(u) == Term::domain("client.example"));
  CHECK(urlPath(u) == Term::atom("/redirect_ep"));
  CHECK_THROWS(parseUrl("gopher://x"));
}
