#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fapisim/attacks.hpp"
#include "fapisim/scenario.hpp"

#ifndef FAPISIM_SCENARIO_DIR
#define FAPISIM_SCENARIO_DIR "scenarios"
#endif

namespace {

using json = nlohmann::json;
using namespace fapisim;

json traceJson(const Trace& t) {
  // renderTraceJson is JSONL: header line, then one line per step.
  json arr = json::array();
  std::istringstream ss(renderTraceJson(t));
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) arr.push_back(json::parse(line));
  return arr;
}

json verdictsJson(const std::vector<MonitorVerdict>& vs) {
  json out = json::array();
  for (const MonitorVerdict& v : vs)
    out.push_back(
        {{"property", v.property}, {"detail", v.detail}, {"step", v.stepIndex}});
  return out;
}

void printVerdicts(const std::vector<MonitorVerdict>& vs) {
  for (const MonitorVerdict& v : vs)
    std::cout << "VIOLATION " << v.property << " @step " << v.stepIndex << ": "
              << v.detail << "\n";
}

int cmdRun(const std::string& file, uint64_t seed, size_t maxSteps,
           const std::string& format) {
  ScenarioConfig sc = loadScenario(file);
  BuiltScenario b = buildScenario(sc);
  SeededChooser ch(seed);
  Trace t = runDriver(b.cfg, b.initialKnowledge, sc.name, seed, ch, maxSteps);
  std::vector<MonitorVerdict> vs = checkAll(t, b.mc);
  if (format == "json") {
    json out;
    out["trace"] = traceJson(t);
    out["verdicts"] = verdictsJson(vs);
    out["pass"] = vs.empty();
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "scenario " << sc.name << " seed " << seed << ": "
              << t.steps.size() << " steps, "
              << countNotes(t, "loggedIn") << " logins, "
              << countNotes(t, "resourceStored") << " resources stored\n";
    printVerdicts(vs);
    std::cout << (vs.empty() ? "PASS" : "FAIL") << "\n";
  }
  return vs.empty() ? 0 : 1;
}

int cmdAttack(const std::string& name,
              const std::vector<std::string>& fixArgs,
              const std::string& dir, const std::string& format) {
  // The attack's own countermeasure defaults ON; `--fix <key>=off` disables
  // it. Keys: atIss (cuckoo), atHash (idtoken-replay), signedRequestJws
  // (pkce-chosen-challenge), oautb (authreq-leak deployment variant).
  static const std::map<std::string, std::string> fixKey = {
      {"cuckoo", "atIss"},
      {"idtoken-replay", "atHash"},
      {"pkce-chosen-challenge", "signedRequestJws"},
      {"authreq-leak", "oautb"}};
  auto it = fixKey.find(name);
  if (it == fixKey.end()) {
    std::cerr << "unknown attack: " << name << "\n";
    return 2;
  }
  bool fixEnabled = true;
  for (const std::string& f : fixArgs) {
    auto eq = f.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--fix", f);
    std::string key = f.substr(0, eq), val = f.substr(eq + 1);
    if (key == it->second) fixEnabled = val == "on";
  }
  AttackOutcome out = runAttack(name, fixEnabled, dir);
  bool asExpected = out.violated == out.expectedViolation;
  if (format == "json") {
    json j;
    j["attack"] = name;
    j["fix_enabled"] = fixEnabled;
    j["scenario"] = out.scenarioFile;
    j["steps"] = out.trace.steps.size();
    j["violated"] = out.violated;
    j["expected_violation"] = out.expectedViolation;
    j["expected_property"] = out.expectedProperty;
    j["as_expected"] = asExpected;
    j["verdicts"] = verdictsJson(out.verdicts);
    j["trace"] = traceJson(out.trace);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "attack " << name << " (" << it->second << "="
              << (fixEnabled ? "on" : "off") << ", scenario "
              << out.scenarioFile << "): " << out.trace.steps.size()
              << " steps\n";
    printVerdicts(out.verdicts);
    std::cout << (out.violated ? "VIOLATED " + out.expectedProperty
                               : "no violation")
              << (asExpected ? " (as expected)" : " (UNEXPECTED)") << "\n";
  }
  return out.violated ? 1 : 0;
}

int cmdExplore(const std::string& file, size_t depth, size_t nodeLimit,
               const std::string& format) {
  ScenarioConfig sc = loadScenario(file);
  PruningPolicy pp;
  pp.nodeLimit = nodeLimit;
  ExploreResult res = exploreExhaustive(sc, depth, pp);
  std::string status = res.aborted        ? "INCONCLUSIVE"
                       : res.violating.empty() ? "PASS"
                                               : "FAIL";
  if (format == "json") {
    json j;
    j["scenario"] = sc.name;
    j["depth"] = depth;
    j["nodes"] = res.nodes;
    j["max_depth_reached"] = res.maxDepthReached;
    j["status"] = status;
    j["violations"] = json::array();
    for (const Trace& t : res.violating)
      j["violations"].push_back(traceJson(t));
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "explored " << sc.name << ": " << res.nodes << " nodes, "
              << res.violating.size() << " violating traces, depth reached "
              << res.maxDepthReached << " -> " << status << "\n";
  }
  if (res.aborted) return 2;
  return res.violating.empty() ? 0 : 1;
}

int cmdCampaign(const std::string& dir, size_t seeds, size_t maxSteps,
                const std::string& format) {
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "no scenarios in " << dir << "\n";
    return 2;
  }

  size_t violations = 0;
  json report = json::array();
  for (const std::string& f : files) {
    ScenarioConfig sc = loadScenario(f);
    size_t logins = 0, resources = 0, fileViolations = 0;
    for (uint64_t s = 0; s < seeds; ++s) {
      Trace t = runSeeded(sc, s, maxSteps);
      BuiltScenario b = buildScenario(sc);
      std::vector<MonitorVerdict> vs = checkAll(t, b.mc);
      fileViolations += vs.size();
      logins += countNotes(t, "loggedIn");
      resources += countNotes(t, "resourceStored");
    }
    violations += fileViolations;
    bool vacuous = logins == 0 && resources == 0;
    if (format == "json") {
      report.push_back({{"scenario", sc.name},
                        {"seeds", seeds},
                        {"violations", fileViolations},
                        {"logins", logins},
                        {"resources_stored", resources},
                        {"vacuous", vacuous}});
    } else {
      std::cout << sc.name << ": " << seeds << " seeds, " << fileViolations
                << " violations, " << logins << " logins, " << resources
                << " resources" << (vacuous ? " [VACUOUS]" : "") << "\n";
    }
  }
  if (format == "json") {
    json j;
    j["scenarios"] = report;
    j["violations"] = violations;
    j["pass"] = violations == 0;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << (violations == 0 ? "PASS" : "FAIL") << " (" << violations
              << " violations over " << files.size() << " scenarios)\n";
  }
  return violations == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symbolic Dolev-Yao simulator for OpenID FAPI flows"};
  app.require_subcommand(1);
  std::string format = "text";
  app.add_option("--format", format, "output format")
      ->check(CLI::IsMember({"text", "json"}));

  std::string scenario, name, dir = FAPISIM_SCENARIO_DIR;
  uint64_t seed = 0;
  size_t maxSteps = 500, depth = 4, nodeLimit = 1'000'000, seeds = 100;
  std::vector<std::string> fixArgs;

  CLI::App* run = app.add_subcommand("run", "one seeded run of a scenario");
  run->fallthrough();
  run->add_option("--scenario", scenario, "scenario file")->required();
  run->add_option("--seed", seed, "scheduler seed");
  run->add_option("--max-steps", maxSteps, "step budget");

  CLI::App* attack = app.add_subcommand("attack", "run a packaged attack");
  attack->fallthrough();
  attack->add_option("--name", name, "attack name")->required();
  attack->add_option("--fix", fixArgs, "fix toggle, e.g. atIss=off");
  attack->add_option("--scenario-dir", dir, "bundled scenario directory");

  CLI::App* explore = app.add_subcommand("explore", "bounded exploration");
  explore->fallthrough();
  explore->add_option("--scenario", scenario, "scenario file")->required();
  explore->add_option("--depth", depth, "branching-depth bound");
  explore->add_option("--node-limit", nodeLimit, "node budget");

  CLI::App* campaign =
      app.add_subcommand("campaign", "seeded sweep over a scenario directory");
  campaign->fallthrough();
  campaign->add_option("--scenario-dir", dir, "scenario directory");
  campaign->add_option("--seeds", seeds, "seeds per scenario");
  campaign->add_option("--max-steps", maxSteps, "step budget per run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmdRun(scenario, seed, maxSteps, format);
    if (attack->parsed()) return cmdAttack(name, fixArgs, dir, format);
    if (explore->parsed())
      return cmdExplore(scenario, depth, nodeLimit, format);
    if (campaign->parsed()) return cmdCampaign(dir, seeds, maxSteps, format);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
