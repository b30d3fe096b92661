#pragma once

#include "fapisim/monitors.hpp"
#include "fapisim/runtime.hpp"

namespace fapisim {

struct IdentityCfg {
  std::string name;
  std::string domain;  // issuing AS domain
};

struct RegistrationCfg {
  std::string as;
  std::string clientId;
  std::string profile;       // "r" | "rw"
  std::string clientType;    // "pub" | "conf_JWS" | "conf_MTLS" | "conf_OAUTB"
  std::string responseMode;  // rw: "hybrid" | "jarm"; empty: chosen at runtime
  std::vector<std::string> redirectPaths;
  std::vector<std::string> resourceServers;  // RS domains
};

struct BrowserCfg {
  std::string pid;
  std::vector<IdentityCfg> identities;
  std::vector<std::string> preload;  // index-page urls loaded as documents
  std::vector<std::string> urlbar;
};

struct ClientCfg {
  std::string pid;
  std::vector<std::string> domains;
  bool app = false;
  std::vector<RegistrationCfg> registrations;
};

struct AsCfg {
  std::string pid;
  std::string domain;
};

struct RsCfg {
  std::string pid;
  std::string domain;
  std::string authserver;  // AS domain
};

struct AttackerCfg {
  std::vector<std::string> domains;
  std::vector<IdentityCfg> identities;
};

struct ScenarioConfig {
  std::string name;
  Knobs knobs;
  AttackerCfg attacker;
  std::vector<BrowserCfg> browsers;
  std::vector<ClientCfg> clients;
  std::vector<AsCfg> authservers;
  std::vector<RsCfg> resourceservers;
  std::string recipe;  // attacker recipe name; empty: passive
};

// Parses and validates. Violations of the deployment matrix raise
// std::runtime_error messages naming the broken rule.
ScenarioConfig loadScenario(const std::string& path);
ScenarioConfig loadScenarioFromString(const std::string& jsonText,
                                      const std::string& name);
void validateScenario(const ScenarioConfig& sc);

// "https://host/path" -> url term.
Term parseUrl(const std::string& s);

struct BuiltScenario {
  Configuration cfg;
  std::vector<Term> initialKnowledge;  // attacker's, also seeded into its kb
  MonitorContext mc;
};

BuiltScenario buildScenario(const ScenarioConfig& sc);

// Shared driver: pool delivery with honest routing; when the pool is
// empty, TRIGGERs browsers (and a recipe-equipped attacker) round-robin
// until everyone hit the trigger budget. Delivery is oldest-first by
// default; `newestFirst` delivers depth-first instead — the network
// attacker's prerogative, used by the scripted attacks to race ahead of
// the honest tail of the flow.
Trace runDriver(Configuration& cfg, const std::vector<Term>& initialKnowledge,
                const std::string& name, uint64_t seed, Chooser& ch,
                size_t maxSteps, size_t maxTriggersPerProcess = 4,
                bool newestFirst = false);

}  // namespace fapisim
