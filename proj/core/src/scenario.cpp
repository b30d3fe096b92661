#include "fapisim/scenario.hpp"

#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fapisim/attacker.hpp"
#include "fapisim/attacks.hpp"
#include "fapisim/authserver.hpp"
#include "fapisim/browser.hpp"
#include "fapisim/client.hpp"
#include "fapisim/resourceserver.hpp"

namespace fapisim {

using json = nlohmann::json;

Term parseUrl(const std::string& s) {
  Term protocol = atoms::S();
  std::string rest = s;
  if (rest.rfind("https://", 0) == 0) {
    rest = rest.substr(8);
  } else if (rest.rfind("http://", 0) == 0) {
    protocol = atoms::P();
    rest = rest.substr(7);
  } else {
    throw std::runtime_error("unsupported url: " + s);
  }
  std::string host = rest;
  std::string path = "/";
  if (auto slash = rest.find('/'); slash != std::string::npos) {
    host = rest.substr(0, slash);
    path = rest.substr(slash);
  }
  return mkUrl(protocol, Term::domain(host), Term::atom(path));
}

static IdentityCfg parseIdentity(const json& j) {
  return {j.at("name").get<std::string>(), j.at("domain").get<std::string>()};
}

ScenarioConfig loadScenarioFromString(const std::string& jsonText,
                                      const std::string& name) {
  json j = json::parse(jsonText);
  ScenarioConfig sc;
  sc.name = j.value("name", name);

  if (j.contains("fixes")) {
    const json& f = j["fixes"];
    sc.knobs.fixes.atHash = f.value("atHash", true);
    sc.knobs.fixes.atIss = f.value("atIss", true);
    sc.knobs.fixes.signedRequestJws = f.value("signedRequestJws", true);
  }
  if (j.contains("leaks")) {
    const json& l = j["leaks"];
    sc.knobs.leaks.authRequest = l.value("authRequest", true);
    sc.knobs.leaks.authResponseApp = l.value("authResponseApp", true);
    sc.knobs.leaks.accessTokenRW = l.value("accessTokenRW", true);
    sc.knobs.leaks.misconfiguredTokenEndpoint =
        l.value("misconfiguredTokenEndpoint", true);
  }
  sc.knobs.debugDerivability = j.value("debugDerivability", false);
  sc.recipe = j.value("recipe", std::string());

  if (j.contains("attacker")) {
    const json& a = j["attacker"];
    for (const auto& d : a.value("domains", json::array()))
      sc.attacker.domains.push_back(d.get<std::string>());
    for (const auto& i : a.value("identities", json::array()))
      sc.attacker.identities.push_back(parseIdentity(i));
  }
  for (const auto& b : j.value("browsers", json::array())) {
    BrowserCfg bc;
    bc.pid = b.at("id").get<std::string>();
    for (const auto& i : b.value("identities", json::array()))
      bc.identities.push_back(parseIdentity(i));
    for (const auto& u : b.value("preload", json::array()))
      bc.preload.push_back(u.get<std::string>());
    for (const auto& u : b.value("urlbar", json::array()))
      bc.urlbar.push_back(u.get<std::string>());
    sc.browsers.push_back(std::move(bc));
  }
  for (const auto& c : j.value("clients", json::array())) {
    ClientCfg cc;
    cc.pid = c.at("id").get<std::string>();
    for (const auto& d : c.at("domains"))
      cc.domains.push_back(d.get<std::string>());
    cc.app = c.value("app", false);
    for (const auto& r : c.value("registrations", json::array())) {
      RegistrationCfg rc;
      rc.as = r.at("as").get<std::string>();
      rc.clientId = r.at("client_id").get<std::string>();
      rc.profile = r.at("profile").get<std::string>();
      rc.clientType = r.at("client_type").get<std::string>();
      rc.responseMode = r.value("response_mode", std::string());
      for (const auto& p : r.value("redirect_paths", json::array()))
        rc.redirectPaths.push_back(p.get<std::string>());
      for (const auto& rs : r.value("resource_servers", json::array()))
        rc.resourceServers.push_back(rs.get<std::string>());
      cc.registrations.push_back(std::move(rc));
    }
    sc.clients.push_back(std::move(cc));
  }
  for (const auto& a : j.value("authservers", json::array()))
    sc.authservers.push_back(
        {a.at("id").get<std::string>(), a.at("domain").get<std::string>()});
  for (const auto& r : j.value("resourceservers", json::array()))
    sc.resourceservers.push_back({r.at("id").get<std::string>(),
                                  r.at("domain").get<std::string>(),
                                  r.at("authserver").get<std::string>()});

  validateScenario(sc);
  return sc;
}

ScenarioConfig loadScenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string name = path;
  if (auto slash = name.find_last_of('/'); slash != std::string::npos)
    name = name.substr(slash + 1);
  if (auto dot = name.find_last_of('.'); dot != std::string::npos)
    name = name.substr(0, dot);
  return loadScenarioFromString(ss.str(), name);
}

static void rule(bool ok, const std::string& ruleName,
                 const std::string& detail) {
  if (!ok)
    throw std::runtime_error("scenario rule " + ruleName + ": " + detail);
}

void validateScenario(const ScenarioConfig& sc) {
  std::set<std::string> asDomains, rsDomains, allDomains;
  std::set<std::string> attackerDomains(sc.attacker.domains.begin(),
                                        sc.attacker.domains.end());
  for (const AsCfg& a : sc.authservers) {
    rule(allDomains.insert(a.domain).second, "duplicate-domain", a.domain);
    asDomains.insert(a.domain);
  }
  for (const RsCfg& r : sc.resourceservers) {
    rule(allDomains.insert(r.domain).second, "duplicate-domain", r.domain);
    rsDomains.insert(r.domain);
    rule(asDomains.count(r.authserver) > 0, "unknown-authserver",
         r.domain + " trusts " + r.authserver);
  }
  for (const ClientCfg& c : sc.clients)
    for (const std::string& d : c.domains)
      rule(allDomains.insert(d).second, "duplicate-domain", d);
  for (const std::string& d : sc.attacker.domains)
    rule(allDomains.insert(d).second, "duplicate-domain", d);

  auto checkIdentity = [&](const IdentityCfg& i) {
    rule(asDomains.count(i.domain) > 0 || attackerDomains.count(i.domain) > 0,
         "unknown-identity-issuer", i.name + "@" + i.domain);
  };
  for (const BrowserCfg& b : sc.browsers)
    for (const IdentityCfg& i : b.identities) checkIdentity(i);
  for (const IdentityCfg& i : sc.attacker.identities) checkIdentity(i);

  std::map<std::string, std::string> redirectOwner;  // uri -> as domain
  std::set<std::string> clientIds;                   // as + ":" + id
  for (const ClientCfg& c : sc.clients) {
    rule(!c.domains.empty(), "client-needs-domain", c.pid);
    for (const RegistrationCfg& r : c.registrations) {
      rule(r.profile == "r" || r.profile == "rw", "unknown-profile",
           r.profile);
      rule(r.clientType == "pub" || r.clientType == "conf_JWS" ||
               r.clientType == "conf_MTLS" || r.clientType == "conf_OAUTB",
           "unknown-client-type", r.clientType);
      bool evilAs = attackerDomains.count(r.as) > 0;
      rule(asDomains.count(r.as) > 0 || evilAs, "unknown-authserver",
           c.pid + " registered at " + r.as);
      rule(clientIds.insert(r.as + ":" + r.clientId).second,
           "duplicate-client-id", r.clientId + " at " + r.as);
      if (r.profile == "r") {
        rule(r.clientType != "conf_OAUTB", "r-profile-no-oautb", c.pid);
        rule(r.responseMode.empty(), "response-mode-only-for-rw", c.pid);
      } else {
        rule(!(r.clientType == "pub" && !c.app),
             "rw-public-client-must-be-app", c.pid);
        rule(r.clientType != "conf_JWS",
             "rw-confidential-requires-mtls-or-oautb", c.pid);
        rule(r.responseMode.empty() || r.responseMode == "hybrid" ||
                 r.responseMode == "jarm",
             "unknown-response-mode", r.responseMode);
      }
      rule(!r.redirectPaths.empty(), "registration-needs-redirect-uri",
           c.pid);
      for (const std::string& p : r.redirectPaths) {
        std::string uri = c.domains.front() + p;
        auto [it, inserted] = redirectOwner.emplace(uri, r.as);
        rule(inserted || it->second == r.as,
             "redirect-uri-shared-across-authservers", uri);
      }
      rule(!r.resourceServers.empty(), "registration-needs-resource-server",
           c.pid);
      for (const std::string& rs : r.resourceServers) {
        rule(rsDomains.count(rs) > 0, "unknown-resourceserver", rs);
        if (evilAs) continue;  // misconfigured ecosystem entry, by design
        for (const RsCfg& rc : sc.resourceservers)
          if (rc.domain == rs)
            rule(rc.authserver == r.as, "resource-server-authserver-mismatch",
                 rs + " does not trust " + r.as);
      }
    }
  }
}

BuiltScenario buildScenario(const ScenarioConfig& sc) {
  BuiltScenario b;
  Configuration& cfg = b.cfg;
  auto knobs = std::make_shared<Knobs>(sc.knobs);
  for (const std::string& d : sc.attacker.domains)
    knobs->attackerEndpointHosts.push_back(Term::domain(d));
  cfg.knobs = knobs;
  const Knobs* kn = knobs.get();

  auto fresh = [&cfg](const std::string& label) {
    return Term::nonce(cfg.nonceCounter++, label);
  };

  Term attackerAddr = Term::address("attacker");

  // PKI and DNS over every declared domain.
  std::map<Term, Term> keyMapping, privKeys, dnsTable;
  auto addDomain = [&](const std::string& d, const Term& owner) {
    Term dom = Term::domain(d);
    Term priv = fresh("tlskey:" + d);
    privKeys[dom] = priv;
    keyMapping[dom] = pubOf(priv);
    dnsTable[dom] = owner;
  };
  std::map<std::string, std::string> asPidOf;  // as domain -> pid
  for (const AsCfg& a : sc.authservers) {
    addDomain(a.domain, Term::address(a.pid));
    asPidOf[a.domain] = a.pid;
  }
  for (const RsCfg& r : sc.resourceservers)
    addDomain(r.domain, Term::address(r.pid));
  for (const ClientCfg& c : sc.clients)
    for (const std::string& d : c.domains)
      addDomain(d, Term::address(c.pid));
  for (const std::string& d : sc.attacker.domains) addDomain(d, attackerAddr);

  // Identity terms and passwords, registered at the issuing AS.
  std::map<Term, Term> passwords;
  auto mkIdentity = [&](const IdentityCfg& i) {
    Term idn = Term::seq({Term::atom(i.name), Term::domain(i.domain)});
    if (!passwords.count(idn)) passwords[idn] = fresh("password:" + i.name);
    return idn;
  };

  // Authorization servers.
  std::map<std::string, std::shared_ptr<ASProc>> asProcs;
  for (const AsCfg& a : sc.authservers) {
    auto as = std::make_shared<ASProc>();
    as->id = a.pid;
    as->addresses = {Term::address(a.pid)};
    as->dnsAddr = attackerAddr;
    as->keyMapping = keyMapping;
    as->tlskeys[Term::domain(a.domain)] = privKeys[Term::domain(a.domain)];
    as->jwk = fresh("jwk:" + a.domain);
    as->leakAddr = attackerAddr;
    as->knobs = kn;
    asProcs[a.domain] = as;
  }
  auto registerIdentity = [&](const IdentityCfg& i) {
    Term idn = mkIdentity(i);
    if (auto it = asProcs.find(i.domain); it != asProcs.end())
      it->second->passwords[idn] = passwords[idn];
    return idn;
  };

  // Attacker-operated authorization servers: clients may (mis)register
  // there; the attacker gets the corresponding signing key and credentials.
  std::map<std::string, Term> evilJwk;
  for (const std::string& d : sc.attacker.domains)
    evilJwk[d] = fresh("jwk:" + d);
  std::map<std::string, Term> attackerFacts;
  std::vector<Term> attackerExtraKnowledge;

  // Clients.
  std::vector<std::shared_ptr<ClientProc>> clientProcs;
  for (const ClientCfg& c : sc.clients) {
    auto cl = std::make_shared<ClientProc>();
    cl->id = c.pid;
    cl->addresses = {Term::address(c.pid)};
    cl->dnsAddr = attackerAddr;
    cl->keyMapping = keyMapping;
    for (const std::string& d : c.domains)
      cl->tlskeys[Term::domain(d)] = privKeys[Term::domain(d)];
    cl->app = c.app;
    cl->leakAddr = attackerAddr;
    cl->knobs = kn;
    // One TLS client-authentication key pair per client deployment.
    Term mtlsKeyC = fresh("mtlskey:" + c.pid);
    for (const RegistrationCfg& r : c.registrations) {
      ClientProc::Registration rg;
      rg.as = Term::domain(r.as);
      rg.clientId = Term::atom(r.clientId);
      rg.profile = r.profile;
      rg.clientType = r.clientType;
      rg.responseMode = r.responseMode;
      rg.authEp = mkUrl(atoms::S(), rg.as, Term::atom("/auth"));
      rg.tokenEp = mkUrl(atoms::S(), rg.as, Term::atom("/token"));
      for (const std::string& p : r.redirectPaths)
        rg.redirectUris.push_back(
            mkUrl(atoms::S(), Term::domain(c.domains.front()),
                  Term::atom(p)));
      for (const std::string& rs : r.resourceServers)
        rg.resourceServers.push_back(Term::domain(rs));
      bool evilAs = asProcs.find(r.as) == asProcs.end();
      rg.asJwkPub =
          evilAs ? pubOf(evilJwk[r.as]) : pubOf(asProcs[r.as]->jwk);
      rg.clientSecret = fresh("clientsecret:" + r.clientId);
      rg.mtlsKey = mtlsKeyC;
      rg.jwsKey = fresh("jwskey:" + r.clientId);
      rg.tbKeyAS = fresh("tbkeyas:" + r.clientId);
      rg.tbKeyRS = fresh("tbkeyrs:" + r.clientId);

      // Verification keys are public.
      attackerExtraKnowledge.push_back(pubOf(rg.mtlsKey));
      attackerExtraKnowledge.push_back(pubOf(rg.jwsKey));
      attackerFacts["mtlsPub:" + r.clientId] = pubOf(rg.mtlsKey);
      attackerFacts["jwsPub:" + r.clientId] = pubOf(rg.jwsKey);

      if (evilAs) {
        // Registered at the attacker's AS: it holds the shared secret.
        attackerExtraKnowledge.push_back(rg.clientSecret);
        attackerFacts["clientSecret:" + r.clientId] = rg.clientSecret;
      } else {
        ASProc::ClientReg reg;
        reg.clientId = rg.clientId;
        reg.profile = r.profile;
        reg.clientType = r.clientType;
        reg.isApp = c.app;
        reg.redirectUris = rg.redirectUris;
        reg.jwsPub = pubOf(rg.jwsKey);
        reg.mtlsPub = pubOf(rg.mtlsKey);
        reg.clientSecret = rg.clientSecret;
        asProcs[r.as]->clients.push_back(reg);
      }

      cl->registrations.push_back(std::move(rg));
    }
    clientProcs.push_back(cl);
  }

  // Resource servers.
  std::vector<std::shared_ptr<RSProc>> rsProcs;
  for (const RsCfg& r : sc.resourceservers) {
    auto rs = std::make_shared<RSProc>();
    rs->id = r.pid;
    rs->addresses = {Term::address(r.pid)};
    rs->dnsAddr = attackerAddr;
    rs->keyMapping = keyMapping;
    rs->tlskeys[Term::domain(r.domain)] = privKeys[Term::domain(r.domain)];
    rs->authServ = Term::domain(r.authserver);
    rs->asPid = asPidOf[r.authserver];
    rs->knobs = kn;
    rsProcs.push_back(rs);
  }

  // Browsers.
  std::vector<std::shared_ptr<BrowserProc>> browserProcs;
  for (const BrowserCfg& bc : sc.browsers) {
    auto br = std::make_shared<BrowserProc>();
    br->id = bc.pid;
    br->addresses = {Term::address(bc.pid)};
    br->dnsAddr = attackerAddr;
    br->keyMapping = keyMapping;
    for (const IdentityCfg& i : bc.identities) {
      Term idn = registerIdentity(i);
      br->identities.push_back(idn);
      br->secrets[idn] = passwords[idn];
    }
    for (const std::string& u : bc.preload)
      br->documents.push_back(BrowserProc::Document{
          fresh("window"), parseUrl(u), "script_client_index", Term::seq({})});
    for (const std::string& u : bc.urlbar) br->urlbar.push_back(parseUrl(u));
    browserProcs.push_back(br);
  }

  // Attacker.
  auto att = std::make_shared<AttackerProc>();
  att->id = "attacker";
  att->addresses = {attackerAddr};
  att->dnsTable = dnsTable;
  att->keyMapping = keyMapping;
  for (const std::string& d : sc.attacker.domains)
    att->tlskeys[Term::domain(d)] = privKeys[Term::domain(d)];
  if (!sc.recipe.empty()) {
    att->recipe = makeRecipeByName(sc.recipe);
    if (!att->recipe)
      throw std::runtime_error("unknown attacker recipe: " + sc.recipe);
  }

  b.initialKnowledge.push_back(attackerAddr);
  for (const auto& [dom, addr] : dnsTable) {
    b.initialKnowledge.push_back(dom);
    b.initialKnowledge.push_back(addr);
  }
  for (const auto& [dom, pk] : keyMapping) b.initialKnowledge.push_back(pk);
  for (const auto& [dom, sk] : att->tlskeys)
    b.initialKnowledge.push_back(sk);
  for (const auto& [dom, as] : asProcs)
    b.initialKnowledge.push_back(pubOf(as->jwk));
  for (const auto& [d, k] : evilJwk) {
    b.initialKnowledge.push_back(k);
    attackerFacts["asKey:" + d] = k;
  }
  for (const Term& t : attackerExtraKnowledge)
    b.initialKnowledge.push_back(t);
  for (const IdentityCfg& i : sc.attacker.identities) {
    Term idn = registerIdentity(i);
    b.initialKnowledge.push_back(idn);
    b.initialKnowledge.push_back(passwords[idn]);
    b.mc.attackerIdentities.insert(idn);
    attackerFacts["identity:" + i.name] = idn;
    attackerFacts["password:" + i.name] = passwords[idn];
  }
  att->facts = std::move(attackerFacts);
  for (const Term& t : b.initialKnowledge) att->kb.add(t);

  for (auto& p : browserProcs) {
    b.mc.honestBrowserPids.insert(p->id);
    cfg.procs.push_back(p);
  }
  for (auto& p : clientProcs) {
    b.mc.honestClientPids.insert(p->id);
    cfg.procs.push_back(p);
  }
  for (const AsCfg& a : sc.authservers) {
    b.mc.honestAsDomains.insert(Term::domain(a.domain));
    cfg.procs.push_back(asProcs[a.domain]);
  }
  for (auto& p : rsProcs) cfg.procs.push_back(p);
  cfg.procs.push_back(att);

  return b;
}

Trace runDriver(Configuration& cfg, const std::vector<Term>& initialKnowledge,
                const std::string& name, uint64_t seed, Chooser& ch,
                size_t maxSteps, size_t maxTriggersPerProcess,
                bool newestFirst) {
  Trace tr;
  tr.scenario = name;
  tr.seed = seed;
  tr.initialAttackerKnowledge = initialKnowledge;

  std::vector<PID> triggerable;
  for (const auto& p : cfg.procs) {
    if (dynamic_cast<const BrowserProc*>(p.get())) triggerable.push_back(p->id);
    if (auto* a = dynamic_cast<const AttackerProc*>(p.get());
        a && a->recipe)
      triggerable.push_back(p->id);
  }
  std::map<PID, size_t> triggers;
  size_t rr = 0;

  while (tr.steps.size() < maxSteps) {
    std::optional<ProcessingStep> ps;
    if (!cfg.pool.empty()) {
      size_t idx = newestFirst ? cfg.pool.size() - 1 : 0;
      Process* rec = cfg.addressee(cfg.pool[idx].to);
      ps = step(cfg, idx, rec->id, ch);
    } else {
      bool any = false;
      for (size_t k = 0; k < triggerable.size(); ++k) {
        const PID& pid = triggerable[(rr + k) % triggerable.size()];
        if (triggers[pid] < maxTriggersPerProcess) {
          ++triggers[pid];
          rr = (rr + k + 1) % triggerable.size();
          ps = step(cfg, std::nullopt, pid, ch);
          any = true;
          break;
        }
      }
      if (!any) break;
    }
    if (!ps) break;
    ps->index = tr.steps.size();
    tr.steps.push_back(std::move(*ps));
  }
  return tr;
}

Trace runSeeded(const ScenarioConfig& scenario, uint64_t seed,
                size_t maxSteps) {
  BuiltScenario b = buildScenario(scenario);
  SeededChooser ch(seed);
  return runDriver(b.cfg, b.initialKnowledge, scenario.name, seed, ch,
                   maxSteps);
}

// --- bounded exploration -----------------------------------------------------

namespace {

struct ExpNode {
  Configuration cfg;
  std::vector<ProcessingStep> steps;
  std::map<PID, size_t> triggers;
  size_t depth = 0;
};

struct ExpAction {
  std::optional<size_t> poolIdx;
  PID pid;
};

// Enumerate choice vectors for one action by iterative deepening over the
// recorded fans: run with a script, then branch on every position past the
// script's end.
void realize(const Configuration& base, const ExpAction& act,
             std::vector<size_t> script,
             std::vector<std::pair<Configuration, ProcessingStep>>& out) {
  Configuration cfg = base.clone();
  VectorChooser vc(script);
  auto ps = step(cfg, act.poolIdx, act.pid, vc);
  if (!ps) return;
  out.emplace_back(std::move(cfg), std::move(*ps));
  const std::vector<size_t>& fans = vc.fans();
  for (size_t p = script.size(); p < fans.size(); ++p) {
    std::vector<size_t> prefix = script;
    prefix.resize(p, 0);
    for (size_t v = 1; v < fans[p]; ++v) {
      std::vector<size_t> next = prefix;
      next.push_back(v);
      realize(base, act, std::move(next), out);
    }
  }
}

}  // namespace

ExploreResult exploreExhaustive(const ScenarioConfig& scenario,
                                size_t depthBound,
                                const PruningPolicy& pruning) {
  BuiltScenario built = buildScenario(scenario);
  ExploreResult res;

  std::vector<PID> triggerable;
  for (const auto& p : built.cfg.procs) {
    if (dynamic_cast<const BrowserProc*>(p.get())) triggerable.push_back(p->id);
    if (auto* a = dynamic_cast<const AttackerProc*>(p.get());
        a && a->recipe)
      triggerable.push_back(p->id);
  }

  const size_t hardStepCap = depthBound * 50 + 200;

  std::set<std::string> visited;
  std::deque<ExpNode> q;
  ExpNode root;
  root.cfg = built.cfg.clone();
  visited.insert(root.cfg.digest());
  q.push_back(std::move(root));

  auto mkTrace = [&](const std::vector<ProcessingStep>& steps) {
    Trace t;
    t.scenario = scenario.name;
    t.steps = steps;
    t.initialAttackerKnowledge = built.initialKnowledge;
    return t;
  };

  while (!q.empty()) {
    if (res.nodes >= pruning.nodeLimit) {
      res.aborted = true;
      break;
    }
    ExpNode n = std::move(q.front());
    q.pop_front();
    ++res.nodes;
    if (n.depth > res.maxDepthReached) res.maxDepthReached = n.depth;
    if (n.steps.size() >= hardStepCap) continue;

    std::vector<ExpAction> actions;
    for (size_t i = 0; i < n.cfg.pool.size(); ++i)
      actions.push_back({i, n.cfg.addressee(n.cfg.pool[i].to)->id});
    for (const PID& pid : triggerable) {
      auto it = n.triggers.find(pid);
      size_t used = it == n.triggers.end() ? 0 : it->second;
      if (used < pruning.maxTriggersPerProcess)
        actions.push_back({std::nullopt, pid});
    }

    std::vector<std::pair<Configuration, ProcessingStep>> succ;
    std::vector<const ExpAction*> srcAction;
    for (const ExpAction& act : actions) {
      size_t before = succ.size();
      realize(n.cfg, act, {}, succ);
      for (size_t k = before; k < succ.size(); ++k) srcAction.push_back(&act);
    }

    // Prune before depth accounting so forced chains stay free.
    std::vector<size_t> kept;
    for (size_t k = 0; k < succ.size(); ++k) {
      bool trigger = !srcAction[k]->poolIdx.has_value();
      if (pruning.dropNoops && trigger && succ[k].second.emitted.empty() &&
          succ[k].second.notes.empty())
        continue;
      if (pruning.dedupStates && visited.count(succ[k].second.digest))
        continue;
      kept.push_back(k);
    }
    bool branching = kept.size() > 1;

    for (size_t k : kept) {
      if (pruning.dedupStates) visited.insert(succ[k].second.digest);
      ExpNode child;
      child.cfg = std::move(succ[k].first);
      child.steps = n.steps;
      ProcessingStep ps = std::move(succ[k].second);
      ps.index = child.steps.size();
      child.steps.push_back(std::move(ps));
      child.triggers = n.triggers;
      if (!srcAction[k]->poolIdx.has_value())
        ++child.triggers[srcAction[k]->pid];
      child.depth = n.depth + (branching ? 1 : 0);

      Trace t = mkTrace(child.steps);
      if (!checkAll(t, built.mc).empty()) {
        res.violating.push_back(std::move(t));
        continue;
      }
      if (child.depth <= depthBound) q.push_back(std::move(child));
    }
  }
  return res;
}

}  // namespace fapisim
