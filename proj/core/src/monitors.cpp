#include "fapisim/monitors.hpp"

namespace fapisim {

namespace {

struct NoteAt {
  size_t step;
  const Note* note;
};

std::vector<NoteAt> notesOf(const Trace& t, const std::string& type) {
  std::vector<NoteAt> out;
  for (size_t i = 0; i < t.steps.size(); ++i)
    for (const Note& n : t.steps[i].notes)
      if (n.type == type) out.push_back({i, &n});
  return out;
}

Term noteTerm(const Note& n, const std::string& key) {
  auto it = n.terms.find(key);
  return it == n.terms.end() ? nil() : it->second;
}

std::string noteAttr(const Note& n, const std::string& key) {
  auto it = n.attrs.find(key);
  return it == n.attrs.end() ? std::string() : it->second;
}

}  // namespace

size_t countNotes(const Trace& t, const std::string& type) {
  return notesOf(t, type).size();
}

std::vector<MonitorVerdict> checkAuthorization(const Trace& t,
                                               const MonitorContext& mc) {
  std::vector<MonitorVerdict> out;
  KnowledgeBase kb = t.attackerKnowledge();
  for (const NoteAt& na : notesOf(t, "resourceIssued")) {
    Term identity = noteTerm(*na.note, "identity");
    if (mc.attackerIdentities.count(identity)) continue;
    Term resource = noteTerm(*na.note, "resource");
    if (kb.derivable(resource))
      out.push_back({"authorization",
                     "resource nonce of " + identity.render() +
                         " derivable by the attacker",
                     na.step});
  }
  return out;
}

std::vector<MonitorVerdict> checkAuthentication(const Trace& t,
                                                const MonitorContext& mc) {
  std::vector<MonitorVerdict> out;
  KnowledgeBase kb = t.attackerKnowledge();
  for (const NoteAt& na : notesOf(t, "loggedIn")) {
    if (!mc.honestClientPids.count(noteAttr(*na.note, "process"))) continue;
    Term identity = noteTerm(*na.note, "identity");
    if (mc.attackerIdentities.count(identity)) continue;
    Term ssid = noteTerm(*na.note, "ssid");
    if (kb.derivable(ssid))
      out.push_back({"authentication",
                     "service session id for " + identity.render() +
                         " derivable by the attacker",
                     na.step});
  }
  return out;
}

std::vector<MonitorVerdict> checkSessionIntegrity(const Trace& t,
                                                  const MonitorContext& mc) {
  std::vector<MonitorVerdict> out;
  auto started = notesOf(t, "started");
  auto authenticated = notesOf(t, "authenticated");
  auto created = notesOf(t, "sessionCreated");

  auto sessionState = [&](const Term& lsid, size_t upto,
                          Term& state, Term& as) {
    for (const NoteAt& na : created)
      if (na.step <= upto && noteTerm(*na.note, "lsid") == lsid) {
        state = noteTerm(*na.note, "state");
        as = noteTerm(*na.note, "as");
        return true;
      }
    return false;
  };
  auto wasStarted = [&](const Term& lsid, size_t upto) {
    for (const NoteAt& na : started)
      if (na.step <= upto && noteTerm(*na.note, "lsid") == lsid &&
          mc.honestBrowserPids.count(noteAttr(*na.note, "process")))
        return true;
    return false;
  };
  auto wasAuthenticated = [&](const Term& as, const Term& state, size_t upto,
                              const Term* identity) {
    for (const NoteAt& na : authenticated) {
      if (na.step > upto) continue;
      if (noteTerm(*na.note, "as") != as) continue;
      if (noteTerm(*na.note, "state") != state) continue;
      if (identity && noteTerm(*na.note, "identity") != *identity) continue;
      return true;
    }
    return false;
  };

  auto checkCompletion = [&](const NoteAt& na, const char* what,
                             const Term* identity) {
    if (!mc.honestClientPids.count(noteAttr(*na.note, "process"))) return;
    Term lsid = noteTerm(*na.note, "lsid");
    if (!lsid.truthy()) return;
    // Sessions no honest browser started belong to the attacker (browser
    // session cookies are only ever set through /startLogin, which records
    // `started`); integrity makes no promise about those.
    if (!wasStarted(lsid, na.step)) return;
    Term state, as;
    if (!sessionState(lsid, na.step, state, as)) return;
    if (!mc.honestAsDomains.count(as)) return;
    if (!wasAuthenticated(as, state, na.step, identity))
      out.push_back({"session_integrity",
                     std::string(what) + " without a matching user "
                                         "authentication: " +
                         lsid.render(),
                     na.step});
  };

  for (const NoteAt& na : notesOf(t, "loggedIn")) {
    Term identity = noteTerm(*na.note, "identity");
    checkCompletion(na, "login", &identity);
  }
  for (const NoteAt& na : notesOf(t, "resourceStored"))
    checkCompletion(na, "resource delivery", nullptr);
  return out;
}

std::vector<MonitorVerdict> checkAll(const Trace& t,
                                     const MonitorContext& mc) {
  std::vector<MonitorVerdict> out = checkAuthorization(t, mc);
  for (auto& v : checkAuthentication(t, mc)) out.push_back(std::move(v));
  for (auto& v : checkSessionIntegrity(t, mc)) out.push_back(std::move(v));
  return out;
}

}  // namespace fapisim
