#include "fapisim/runtime.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

namespace fapisim {

Process* Configuration::find(const PID& pid) const {
  for (const auto& p : procs)
    if (p->id == pid) return p.get();
  return nullptr;
}

Process* Configuration::attacker() const { return find("attacker"); }

Process* Configuration::addressee(const Term& addr) const {
  for (const auto& p : procs)
    if (p->id != "attacker" && p->listensOn(addr)) return p.get();
  return attacker();
}

Configuration Configuration::clone() const {
  Configuration c;
  c.procs.reserve(procs.size());
  for (const auto& p : procs) c.procs.emplace_back(p->clone());
  c.pool = pool;
  c.nonceCounter = nonceCounter;
  c.knobs = knobs;
  return c;
}

static std::string hex64(uint64_t v) {
  static const char* d = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = d[v & 0xf];
    v >>= 4;
  }
  return s;
}

std::string Configuration::digest() const {
  std::map<uint64_t, uint64_t> renaming;
  std::string acc;
  std::vector<const Process*> ordered;
  for (const auto& p : procs) ordered.push_back(p.get());
  std::sort(ordered.begin(), ordered.end(),
            [](const Process* a, const Process* b) { return a->id < b->id; });
  for (const Process* p : ordered) {
    acc += p->id;
    acc += p->corrupted ? "!" : ":";
    p->stateTerm().renderCanonical(acc, renaming);
    acc += "\n";
  }
  std::vector<std::string> poolR;
  for (const Event& e : pool) {
    std::string s;
    e.to.renderCanonical(s, renaming);
    s += "<-";
    e.from.renderCanonical(s, renaming);
    s += ":";
    e.msg.renderCanonical(s, renaming);
    poolR.push_back(std::move(s));
  }
  std::sort(poolR.begin(), poolR.end());
  for (const auto& s : poolR) {
    acc += s;
    acc += "\n";
  }
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : acc) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return hex64(h);
}

std::optional<ProcessingStep> step(Configuration& cfg,
                                   std::optional<size_t> poolIndex,
                                   const PID& receiver, Chooser& ch) {
  Process* proc = cfg.find(receiver);
  if (!proc) return std::nullopt;

  Event ev;
  if (poolIndex) {
    if (*poolIndex >= cfg.pool.size()) return std::nullopt;
    ev = cfg.pool[*poolIndex];
    cfg.pool.erase(cfg.pool.begin() + static_cast<ptrdiff_t>(*poolIndex));
  } else {
    Term a = proc->addresses.empty() ? Term::address(receiver)
                                     : proc->addresses.front();
    ev = Event{a, a, TRIGGER()};
  }

  // A corrupted process hands everything to the attacker.
  Process* actor = proc->corrupted && cfg.attacker() ? cfg.attacker() : proc;

  StepCtx ctx(cfg.nonceCounter, ch,
              [&cfg](const PID& pid) -> const Process* { return cfg.find(pid); });

  Term before;
  bool checkDeriv = cfg.knobs->debugDerivability && actor->id != "attacker";
  if (checkDeriv) before = actor->stateTerm();

  actor->onEvent(ev, ctx);

  if (checkDeriv && !ctx.out.empty()) {
    KnowledgeBase kb;
    kb.add(before);
    kb.add(ev.msg);
    for (const Term& n : ctx.freshmade) kb.add(n);
    for (const Event& e : ctx.out)
      if (!kb.derivable(e.msg))
        throw std::logic_error("honest process " + actor->id +
                               " emitted underivable message: " +
                               e.msg.render());
  }

  Process* att = cfg.attacker();
  for (const Event& e : ctx.out) {
    if (att) att->observe(e);
    cfg.pool.push_back(e);
  }

  ProcessingStep ps;
  ps.delivered = ev;
  ps.actor = actor->id;
  ps.choices = std::move(ctx.choices);
  ps.emitted = std::move(ctx.out);
  ps.notes = std::move(ctx.notes);
  if (actor == att) ps.attackerFresh = std::move(ctx.freshmade);
  ps.digest = cfg.digest();
  return ps;
}

bool corrupt(Configuration& cfg, const PID& p) {
  Process* proc = cfg.find(p);
  if (!proc) return false;
  if (!proc->corrupted) {
    proc->corrupted = true;
    if (Process* att = cfg.attacker())
      att->observe(Event{Term(), Term(), proc->stateTerm()});
  }
  return true;
}

KnowledgeBase Trace::attackerKnowledge(size_t upto) const {
  KnowledgeBase kb;
  for (const Term& t : initialAttackerKnowledge) kb.add(t);
  size_t n = std::min(upto, steps.size());
  for (size_t i = 0; i < n; ++i) {
    for (const Term& f : steps[i].attackerFresh) kb.add(f);
    for (const Event& e : steps[i].emitted) kb.add(e.msg);
  }
  return kb;
}

std::string renderTraceJson(const Trace& t) {
  using json = nlohmann::ordered_json;
  std::string out;
  json head;
  head["scenario"] = t.scenario;
  head["seed"] = t.seed;
  head["steps"] = t.steps.size();
  out += head.dump();
  out += "\n";
  for (const ProcessingStep& s : t.steps) {
    json j;
    j["i"] = s.index;
    j["actor"] = s.actor;
    j["event"] = {{"to", s.delivered.to.render()},
                  {"from", s.delivered.from.render()},
                  {"msg", s.delivered.msg.render()}};
    json ch = json::array();
    for (const ChoiceRec& c : s.choices)
      ch.push_back({{"label", c.label}, {"chosen", c.chosen}, {"of", c.of}});
    j["choices"] = ch;
    json em = json::array();
    for (const Event& e : s.emitted)
      em.push_back({{"to", e.to.render()}, {"msg", e.msg.render()}});
    j["emitted"] = em;
    json notes = json::array();
    for (const Note& n : s.notes) {
      json nj;
      nj["type"] = n.type;
      for (const auto& [k, v] : n.attrs) nj[k] = v;
      for (const auto& [k, v] : n.terms) nj[k] = v.render();
      notes.push_back(nj);
    }
    j["notes"] = notes;
    j["digest"] = s.digest;
    out += j.dump();
    out += "\n";
  }
  return out;
}

}  // namespace fapisim
