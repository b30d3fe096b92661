#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fapisim/knowledge.hpp"
#include "fapisim/term.hpp"

namespace fapisim {

struct ScenarioConfig;

using PID = std::string;

struct Event {
  Term to;    // Address
  Term from;  // Address
  Term msg;   // normal form
};

// Protocol-level fix toggles. Default ON (the fixed model); attacks
// switch individual ones OFF.
struct Fixes {
  bool atHash = true;            // hash of the access token in the second
                                 // id token / response JWS
  bool atIss = true;             // issuer claim checked at the resource server
  bool signedRequestJws = true;  // authorization endpoint requires the
                                 // signed request object
};

// Threat-model leak channels. Default ON.
struct Leaks {
  bool authRequest = true;          // authorization request leaks
  bool authResponseApp = true;      // authorization response leaks (app clients)
  bool accessTokenRW = true;        // read-write access token leaks at issuance
  bool misconfiguredTokenEndpoint = true;  // token endpoint may be attacker URL
};

struct Knobs {
  Fixes fixes;
  Leaks leaks;
  std::vector<Term> attackerEndpointHosts;  // domains usable as misconfigured
                                            // token endpoints
  bool debugDerivability = false;  // assert honest outputs derivable from
                                   // state + delivered event
};

struct ChoiceRec {
  std::string label;
  size_t chosen = 0;
  size_t of = 1;
};

// Resolves the algorithms' nondeterministic "let x <- Set" sites.
class Chooser {
 public:
  virtual ~Chooser() = default;
  virtual size_t pick(const std::string& label, size_t n) = 0;
};

class SeededChooser : public Chooser {
 public:
  explicit SeededChooser(uint64_t seed) : rng_(seed) {}
  size_t pick(const std::string&, size_t n) override {
    return n <= 1 ? 0 : static_cast<size_t>(rng_() % n);
  }

 private:
  std::mt19937_64 rng_;
};

// Forces labelled choices to fixed values; everything else defaults to 0.
class PolicyChooser : public Chooser {
 public:
  explicit PolicyChooser(std::map<std::string, size_t> forced = {})
      : forced_(std::move(forced)) {}
  size_t pick(const std::string& label, size_t n) override {
    auto it = forced_.find(label);
    size_t v = it == forced_.end() ? 0 : it->second;
    return v < n ? v : 0;
  }

 private:
  std::map<std::string, size_t> forced_;
};

// Replays a recorded choice vector; records the fan of every site it visits
// so an enumerator can extend the vector. Unvisited sites default to 0.
class VectorChooser : public Chooser {
 public:
  explicit VectorChooser(std::vector<size_t> script = {})
      : script_(std::move(script)) {}
  size_t pick(const std::string& label, size_t n) override {
    size_t v = pos_ < script_.size() ? script_[pos_] : 0;
    ++pos_;
    fans_.push_back(n);
    if (v >= n) v = 0;
    return v;
  }
  const std::vector<size_t>& fans() const { return fans_; }

 private:
  std::vector<size_t> script_;
  std::vector<size_t> fans_;
  size_t pos_ = 0;
};

// Structured annotation a process attaches to a step; monitors consume these.
struct Note {
  std::string type;
  std::map<std::string, std::string> attrs;
  std::map<std::string, Term> terms;
};

class Process;

// Per-step services handed to a process: fresh nonces, choice resolution,
// emission, annotations, and read-only introspection of sibling processes
// (used by the resource server's token-validity oracle).
class StepCtx {
 public:
  StepCtx(uint64_t& counter, Chooser& ch,
          std::function<const Process*(const PID&)> lookup)
      : counter_(counter), ch_(ch), lookup_(std::move(lookup)) {}

  Term fresh(std::string_view label) {
    Term n = Term::nonce(counter_++, label);
    freshmade.push_back(n);
    return n;
  }
  size_t choose(const std::string& label, size_t n) {
    size_t c = n <= 1 ? 0 : ch_.pick(label, n);
    choices.push_back({label, c, n});
    return c;
  }
  void emit(const Term& to, const Term& from, const Term& msg) {
    out.push_back({to, from, normalize(msg)});
  }
  void note(Note n) { notes.push_back(std::move(n)); }
  const Process* lookup(const PID& pid) const { return lookup_(pid); }

  std::vector<Event> out;
  std::vector<Note> notes;
  std::vector<ChoiceRec> choices;
  std::vector<Term> freshmade;

 private:
  uint64_t& counter_;
  Chooser& ch_;
  std::function<const Process*(const PID&)> lookup_;
};

// An addressable state machine. Honest roles override onEvent; the step
// relation is: consume one event, update state, emit events.
class Process {
 public:
  virtual ~Process() = default;

  PID id;
  std::vector<Term> addresses;
  bool corrupted = false;

  virtual void onEvent(const Event& ev, StepCtx& ctx) = 0;
  virtual Term stateTerm() const = 0;
  virtual std::unique_ptr<Process> clone() const = 0;

  // Network-attacker hook: called for every event added to the pool.
  virtual void observe(const Event&) {}

  bool listensOn(const Term& addr) const {
    for (const Term& a : addresses)
      if (a == addr) return true;
    return false;
  }
};

struct ProcessingStep {
  size_t index = 0;
  Event delivered;
  PID actor;
  std::vector<ChoiceRec> choices;
  std::vector<Event> emitted;
  std::vector<Note> notes;
  // Nonces the attacker freshly generated in this step; part of its
  // knowledge even when they only appear encrypted on the wire.
  std::vector<Term> attackerFresh;
  std::string digest;  // canonical configuration digest after the step
};

struct Trace {
  std::string scenario;
  uint64_t seed = 0;
  std::vector<ProcessingStep> steps;
  std::vector<Term> initialAttackerKnowledge;

  // Attacker knowledge after the first `upto` steps (SIZE_MAX: all).
  KnowledgeBase attackerKnowledge(size_t upto = SIZE_MAX) const;
};

struct Configuration {
  std::vector<std::shared_ptr<Process>> procs;
  std::vector<Event> pool;
  uint64_t nonceCounter = 0;
  std::shared_ptr<const Knobs> knobs = std::make_shared<Knobs>();

  Process* find(const PID& pid) const;
  // The honest process listening on addr, else the attacker (which listens
  // everywhere in network-attacker mode).
  Process* addressee(const Term& addr) const;
  Process* attacker() const;

  Configuration clone() const;
  std::string digest() const;  // canonical, nonce-renumbered
};

inline const Term& TRIGGER() {
  static const Term t = Term::atom("TRIGGER");
  return t;
}

// One processing step: deliver pool event `poolIndex` to process `receiver`
// (or inject TRIGGER when poolIndex is nullopt). Returns the recorded step.
// Invalid indices leave the configuration unchanged and return nullopt.
std::optional<ProcessingStep> step(Configuration& cfg,
                                   std::optional<size_t> poolIndex,
                                   const PID& receiver, Chooser& ch);

// Marks p corrupted and merges its full state into attacker knowledge.
// Returns false for unknown ids; idempotent.
bool corrupt(Configuration& cfg, const PID& p);

// Seeded pseudo-random scheduler: drains the pool (honest routing), injects
// TRIGGERs when quiescent. Deterministic for fixed (scenario, seed).
Trace runSeeded(const ScenarioConfig& scenario, uint64_t seed,
                size_t maxSteps);

struct PruningPolicy {
  size_t nodeLimit = 1'000'000;
  size_t maxTriggersPerProcess = 2;
  bool dropNoops = true;
  bool dedupStates = true;
};

struct ExploreResult {
  std::vector<Trace> violating;   // minimal violating prefixes
  size_t nodes = 0;
  size_t maxDepthReached = 0;
  bool aborted = false;           // node limit hit: inconclusive
};

// Bounded breadth-first enumeration of scheduler choices. `depthBound`
// counts branching steps: a step whose configuration admits exactly one
// enabled successor is fast-forwarded free of charge.
ExploreResult exploreExhaustive(const ScenarioConfig& scenario,
                                size_t depthBound,
                                const PruningPolicy& pruning);

std::string renderTraceJson(const Trace& t);

}  // namespace fapisim
