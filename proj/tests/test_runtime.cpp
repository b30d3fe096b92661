#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "fapisim/attacker.hpp"
#include "fapisim/runtime.hpp"

using namespace fapisim;

namespace {

// Minimal honest process: answers every delivered message with an echo and
// one fresh nonce, after consulting a labelled binary choice.
struct EchoProc : Process {
  int seen = 0;

  void onEvent(const Event& ev, StepCtx& ctx) override {
    ++seen;
    if (ev.msg == TRIGGER()) return;
    size_t c = ctx.choose("echo.flavor", 2);
    Term n = ctx.fresh("echo");
    ctx.emit(ev.from, ev.to,
             Term::seq({Term::atom(c == 0 ? "plain" : "fancy"), ev.msg, n}));
    Note note;
    note.type = "echoed";
    note.attrs["process"] = id;
    ctx.note(std::move(note));
  }
  Term stateTerm() const override {
    return Term::seq({Term::atom("echo"),
                      Term::nonce(static_cast<uint64_t>(seen), "count")});
  }
  std::unique_ptr<Process> clone() const override {
    return std::make_unique<EchoProc>(*this);
  }
};

Configuration makeCfg() {
  Configuration cfg;
  auto e = std::make_shared<EchoProc>();
  e->id = "echo1";
  e->addresses = {Term::address("echo1")};
  cfg.procs.push_back(e);
  return cfg;
}

}  // namespace

TEST_CASE("step consumes the pool event and records everything") {
  Configuration cfg = makeCfg();
  cfg.pool.push_back(
      {Term::address("echo1"), Term::address("x"), Term::atom("hi")});
  PolicyChooser ch({{"echo.flavor", 1}});
  auto ps = step(cfg, 0, "echo1", ch);
  REQUIRE(ps.has_value());
  CHECK(cfg.pool.size() == 1);  // reply replaced the consumed event
  CHECK(ps->actor == "echo1");
  REQUIRE(ps->choices.size() == 1);
  CHECK(ps->choices[0].label == "echo.flavor");
  CHECK(ps->choices[0].chosen == 1);
  CHECK(ps->choices[0].of == 2);
  REQUIRE(ps->emitted.size() == 1);
  CHECK(ps->emitted[0].msg.at(1) == Term::atom("fancy"));
  REQUIRE(ps->notes.size() == 1);
  CHECK(ps->notes[0].type == "echoed");
  CHECK(!ps->digest.empty());
}

TEST_CASE("invalid deliveries leave the configuration unchanged") {
  Configuration cfg = makeCfg();
  PolicyChooser ch;
  CHECK(!step(cfg, 3, "echo1", ch).has_value());
  CHECK(!step(cfg, std::nullopt, "ghost", ch).has_value());
  CHECK(cfg.pool.empty());
}

TEST_CASE("TRIGGER injection needs no pool event") {
  Configuration cfg = makeCfg();
  PolicyChooser ch;
  auto ps = step(cfg, std::nullopt, "echo1", ch);
  REQUIRE(ps.has_value());
  CHECK(ps->delivered.msg == TRIGGER());
  CHECK(ps->emitted.empty());
}

TEST_CASE("digest ignores nonce identity but not structure") {
  Configuration a = makeCfg();
  Configuration b = makeCfg();
  a.nonceCounter = 10;
  b.nonceCounter = 900;
  a.pool.push_back({Term::address("echo1"), Term::address("x"),
                    Term::nonce(10, "n")});
  b.pool.push_back({Term::address("echo1"), Term::address("x"),
                    Term::nonce(900, "n")});
  CHECK(a.digest() == b.digest());
  b.pool.push_back({Term::address("echo1"), Term::address("x"),
                    Term::atom("extra")});
  CHECK(a.digest() != b.digest());
}

TEST_CASE("clone is deep: stepping the clone leaves the original") {
  Configuration cfg = makeCfg();
  cfg.pool.push_back(
      {Term::address("echo1"), Term::address("x"), Term::atom("hi")});
  Configuration copy = cfg.clone();
  PolicyChooser ch;
  step(copy, 0, "echo1", ch);
  CHECK(cfg.pool.size() == 1);
  CHECK(dynamic_cast<EchoProc*>(cfg.find("echo1"))->seen == 0);
  CHECK(dynamic_cast<EchoProc*>(copy.find("echo1"))->seen == 1);
}

TEST_CASE("corrupting a process hands its state to the attacker") {
  Configuration cfg = makeCfg();
  auto att = std::make_shared<AttackerProc>();
  att->id = "attacker";
  att->addresses = {Term::address("attacker")};
  cfg.procs.push_back(att);

  Term secret = Term::nonce(static_cast<uint64_t>(0), "count");
  CHECK(!att->kb.derivable(Term::seq({Term::atom("echo"), secret})));
  CHECK(corrupt(cfg, "echo1"));
  CHECK(corrupt(cfg, "echo1"));  // idempotent
  CHECK(!corrupt(cfg, "ghost"));
  CHECK(cfg.find("echo1")->corrupted);
  CHECK(att->kb.derivable(secret));

  // Events to the corrupted process are handled by the attacker.
  cfg.pool.push_back(
      {Term::address("echo1"), Term::address("x"), Term::atom("hi")});
  PolicyChooser ch;
  auto ps = step(cfg, 0, "echo1", ch);
  REQUIRE(ps.has_value());
  CHECK(ps->actor == "attacker");
}

TEST_CASE("trace attacker knowledge grows with emissions and own nonces") {
  Trace t;
  t.initialAttackerKnowledge.push_back(Term::nonce(1, "init"));
  ProcessingStep s1;
  s1.emitted.push_back({Term::address("a"), Term::address("b"),
                        encS(Term::nonce(2, "m"), Term::nonce(3, "k"))});
  ProcessingStep s2;
  s2.attackerFresh.push_back(Term::nonce(3, "k"));
  t.steps.push_back(s1);
  t.steps.push_back(s2);

  CHECK(t.attackerKnowledge(0).derivable(Term::nonce(1, "init")));
  CHECK(!t.attackerKnowledge(1).derivable(Term::nonce(2, "m")));
  CHECK(t.attackerKnowledge(2).derivable(Term::nonce(2, "m")));
}

TEST_CASE("choosers: seeded is deterministic, vector records fans") {
  SeededChooser a(7), b(7), c(8);
  std::vector<size_t> va, vb, vc;
  for (int i = 0; i < 32; ++i) {
    va.push_back(a.pick("l", 5));
    vb.push_back(b.pick("l", 5));
    vc.push_back(c.pick("l", 5));
  }
  CHECK(va == vb);
  CHECK(va != vc);

  VectorChooser vec({1, 4});
  CHECK(vec.pick("x", 3) == 1);
  CHECK(vec.pick("x", 3) == 0);  // out-of-range scripts clamp to 0
  CHECK(vec.pick("x", 2) == 0);  // beyond the script defaults to 0
  CHECK(vec.fans() == std::vector<size_t>{3, 3, 2});
}

TEST_CASE("trace rendering is one JSON object per line") {
  Trace t;
  t.scenario = "unit";
  t.seed = 3;
  ProcessingStep s;
  s.actor = "echo1";
  s.delivered = {Term::address("echo1"), Term::address("x"), Term::atom("m")};
  s.digest = "d";
  t.steps.push_back(s);

  std::istringstream ss(renderTraceJson(t));
  std::string line;
  size_t lines = 0;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    ++lines;
    CHECK(line.front() == '{');
    CHECK(line.back() == '}');
  }
  CHECK(lines == 2);  // header + one step
}
