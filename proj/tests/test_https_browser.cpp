#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fapisim/browser.hpp"
#include "fapisim/https_base.hpp"

using namespace fapisim;

namespace {

// Smallest possible HTTPS role: a server answering "pong" to every request,
// used to exercise the generic core in isolation.
struct PongServer : ServerCore {
  int requests = 0;
  void processHttpsRequest(const Term&, const Responder& r,
                           StepCtx& ctx) override {
    ++requests;
    respond(r, Term::atom("200"), Term::seq({}), Term::atom("pong"), ctx);
  }
  void processHttpsResponse(const Term& resp, const Term& reference,
                            const Term&, StepCtx& ctx) override {
    lastResp = resp;
    lastRef = reference;
    (void)ctx;
  }
  Term lastResp, lastRef;
  std::unique_ptr<Process> clone() const override {
    return std::make_unique<PongServer>(*this);
  }
};

struct Rig {
  Configuration cfg;
  PongServer *a = nullptr, *b = nullptr;
  Term keyA = Term::nonce(100, "tls:a"), keyB = Term::nonce(101, "tls:b");

  Rig() {
    auto pa = std::make_shared<PongServer>();
    auto pb = std::make_shared<PongServer>();
    pa->id = "a";
    pb->id = "b";
    pa->addresses = {Term::address("a")};
    pb->addresses = {Term::address("b")};
    pa->dnsAddr = pb->dnsAddr = Term::address("dns");
    pa->tlskeys[Term::domain("a.example")] = keyA;
    pb->tlskeys[Term::domain("b.example")] = keyB;
    for (auto* p : {pa.get(), pb.get()}) {
      p->keyMapping[Term::domain("a.example")] = pubOf(keyA);
      p->keyMapping[Term::domain("b.example")] = pubOf(keyB);
    }
    cfg.procs.push_back(pa);
    cfg.procs.push_back(pb);
    a = pa.get();
    b = pb.get();
  }

  // Delivers every pool event in order, answering DNS by the fixed table.
  void drain(Chooser& ch) {
    while (!cfg.pool.empty()) {
      Event ev = cfg.pool.front();
      if (ev.to == Term::address("dns")) {
        cfg.pool.erase(cfg.pool.begin());
        REQUIRE(ev.msg.at(1) == atoms::DNSResolve());
        Term host = ev.msg.at(2);
        Term addr = host == Term::domain("a.example") ? Term::address("a")
                                                      : Term::address("b");
        cfg.pool.push_back({ev.from, Term::address("dns"),
                            Term::seq({atoms::DNSResolved(), host, addr,
                                       ev.msg.at(3)})});
        continue;
      }
      Process* rec = cfg.addressee(ev.to);
      REQUIRE(rec != nullptr);
      step(cfg, 0, rec->id, ch);
    }
  }
};

}  // namespace

TEST_CASE("https round trip: DNS, TLS wrapping, response correlation") {
  Rig rig;
  PolicyChooser ch;
  uint64_t counter = 1000;
  StepCtx ctx(counter, ch, [&](const PID& p) { return rig.cfg.find(p); });

  Term req = mkReq(Term::nonce(counter++, "reqnonce"), atoms::GET(),
                   Term::domain("b.example"), Term::atom("/"), Term::seq({}),
                   Term::seq({}), nil());
  rig.a->httpsSimpleSend(Term::atom("ref1"), req, ctx);
  for (Event& e : ctx.out) rig.cfg.pool.push_back(e);

  // Exactly one DNS resolve to the DNS address.
  REQUIRE(rig.cfg.pool.size() == 1);
  CHECK(rig.cfg.pool[0].to == Term::address("dns"));

  rig.drain(ch);
  CHECK(rig.b->requests == 1);
  REQUIRE(isResp(rig.a->lastResp));
  CHECK(respBody(rig.a->lastResp) == Term::atom("pong"));
  CHECK(rig.a->lastRef == Term::atom("ref1"));
}

TEST_CASE("wire format: requests under the host key, responses symmetric") {
  Rig rig;
  PolicyChooser ch;
  uint64_t counter = 1000;
  StepCtx ctx(counter, ch, [&](const PID& p) { return rig.cfg.find(p); });
  Term req = mkReq(Term::nonce(counter++, "reqnonce"), atoms::GET(),
                   Term::domain("b.example"), Term::atom("/"), Term::seq({}),
                   Term::seq({}), nil());
  rig.a->httpsSimpleSend(Term::atom("r"), req, ctx);
  for (Event& e : ctx.out) rig.cfg.pool.push_back(e);

  // Resolve DNS manually, inspect the encrypted request.
  Event dns = rig.cfg.pool.front();
  rig.cfg.pool.erase(rig.cfg.pool.begin());
  rig.cfg.pool.push_back({dns.from, Term::address("dns"),
                          Term::seq({atoms::DNSResolved(), dns.msg.at(2),
                                     Term::address("b"), dns.msg.at(3)})});
  step(rig.cfg, 0, "a", ch);
  REQUIRE(rig.cfg.pool.size() == 1);
  Term wire = rig.cfg.pool[0].msg;
  REQUIRE(wire.kind() == Term::Kind::App);
  CHECK(wire.fn() == Fn::EncA);

  // Opens with b's private TLS key and carries ⟨request, symmetric key⟩.
  Term inner = decA(wire, rig.keyB);
  REQUIRE(inner.isSeq());
  CHECK(isReq(inner.at(1)));
  Term sym = inner.at(2);

  step(rig.cfg, 0, "b", ch);
  REQUIRE(rig.cfg.pool.size() == 1);
  Term resp = decS(rig.cfg.pool[0].msg, sym);
  REQUIRE(isResp(resp));
  CHECK(respNonce(resp) == reqNonce(inner.at(1)));
}

TEST_CASE("stale or mismatched DNS responses are dropped") {
  Rig rig;
  PolicyChooser ch;
  rig.cfg.pool.push_back(
      {Term::address("a"), Term::address("dns"),
       Term::seq({atoms::DNSResolved(), Term::domain("b.example"),
                  Term::address("b"), Term::nonce(77, "unknown")})});
  auto ps = step(rig.cfg, 0, "a", ch);
  REQUIRE(ps.has_value());
  CHECK(ps->emitted.empty());
}

TEST_CASE("header lookup finds the first matching header") {
  Term req = mkReq(Term::nonce(1, "n"), atoms::GET(), Term::domain("h"),
                   Term::atom("/"), Term::seq({}),
                   dict({{Term::atom("Origin"), Term::atom("o1")},
                         {Term::atom("Cookie"), Term::atom("c")}}),
                   nil());
  CHECK(header(req, "Origin") == Term::atom("o1"));
  CHECK(header(req, "Cookie") == Term::atom("c"));
  CHECK(header(req, "Missing").isNil());
}

TEST_CASE("cookie jar enforces the __Secure prefix rule") {
  Term jar = Term::seq({});
  Term secure = Term::seq({secureCookieName("sid"),
                           Term::seq({Term::atom("v1"), top()})});
  Term plainName = Term::seq({Term::atom("plain"),
                              Term::seq({Term::atom("v2"), nil()})});

  // __Secure cookies stick only over HTTPS.
  Term j1 = addCookie(jar, secure, atoms::S());
  CHECK(j1.size() == 1);
  Term j2 = addCookie(jar, secure, atoms::P());
  CHECK(j2.size() == 0);

  // Unprefixed cookies stick over plain HTTP too.
  Term j3 = addCookie(jar, plainName, atoms::P());
  CHECK(j3.size() == 1);

  // Same-named cookie is replaced, not duplicated.
  Term replacement = Term::seq({secureCookieName("sid"),
                                Term::seq({Term::atom("v9"), top()})});
  Term j4 = addCookie(j1, replacement, atoms::S());
  CHECK(j4.size() == 1);
  CHECK(dictGet(j4, secureCookieName("sid")).at(1) == Term::atom("v9"));
}

TEST_CASE("token binding messages verify against the EKM set") {
  Term key = Term::nonce(5, "tbkey");
  Term ekm = hashT(Term::seq({Term::nonce(6, "rn"), Term::nonce(7, "tn"),
                              pubOf(Term::nonce(8, "srv"))}));
  Term msg = tbMessage(atoms::TB_provided(), ekm, key);
  Term hdr = Term::seq({msg});

  CHECK(verifyTB(hdr, atoms::TB_provided(), {ekm}) == pubOf(key));
  CHECK(verifyTB(hdr, atoms::TB_referred(), {ekm}).isFail());
  Term otherEkm = hashT(Term::atom("other"));
  CHECK(verifyTB(hdr, atoms::TB_provided(), {otherEkm}).isFail());
}
