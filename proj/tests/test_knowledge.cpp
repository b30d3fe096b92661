#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dy_oracle.hpp"
#include "fapisim/knowledge.hpp"
#include "term_gen.hpp"

using namespace fapisim;

namespace {
Term N(uint64_t id) { return Term::nonce(id, "n"); }
}  // namespace

TEST_CASE("public constants are always derivable, fresh nonces never") {
  KnowledgeBase kb;
  CHECK(kb.derivable(Term::atom("anything")));
  CHECK(kb.derivable(Term::domain("as.example")));
  CHECK(kb.derivable(Term::address("a1")));
  CHECK(!kb.derivable(N(1)));
  kb.add(N(1));
  CHECK(kb.derivable(N(1)));
}

TEST_CASE("pairing decomposes, composition over known parts") {
  KnowledgeBase kb;
  kb.add(Term::seq({N(1), N(2)}));
  CHECK(kb.derivable(N(1)));
  CHECK(kb.derivable(N(2)));
  CHECK(kb.derivable(Term::seq({N(2), N(1), Term::atom("x")})));
  CHECK(!kb.derivable(N(3)));
}

TEST_CASE("symmetric encryption opens only with the key") {
  KnowledgeBase kb;
  kb.add(encS(N(1), N(9)));
  CHECK(!kb.derivable(N(1)));
  kb.add(N(9));
  CHECK(kb.derivable(N(1)));
}

TEST_CASE("asymmetric encryption needs the private key") {
  KnowledgeBase pub;
  pub.add(encA(N(1), pubOf(N(9))));
  pub.add(pubOf(N(9)));
  CHECK(!pub.derivable(N(1)));
  pub.add(N(9));
  CHECK(pub.derivable(N(1)));
}

TEST_CASE("key reachable only through layered decryption still opens") {
  KnowledgeBase kb;
  kb.add(encS(N(7), N(8)));                     // payload under inner key
  kb.add(encA(Term::seq({N(8), N(3)}), pubOf(N(5))));  // inner key under pub
  kb.add(N(5));
  CHECK(kb.derivable(N(7)));
  CHECK(kb.derivable(N(3)));
}

TEST_CASE("signatures leak their message, hashes keep preimages") {
  KnowledgeBase kb;
  kb.add(sign(N(4), N(9)));
  CHECK(kb.derivable(N(4)));
  CHECK(!kb.derivable(N(9)));

  KnowledgeBase h;
  h.add(hashT(N(4)));
  CHECK(!h.derivable(N(4)));
  CHECK(h.derivable(hashT(N(4))));
}

TEST_CASE("canonicalized mac exposes the message, not the key") {
  KnowledgeBase kb;
  kb.add(mac(N(4), N(9)));
  CHECK(kb.derivable(N(4)));   // extractmsg(mac(x, y)) = x
  CHECK(!kb.derivable(N(9)));
}

TEST_CASE("composed key works for decryption") {
  KnowledgeBase kb;
  // Key is a pair whose halves are known separately.
  kb.add(encS(N(1), Term::seq({N(2), N(3)})));
  kb.add(N(2));
  kb.add(N(3));
  CHECK(kb.derivable(N(1)));
}

TEST_CASE("derivable can synthesize encryptions it never saw") {
  KnowledgeBase kb;
  kb.add(N(1));
  CHECK(kb.derivable(encS(N(1), Term::atom("k"))));
  CHECK(kb.derivable(sign(Term::atom("m"), N(1))));
  CHECK(kb.derivable(pubOf(N(1))));
  CHECK(!kb.derivable(sign(Term::atom("m"), N(2))));
}

TEST_CASE("analyze view is a superset fixed under analysis") {
  KnowledgeBase kb;
  kb.add(Term::seq({N(1), encS(N(2), N(1))}));
  KnowledgeBase an = analyze(kb);
  CHECK(an.contains(N(1)));
  CHECK(an.contains(N(2)));
  CHECK(analyze(an).size() == an.size());
}

TEST_CASE("randomized agreement with the brute-force closure oracle") {
  gen::TermGen g(20240817);
  for (int i = 0; i < 2000; ++i) {
    std::vector<Term> base = g.base(6, 3);
    Term tgt = g.target(base, 3);
    KnowledgeBase kb;
    for (const Term& b : base) kb.add(b);
    bool fast = kb.derivable(tgt);
    bool brute = oracle::derivableBrute(base, tgt);
    if (fast != brute) {
      CAPTURE(tgt.render());
      for (const Term& b : base) MESSAGE(b.render());
    }
    REQUIRE(fast == brute);
  }
}
