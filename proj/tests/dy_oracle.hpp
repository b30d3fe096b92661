#pragma once

#include <set>
#include <vector>

#include "fapisim/term.hpp"

// Brute-force Dolev-Yao closure decision, written independently of the
// production KnowledgeBase: mark every derivable term over the explicit
// subterm universe of base and target until fixpoint, then check the target
// compositionally. Slow and obvious on purpose — this is the frozen oracle
// the fast implementation is tested against.
namespace fapisim::oracle {

inline void subterms(const Term& t, std::set<Term>& out) {
  if (!out.insert(t).second) return;
  if (t.kind() == Term::Kind::Seq || t.kind() == Term::Kind::App)
    for (const Term& a : t.args()) subterms(a, out);
}

inline bool isPublicConst(const Term& t) {
  return t.kind() == Term::Kind::Atom || t.kind() == Term::Kind::Address ||
         t.kind() == Term::Kind::Domain;
}

// Buildable from marked terms and public constants by pairing and
// constructor application alone.
inline bool composable(const Term& t, const std::set<Term>& marked) {
  if (marked.count(t) || isPublicConst(t)) return true;
  bool composite = t.kind() == Term::Kind::Seq ||
                   (t.kind() == Term::Kind::App && isConstructor(t.fn()));
  if (!composite) return false;
  for (const Term& a : t.args())
    if (!composable(a, marked)) return false;
  return true;
}

inline bool derivableBrute(const std::vector<Term>& base, const Term& target) {
  std::set<Term> uni, marked;
  for (const Term& b : base) {
    Term n = normalize(b);
    marked.insert(n);
    subterms(n, uni);
  }
  Term tgt = normalize(target);
  subterms(tgt, uni);

  // One decomposition rule per destructor equation.
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Term& t : uni) {
      if (!marked.count(t)) continue;
      std::vector<Term> got;
      if (t.kind() == Term::Kind::Seq) {
        for (const Term& a : t.args()) got.push_back(a);
      } else if (t.kind() == Term::Kind::App) {
        if (t.fn() == Fn::Sig) got.push_back(t.args()[0]);
        if (t.fn() == Fn::Hash) {
          // extractmsg over a canonicalized mac.
          const Term& body = t.args()[0];
          if (body.isSeq() && body.size() == 2) got.push_back(body.at(1));
        }
        if (t.fn() == Fn::EncS && composable(t.args()[1], marked))
          got.push_back(t.args()[0]);
        if (t.fn() == Fn::EncA) {
          const Term& ek = t.args()[1];
          if (ek.kind() == Term::Kind::App && ek.fn() == Fn::Pub &&
              composable(ek.args()[0], marked))
            got.push_back(t.args()[0]);
        }
      }
      for (const Term& g : got) changed |= marked.insert(g).second;
    }
  }
  return composable(tgt, marked);
}

}  // namespace fapisim::oracle
