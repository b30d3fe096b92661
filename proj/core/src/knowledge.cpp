#include "fapisim/knowledge.hpp"

namespace fapisim {

void KnowledgeBase::add(const Term& t) {
  Term n = normalize(t);
  if (base_.insert(n).second) analyzed_.reset();
}

namespace {

// Top-down composition check against a saturated set.
bool synth(const Term& t, const std::set<Term>& s) {
  if (s.count(t)) return true;
  switch (t.kind()) {
    case Term::Kind::Atom:
    case Term::Kind::Address:
    case Term::Kind::Domain:
      return true;  // public constants
    case Term::Kind::Nonce:
      return false;
    case Term::Kind::Seq: {
      for (const Term& a : t.args())
        if (!synth(a, s)) return false;
      return true;
    }
    case Term::Kind::App: {
      if (!isConstructor(t.fn())) return false;  // not a normal form
      for (const Term& a : t.args())
        if (!synth(a, s)) return false;
      return true;
    }
  }
  return false;
}

}  // namespace

const std::set<Term>& KnowledgeBase::analyzed() const {
  if (analyzed_) return *analyzed_;
  std::set<Term> s = base_;
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<Term> found;
    for (const Term& t : s) {
      switch (t.kind()) {
        case Term::Kind::Seq:
          for (const Term& a : t.args())
            if (!s.count(a)) found.push_back(a);
          break;
        case Term::Kind::App:
          switch (t.fn()) {
            case Fn::Sig:
              if (!s.count(t.args()[0])) found.push_back(t.args()[0]);
              break;
            case Fn::Hash: {
              // extractmsg over a canonicalized mac: first element of a
              // hashed two-element sequence.
              const Term& body = t.args()[0];
              if (body.isSeq() && body.size() == 2 && !s.count(body.at(1)))
                found.push_back(body.at(1));
              break;
            }
            case Fn::EncS:
              if (synth(t.args()[1], s) && !s.count(t.args()[0]))
                found.push_back(t.args()[0]);
              break;
            case Fn::EncA: {
              const Term& ek = t.args()[1];
              if (ek.kind() == Term::Kind::App && ek.fn() == Fn::Pub &&
                  synth(ek.args()[0], s) && !s.count(t.args()[0]))
                found.push_back(t.args()[0]);
              break;
            }
            default:
              break;
          }
          break;
        default:
          break;
      }
    }
    for (const Term& t : found) changed |= s.insert(t).second;
  }
  analyzed_ = std::move(s);
  return *analyzed_;
}

bool KnowledgeBase::derivable(const Term& t) const {
  return synth(normalize(t), analyzed());
}

}  // namespace fapisim
