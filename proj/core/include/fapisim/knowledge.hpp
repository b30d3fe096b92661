#pragma once

#include <optional>
#include <set>

#include "fapisim/term.hpp"

namespace fapisim {

// The attacker's knowledge: recorded messages plus initial knowledge.
// Derivability is analyze-then-synthesize: saturate the base set under
// decomposition (projection, decryption with derivable keys, signature/mac
// payload extraction), then check the target top-down by composition.
// Immutable once saturated; add() invalidates the cached saturation.
class KnowledgeBase {
 public:
  void add(const Term& t);
  bool contains(const Term& t) const { return base_.count(normalize(t)) > 0; }
  size_t size() const { return base_.size(); }

  // Least superset of the base closed under decomposition.
  const std::set<Term>& analyzed() const;

  // Dolev-Yao closure membership. Atoms, addresses and domains are public;
  // nonces only if analyzed out of the base.
  bool derivable(const Term& t) const;

  const std::set<Term>& base() const { return base_; }

 private:
  std::set<Term> base_;
  mutable std::optional<std::set<Term>> analyzed_;
};

// Free-function views matching the operation contracts.
inline KnowledgeBase analyze(const KnowledgeBase& kb) {
  KnowledgeBase out = kb;
  for (const Term& t : kb.analyzed()) out.add(t);
  return out;
}
inline bool derivable(const KnowledgeBase& kb, const Term& t) {
  return kb.derivable(t);
}

}  // namespace fapisim
