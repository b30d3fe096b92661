#pragma once

#include <optional>

#include "fapisim/https_base.hpp"

namespace fapisim {

class AttackerProc;

// Scripted attacker behavior. Reacts to delivered events; keeps its own
// state, cloned together with the process.
class Recipe {
 public:
  virtual ~Recipe() = default;
  virtual std::unique_ptr<Recipe> clone() const = 0;
  virtual void onEvent(AttackerProc& a, const Event& ev, StepCtx& ctx) = 0;
  virtual Term stateTerm() const { return Term::seq({}); }
  // Consulted by the scripted-attack driver for every labelled choice of
  // every process; 0 is the natural default.
  virtual size_t pickChoice(const std::string& label, size_t n) {
    (void)label;
    (void)n;
    return 0;
  }
};

// Network attacker: observes every emitted event, receives everything not
// addressed to an honest process, answers DNS, and otherwise follows its
// recipe (if any). Every message it sends is checked to be derivable from
// its recorded knowledge.
class AttackerProc : public Process {
 public:
  AttackerProc() = default;
  AttackerProc(const AttackerProc& o);

  KnowledgeBase kb;
  std::map<Term, Term> dnsTable;      // honest resolution domain -> address
  std::map<Term, Term> dnsOverrides;  // recipe-installed poisoned entries
  std::map<Term, Term> tlskeys;       // attacker domain -> private key
  std::map<Term, Term> keyMapping;
  // Named scenario facts recipes refer to (own identities and passwords,
  // evil-AS signing keys, registered public keys); all also in kb.
  std::map<std::string, Term> facts;
  std::unique_ptr<Recipe> recipe;

  void onEvent(const Event& ev, StepCtx& ctx) override;
  void observe(const Event& ev) override { kb.add(ev.msg); }
  Term stateTerm() const override;
  std::unique_ptr<Process> clone() const override {
    return std::make_unique<AttackerProc>(*this);
  }

  void send(StepCtx& ctx, const Term& to, const Term& msg);

  // Fresh nonce that immediately becomes attacker knowledge.
  Term freshKnown(StepCtx& ctx, std::string_view label) {
    Term n = ctx.fresh(label);
    kb.add(n);
    return n;
  }
  Term fact(const std::string& key) const {
    auto it = facts.find(key);
    return it == facts.end() ? Term() : it->second;
  }

  // TLS server role on attacker domains.
  struct DecReq {
    Term req;
    Term nonce;
    Term key;
    Term from;
  };
  std::optional<DecReq> decryptRequest(const Event& ev) const;
  void respondEnc(StepCtx& ctx, const DecReq& r, const Term& status,
                  const Term& headers, const Term& body);
};

}  // namespace fapisim
