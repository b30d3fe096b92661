#include "fapisim/attacker.hpp"

#include <stdexcept>

namespace fapisim {

AttackerProc::AttackerProc(const AttackerProc& o)
    : Process(o),
      kb(o.kb),
      dnsTable(o.dnsTable),
      dnsOverrides(o.dnsOverrides),
      tlskeys(o.tlskeys),
      keyMapping(o.keyMapping),
      facts(o.facts),
      recipe(o.recipe ? o.recipe->clone() : nullptr) {}

void AttackerProc::send(StepCtx& ctx, const Term& to, const Term& msg) {
  Term m = normalize(msg);
  if (!kb.derivable(m))
    throw std::logic_error("attacker sent underivable message: " + m.render());
  ctx.emit(to, addresses.empty() ? Term() : addresses.front(), m);
}

std::optional<AttackerProc::DecReq> AttackerProc::decryptRequest(
    const Event& ev) const {
  if (ev.msg.kind() != Term::Kind::App || ev.msg.fn() != Fn::EncA)
    return std::nullopt;
  for (const auto& [domain, priv] : tlskeys) {
    Term inner = decA(ev.msg, priv);
    if (inner.isFail() || !inner.isSeq() || inner.size() != 2) continue;
    Term req = inner.at(1);
    if (!isReq(req)) continue;
    return DecReq{req, reqNonce(req), inner.at(2), ev.from};
  }
  return std::nullopt;
}

void AttackerProc::respondEnc(StepCtx& ctx, const DecReq& r,
                              const Term& status, const Term& headers,
                              const Term& body) {
  send(ctx, r.from, encS(mkResp(r.nonce, status, headers, body), r.key));
}

void AttackerProc::onEvent(const Event& ev, StepCtx& ctx) {
  kb.add(ev.msg);
  const Term& m = ev.msg;
  if (m.isSeq() && m.size() == 3 && m.at(1) == atoms::DNSResolve()) {
    Term d = m.at(2);
    Term addr;
    if (auto ov = dnsOverrides.find(d); ov != dnsOverrides.end())
      addr = ov->second;
    else if (auto ht = dnsTable.find(d); ht != dnsTable.end())
      addr = ht->second;
    if (addr.truthy())
      send(ctx, ev.from,
           Term::seq({atoms::DNSResolved(), d, addr, m.at(3)}));
    return;
  }
  if (recipe) recipe->onEvent(*this, ev, ctx);
}

Term AttackerProc::stateTerm() const {
  std::vector<Term> known(kb.base().begin(), kb.base().end());
  std::vector<Term> ov;
  for (const auto& [d, a] : dnsOverrides) ov.push_back(Term::seq({d, a}));
  return Term::seq({Term::seq(std::move(known)), Term::seq(std::move(ov)),
                    recipe ? recipe->stateTerm() : Term::seq({})});
}

}  // namespace fapisim
