#include "fapisim/https_base.hpp"

namespace fapisim {

namespace atoms {
Term HTTPReq() { return Term::atom("HTTPReq"); }
Term HTTPResp() { return Term::atom("HTTPResp"); }
Term URL() { return Term::atom("URL"); }
Term GET() { return Term::atom("GET"); }
Term POST() { return Term::atom("POST"); }
Term S() { return Term::atom("S"); }
Term P() { return Term::atom("P"); }
Term DNSResolve() { return Term::atom("DNSResolve"); }
Term DNSResolved() { return Term::atom("DNSResolved"); }
Term LEAK() { return Term::atom("LEAK"); }
}  // namespace atoms

Term mkReq(const Term& nonce, const Term& method, const Term& host,
           const Term& path, const Term& params, const Term& headers,
           const Term& body) {
  return Term::seq({atoms::HTTPReq(), nonce, method, host, path, params,
                    headers, body});
}
Term mkResp(const Term& nonce, const Term& status, const Term& headers,
            const Term& body) {
  return Term::seq({atoms::HTTPResp(), nonce, status, headers, body});
}
Term mkUrl(const Term& protocol, const Term& host, const Term& path,
           const Term& params, const Term& fragment) {
  return Term::seq({atoms::URL(), protocol, host, path, params, fragment});
}

bool isReq(const Term& m) {
  return m.isSeq() && m.size() == 8 && m.at(1) == atoms::HTTPReq();
}
bool isResp(const Term& m) {
  return m.isSeq() && m.size() == 5 && m.at(1) == atoms::HTTPResp();
}
bool isUrl(const Term& m) {
  return m.isSeq() && m.size() == 6 && m.at(1) == atoms::URL();
}

Term header(const Term& m, std::string_view name) {
  Term hs = isReq(m) ? reqHeaders(m) : respHeaders(m);
  return dictGet(hs, Term::atom(name));
}

// --- ServerCore --------------------------------------------------------------

void ServerCore::httpsSimpleSend(const Term& reference, const Term& request,
                                 StepCtx& ctx) {
  Term host = reqHost(request);
  auto cached = dnsCache.find(host);
  if (cached != dnsCache.end()) {
    sendResolved(reference, request, cached->second, ctx);
    return;
  }
  Term n = ctx.fresh("dns");
  pendingDNS.emplace(n, PendingDns{reference, request});
  ctx.emit(dnsAddr, ownAddress(),
           Term::seq({atoms::DNSResolve(), host, n}));
}

void ServerCore::sendResolved(const Term& reference, const Term& request,
                              const Term& addr, StepCtx& ctx) {
  Term host = reqHost(request);
  auto km = keyMapping.find(host);
  if (km == keyMapping.end()) return;
  Term key = ctx.fresh("tlssym");
  pendingRequests.push_back({reference, request, key, addr});
  ctx.emit(addr, ownAddress(), encA(Term::seq({request, key}), km->second));
}

void ServerCore::respond(const Responder& r, const Term& status,
                         const Term& headers, const Term& body, StepCtx& ctx) {
  ctx.emit(r.senderAddr, ownAddress(),
           encS(mkResp(r.nonce, status, headers, body), r.key));
}

void ServerCore::onEvent(const Event& ev, StepCtx& ctx) {
  const Term& m = ev.msg;

  if (m == TRIGGER()) {
    onTrigger(ctx);
    return;
  }

  // DNS response: ⟨DNSResolved, domain, address, nonce⟩.
  if (m.isSeq() && m.size() == 4 && m.at(1) == atoms::DNSResolved()) {
    auto it = pendingDNS.find(m.at(4));
    if (it == pendingDNS.end()) return;  // unknown nonce: drop
    PendingDns saved = it->second;
    pendingDNS.erase(it);
    if (reqHost(saved.request) != m.at(2)) return;
    dnsCache[m.at(2)] = m.at(3);
    sendResolved(saved.reference, saved.request, m.at(3), ctx);
    return;
  }

  // Encrypted request for one of our domains.
  if (m.kind() == Term::Kind::App && m.fn() == Fn::EncA) {
    for (const auto& [domain, priv] : tlskeys) {
      Term inner = decA(m, priv);
      if (inner.isFail() || !inner.isSeq() || inner.size() != 2) continue;
      Term req = inner.at(1);
      Term symKey = inner.at(2);
      if (!isReq(req) || reqHost(req) != domain) continue;
      processHttpsRequest(req, Responder{reqNonce(req), symKey, ev.from}, ctx);
      return;
    }
    return;
  }

  // Encrypted response matching a pending request.
  if (m.kind() == Term::Kind::App && m.fn() == Fn::EncS) {
    for (size_t i = 0; i < pendingRequests.size(); ++i) {
      Term resp = decS(m, pendingRequests[i].key);
      if (resp.isFail() || !isResp(resp)) continue;
      if (respNonce(resp) != reqNonce(pendingRequests[i].request)) continue;
      PendingReq pr = pendingRequests[i];
      pendingRequests.erase(pendingRequests.begin() +
                            static_cast<ptrdiff_t>(i));
      processHttpsResponse(resp, pr.reference, pr.request, ctx);
      return;
    }
    return;
  }

  onOther(ev, ctx);
}

Term ServerCore::stateTerm() const {
  std::vector<Term> pd;
  for (const auto& [n, e] : pendingDNS)
    pd.push_back(Term::seq({n, e.reference, e.request}));
  std::vector<Term> pr;
  for (const auto& e : pendingRequests)
    pr.push_back(Term::seq({e.reference, e.request, e.key, e.addr}));
  std::vector<Term> tk;
  for (const auto& [d, k] : tlskeys) tk.push_back(Term::seq({d, k}));
  std::vector<Term> dc;
  for (const auto& [d, a] : dnsCache) dc.push_back(Term::seq({d, a}));
  std::vector<Term> km;
  for (const auto& [d, k] : keyMapping) km.push_back(Term::seq({d, k}));
  return Term::seq({Term::seq(std::move(pd)), Term::seq(std::move(pr)),
                    Term::seq(std::move(tk)), Term::seq(std::move(dc)),
                    Term::seq(std::move(km)), roleStateTerm()});
}

}  // namespace fapisim
