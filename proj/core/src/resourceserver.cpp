#include "fapisim/resourceserver.hpp"

#include "fapisim/authserver.hpp"
#include "fapisim/browser.hpp"

namespace fapisim {

Term RSProc::findToken(const Term& at, StepCtx& ctx) const {
  const auto* as = dynamic_cast<const ASProc*>(ctx.lookup(asPid));
  if (!as) return fail();
  for (const Term& e : as->accessTokens) {
    if (e.size() == 4 && e.at(3) == at) return e;  // ⟨sub, cid, at, r⟩
    if (e.size() == 6 && e.at(4) == at) return e;  // ⟨kind, sub, cid, at, key, rw⟩
  }
  return fail();
}

void RSProc::serveResource(const Term& identity, bool write,
                           const Responder& r, StepCtx& ctx) {
  Term n;
  if (write) {
    n = ctx.fresh("wNonce");
    wNonces[identity] = n;
  } else {
    auto it = rNonces.find(identity);
    if (it == rNonces.end())
      it = rNonces.emplace(identity, ctx.fresh("rNonce")).first;
    n = it->second;
  }
  Note note;
  note.type = "resourceIssued";
  note.attrs["process"] = id;
  note.attrs["mode"] = write ? "write" : "read";
  note.terms["identity"] = identity;
  note.terms["resource"] = n;
  ctx.note(std::move(note));
  respond(r, Term::atom("200"), Term::seq({}), n, ctx);
}

void RSProc::processHttpsRequest(const Term& req, const Responder& r,
                                 StepCtx& ctx) {
  Term path = reqPath(req);
  Term host = reqHost(req);

  if (path.isAtom("/MTLS-prepare")) {
    Term pub = dictGet(reqBody(req), Term::atom("pub_key"));
    if (!pub.truthy()) return;
    auto km = keyMapping.find(host);
    if (km == keyMapping.end()) return;
    Term n = ctx.fresh("mtlsnonce");
    mtlsRequests.push_back(Term::seq({n, pub}));
    respond(r, Term::atom("200"), Term::seq({}),
            encA(Term::seq({n, km->second}), pub), ctx);
    return;
  }

  if (path.isAtom("/OAUTB-prepare")) {
    auto km = keyMapping.find(host);
    if (km == keyMapping.end()) return;
    Term tn = ctx.fresh("tbnonce");
    oautbEKM.insert(hashT(Term::seq({reqNonce(req), tn, km->second})));
    respond(r, Term::atom("200"), Term::seq({}),
            dict({{Term::atom("tb_nonce"), tn}}), ctx);
    return;
  }

  if (path.isAtom("/resource-r")) {
    Term auth = header(req, "Authorization");
    if (!auth.isSeq() || auth.size() != 2 ||
        !auth.at(1).isAtom("Bearer"))
      return;
    Term e = findToken(auth.at(2), ctx);
    if (e.isFail() || e.size() != 4 || !e.at(4).isAtom("r")) return;
    serveResource(e.at(1), false, r, ctx);
    return;
  }

  if (path.isAtom("/resource-rw")) {
    Term body = reqBody(req);
    Term at = dictGet(body, Term::atom("access_token"));
    if (knobs && knobs->fixes.atIss) {
      if (dictGet(body, Term::atom("at_iss")) != authServ) return;
    }
    Term e = findToken(at, ctx);
    if (e.isFail() || e.size() != 6 || !e.at(6).isAtom("rw")) return;
    Term key = e.at(5);
    if (e.at(1).isAtom("MTLS")) {
      Term n = dictGet(body, Term::atom("MTLS_AuthN"));
      bool found = false;
      for (size_t i = 0; i < mtlsRequests.size(); ++i)
        if (mtlsRequests[i] == Term::seq({n, key})) {
          mtlsRequests.erase(mtlsRequests.begin() +
                             static_cast<ptrdiff_t>(i));
          found = true;
          break;
        }
      if (!found) return;
    } else if (e.at(1).isAtom("OAUTB")) {
      Term tbid = verifyTB(header(req, "Sec-Token-Binding"),
                           atoms::TB_provided(), oautbEKM);
      if (tbid.isFail() || tbid != key) return;
    } else {
      return;
    }
    bool write = ctx.choose("rs.rw", 2) == 1;
    serveResource(e.at(2), write, r, ctx);
    return;
  }
}

Term RSProc::roleStateTerm() const {
  std::vector<Term> rn, wn, ekms(oautbEKM.begin(), oautbEKM.end());
  for (const auto& [idn, n] : rNonces) rn.push_back(Term::seq({idn, n}));
  for (const auto& [idn, n] : wNonces) wn.push_back(Term::seq({idn, n}));
  return Term::seq({authServ, Term::seq(std::move(rn)),
                    Term::seq(std::move(wn)), Term::seq(std::move(ekms)),
                    Term::seq(mtlsRequests)});
}

}  // namespace fapisim
