#include "fapisim/authserver.hpp"

#include "fapisim/browser.hpp"

namespace fapisim {

const ASProc::ClientReg* ASProc::findClient(const Term& cid) const {
  for (const ClientReg& c : clients)
    if (c.clientId == cid) return &c;
  return nullptr;
}

void ASProc::processHttpsRequest(const Term& req, const Responder& r,
                                 StepCtx& ctx) {
  Term path = reqPath(req);
  Term host = reqHost(req);

  if (path.isAtom("/auth")) {
    respond(r, Term::atom("200"), Term::seq({}),
            Term::seq({Term::atom("script_as_form"), reqParams(req)}), ctx);
    return;
  }
  if (path.isAtom("/auth2")) {
    if (!(reqMethod(req) == atoms::POST())) return;
    if (!(header(req, "Origin") == Term::seq({host, atoms::S()}))) return;
    handleAuth2(req, r, ctx);
    return;
  }
  if (path.isAtom("/token")) {
    if (!(reqMethod(req) == atoms::POST())) return;
    handleToken(req, r, ctx);
    return;
  }
  if (path.isAtom("/MTLS-prepare")) {
    const ClientReg* c =
        findClient(dictGet(reqParams(req), Term::atom("client_id")));
    if (!c || !c->mtlsPub.truthy()) return;
    auto km = keyMapping.find(host);
    if (km == keyMapping.end()) return;
    Term n = ctx.fresh("mtlsnonce");
    mtlsRequests.push_back(Term::seq({n, c->mtlsPub}));
    respond(r, Term::atom("200"), Term::seq({}),
            encA(Term::seq({n, km->second}), c->mtlsPub), ctx);
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
}

void ASProc::handleAuth2(const Term& req, const Responder& r, StepCtx& ctx) {
  Term host = reqHost(req);
  Term body = reqBody(req);

  Term identity = dictGet(body, Term::atom("identity"));
  auto pw = passwords.find(identity);
  if (pw == passwords.end()) return;
  if (dictGet(body, Term::atom("password")) != pw->second) return;

  Term cid = dictGet(body, Term::atom("client_id"));
  const ClientReg* c = findClient(cid);
  if (!c) return;

  // With the signed-request fix the protocol parameters are taken from the
  // verified request object, not the open form data.
  Term data = body;
  if (knobs && knobs->fixes.signedRequestJws) {
    Term jws = dictGet(body, Term::atom("request"));
    if (!jws.truthy()) return;
    if (!checkSig(jws, c->jwsPub).isTop()) return;
    Term payload = extractMsg(jws);
    if (dictGet(payload, Term::atom("aud")) != host) return;
    if (dictGet(payload, Term::atom("client_id")) != cid) return;
    data = payload;
  }

  Term pkceChallenge = dictGet(data, Term::atom("code_challenge"));
  if (c->profile == "rw" && c->clientType == "conf_OAUTB" && !c->isApp) {
    Term tb = header(req, "Sec-Token-Binding");
    if (verifyTB(tb, atoms::TB_provided(), oautbEKM).isFail()) return;
    Term ref = verifyTB(tb, atoms::TB_referred(), oautbEKM);
    if (ref.isFail()) return;
    pkceChallenge = ref;
  }

  Term state = dictGet(data, Term::atom("state"));
  if (!state.truthy()) return;

  Term redirectUri = dictGet(data, Term::atom("redirect_uri"));
  bool registered = false;
  for (const Term& u : c->redirectUris)
    if (u == redirectUri) registered = true;
  if (!registered) return;

  Term responseType = dictGet(data, Term::atom("response_type"));
  std::string mode = "plain";
  if (dictGet(data, Term::atom("response_mode")).isAtom("jwt"))
    mode = "jarm";
  else if (responseType == Term::seq({Term::atom("code"),
                                      Term::atom("id_token")}))
    mode = "hybrid";

  AuthRecord rec;
  rec.clientId = cid;
  rec.redirectUri = redirectUri;
  rec.subject = identity;
  rec.issuer = host;
  rec.nonce = dictGet(data, Term::atom("nonce"));
  rec.scope = dictGet(data, Term::atom("scope"));
  rec.responseType = responseType;
  rec.pkceChallenge = pkceChallenge;
  rec.code = ctx.fresh("code");
  rec.accessToken = ctx.fresh("accesstoken");
  rec.mode = mode;

  Term location;
  if (mode == "jarm") {
    Term jws = sign(dict({{Term::atom("iss"), host},
                          {Term::atom("aud"), cid},
                          {Term::atom("code"), rec.code},
                          {Term::atom("at_hash"), hashT(rec.accessToken)},
                          {Term::atom("state"), state}}),
                    jwk);
    location = mkUrl(atoms::S(), urlHost(redirectUri), urlPath(redirectUri),
                     dictSet(urlParams(redirectUri), Term::atom("response"),
                             jws),
                     nil());
  } else if (mode == "hybrid") {
    Term idt = sign(dict({{Term::atom("iss"), host},
                          {Term::atom("sub"), identity},
                          {Term::atom("aud"), cid},
                          {Term::atom("nonce"), rec.nonce},
                          {Term::atom("c_hash"), hashT(rec.code)},
                          {Term::atom("s_hash"), hashT(state)}}),
                    jwk);
    Term frag = dict({{Term::atom("code"), rec.code},
                      {Term::atom("id_token"), idt},
                      {Term::atom("state"), state}});
    location = mkUrl(atoms::S(), urlHost(redirectUri), urlPath(redirectUri),
                     urlParams(redirectUri), frag);
  } else {
    Term params = urlParams(redirectUri);
    params = dictSet(params, Term::atom("code"), rec.code);
    params = dictSet(params, Term::atom("state"), state);
    location = mkUrl(atoms::S(), urlHost(redirectUri), urlPath(redirectUri),
                     params, nil());
  }

  records.push_back(rec);
  respond(r, Term::atom("303"),
          dict({{Term::atom("Location"), location}}), nil(), ctx);
  if (c->isApp && knobs && knobs->leaks.authResponseApp)
    ctx.emit(leakAddr, ownAddress(),
             Term::seq({atoms::LEAK(), Term::atom("auth_response"),
                        location}));
}

void ASProc::handleToken(const Term& req, const Responder& r, StepCtx& ctx) {
  Term host = reqHost(req);
  Term body = reqBody(req);

  Term code = dictGet(body, Term::atom("code"));
  if (!code.truthy()) return;
  AuthRecord* rec = nullptr;
  for (AuthRecord& a : records)
    if (a.code == code && !a.codeUsed) rec = &a;
  if (!rec) return;

  Term cid = dictGet(body, Term::atom("client_id"));
  if (cid != rec->clientId) return;
  const ClientReg* c = findClient(cid);
  if (!c) return;

  // Client authentication.
  if (c->clientType == "conf_JWS" || c->clientType == "conf_OAUTB") {
    Term assertion = dictGet(body, Term::atom("assertion"));
    if (!checkMac(assertion, c->clientSecret).isTop()) return;
    Term payload = extractMsg(assertion);
    if (dictGet(payload, Term::atom("iss")) != cid) return;
    if (dictGet(payload, Term::atom("aud")) != host) return;
  }
  Term mtlsKeyUsed;
  if (c->clientType == "conf_MTLS") {
    Term n = dictGet(body, Term::atom("TLS_AuthN"));
    bool found = false;
    for (size_t i = 0; i < mtlsRequests.size(); ++i)
      if (mtlsRequests[i] == Term::seq({n, c->mtlsPub})) {
        mtlsRequests.erase(mtlsRequests.begin() + static_cast<ptrdiff_t>(i));
        found = true;
        break;
      }
    if (!found) return;
    mtlsKeyUsed = c->mtlsPub;
  }
  Term providedTbid, referredTbid;
  if (c->profile == "rw" &&
      (c->clientType == "pub" || c->clientType == "conf_OAUTB")) {
    Term tb = header(req, "Sec-Token-Binding");
    providedTbid = verifyTB(tb, atoms::TB_provided(), oautbEKM);
    if (providedTbid.isFail()) return;
    referredTbid = verifyTB(tb, atoms::TB_referred(), oautbEKM);
    if (referredTbid.isFail()) return;
  }

  // PKCE / token-binding proof of possession.
  if (c->profile == "r") {
    if (hashT(dictGet(body, Term::atom("pkce_verifier"))) !=
        rec->pkceChallenge)
      return;
  } else if (c->clientType == "conf_OAUTB" && !c->isApp) {
    if (dictGet(body, Term::atom("pkce_verifier")) != rec->pkceChallenge)
      return;
  } else if (c->clientType == "pub" ||
             (c->clientType == "conf_OAUTB" && c->isApp)) {
    if (hashT(providedTbid) != rec->pkceChallenge) return;
  }

  if (dictGet(body, Term::atom("redirect_uri")) != rec->redirectUri) return;

  rec->codeUsed = true;
  Term at = rec->accessToken;
  if (c->profile == "rw") {
    if (c->clientType == "conf_MTLS")
      accessTokens.push_back(Term::seq({Term::atom("MTLS"), rec->subject, cid,
                                        at, mtlsKeyUsed, Term::atom("rw")}));
    else
      accessTokens.push_back(Term::seq({Term::atom("OAUTB"), rec->subject,
                                        cid, at, referredTbid,
                                        Term::atom("rw")}));
  } else {
    accessTokens.push_back(
        Term::seq({rec->subject, cid, at, Term::atom("r")}));
  }

  Note n;
  n.type = "tokenIssued";
  n.attrs["process"] = id;
  n.attrs["profile"] = c->profile;
  n.terms["identity"] = rec->subject;
  n.terms["cid"] = cid;
  n.terms["at"] = at;
  ctx.note(std::move(n));

  Term respBodyT = dict({{Term::atom("access_token"), at},
                         {Term::atom("token_type"), Term::atom("Bearer")}});
  if (rec->scope.isAtom("openid") || rec->mode == "hybrid" ||
      rec->mode == "jarm") {
    Term idt = sign(dict({{Term::atom("iss"), rec->issuer},
                          {Term::atom("sub"), rec->subject},
                          {Term::atom("aud"), cid},
                          {Term::atom("nonce"), rec->nonce},
                          {Term::atom("at_hash"), hashT(at)}}),
                    jwk);
    respBodyT = dictSet(respBodyT, Term::atom("id_token"), idt);
  }
  respond(r, Term::atom("200"), Term::seq({}), respBodyT, ctx);

  if (c->profile == "rw" && knobs && knobs->leaks.accessTokenRW)
    ctx.emit(leakAddr, ownAddress(),
             Term::seq({atoms::LEAK(), Term::atom("access_token"), at}));
}

Term ASProc::roleStateTerm() const {
  std::vector<Term> pws;
  for (const auto& [idn, pw] : passwords)
    pws.push_back(Term::seq({idn, pw}));
  std::vector<Term> cls;
  for (const ClientReg& c : clients)
    cls.push_back(Term::seq(
        {c.clientId, Term::atom(c.profile), Term::atom(c.clientType),
         c.isApp ? top() : nil(), Term::seq(c.redirectUris), c.jwsPub,
         c.mtlsPub, c.clientSecret}));
  std::vector<Term> recs;
  for (const AuthRecord& a : records)
    recs.push_back(Term::seq(
        {a.clientId, a.redirectUri, a.subject, a.issuer, a.nonce, a.scope,
         a.responseType, a.pkceChallenge, a.code, a.accessToken,
         Term::atom(a.mode), a.codeUsed ? top() : nil()}));
  std::vector<Term> ekms(oautbEKM.begin(), oautbEKM.end());
  return Term::seq({jwk, leakAddr, Term::seq(std::move(pws)),
                    Term::seq(std::move(cls)), Term::seq(std::move(recs)),
                    Term::seq(std::move(ekms)), Term::seq(mtlsRequests),
                    Term::seq(accessTokens)});
}

}  // namespace fapisim
