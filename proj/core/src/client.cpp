#include "fapisim/client.hpp"

#include "fapisim/browser.hpp"

namespace fapisim {

static Term refTag(std::string_view tag, const Term& sid) {
  return Term::seq({Term::atom(tag), sid});
}

static Term newReq(StepCtx& ctx, const Term& method, const Term& host,
                   const Term& path, const Term& params, const Term& headers,
                   const Term& body) {
  return mkReq(ctx.fresh("reqnonce"), method, host, path, params, headers,
               body);
}

void ClientProc::processHttpsRequest(const Term& req, const Responder& r,
                                     StepCtx& ctx) {
  Term path = reqPath(req);
  Term host = reqHost(req);

  if (path.isAtom("/")) {
    respond(r, Term::atom("200"), Term::seq({}),
            Term::seq({Term::atom("script_client_index"), Term::seq({})}),
            ctx);
    return;
  }

  if (path.isAtom("/startLogin")) {
    if (!(reqMethod(req) == atoms::POST())) return;
    if (!(header(req, "Origin") == Term::seq({host, atoms::S()}))) return;
    Term identity = dictGet(reqBody(req), Term::atom("identity"));
    if (!identity.isSeq() || identity.size() != 2) return;
    Term sid = ctx.fresh("sessionId");
    startLoginFlow(sid, identity, r, ctx);
    return;
  }

  if (path.isAtom("/OAUTB-prepare")) {
    Term tn = ctx.fresh("tbnonce");
    auto km = keyMapping.find(host);
    if (km == keyMapping.end()) return;
    oautbEKM.insert(hashT(Term::seq({reqNonce(req), tn, km->second})));
    respond(r, Term::atom("200"), Term::seq({}),
            dict({{Term::atom("tb_nonce"), tn}}), ctx);
    return;
  }

  for (const Registration& rg : registrations)
    for (const Term& u : rg.redirectUris)
      if (urlHost(u) == host && urlPath(u) == path) {
        handleRedirectEp(req, r, ctx);
        return;
      }
}

void ClientProc::startLoginFlow(const Term& sid, const Term& identity,
                                const Responder& r, StepCtx& ctx) {
  // The identity's domain selects the registration.
  size_t regIdx = registrations.size();
  for (size_t i = 0; i < registrations.size(); ++i)
    if (registrations[i].as == identity.at(2)) {
      regIdx = i;
      break;
    }
  if (regIdx == registrations.size()) return;
  Registration& rg = registrations[regIdx];

  Session s;
  s.reg = regIdx;
  if (rg.resourceServers.empty() || rg.redirectUris.empty()) return;
  s.rsDomain = rg.resourceServers[ctx.choose("client.rs",
                                             rg.resourceServers.size())];
  s.redirectUri = rg.redirectUris[ctx.choose("client.redirect_uri",
                                             rg.redirectUris.size())];
  s.state = ctx.fresh("state");
  s.nonce = ctx.fresh("oidcnonce");

  std::string mode = rg.responseMode;
  if (rg.profile == "rw" && mode.empty())
    mode = ctx.choose("client.response_type", 2) == 0 ? "hybrid" : "jarm";

  Term params = Term::seq({});
  if (rg.profile == "r") {
    s.responseType = Term::seq({Term::atom("code")});
    s.scope = ctx.choose("client.scope", 2) == 0 ? Term::atom("openid")
                                                 : Term::seq({});
  } else if (mode == "hybrid") {
    s.responseType = Term::seq({Term::atom("code"), Term::atom("id_token")});
    s.scope = Term::atom("openid");
  } else {
    s.responseType = Term::seq({Term::atom("code")});
    s.scope = Term::atom("openid");
    params = dictSet(params, Term::atom("response_mode"), Term::atom("jwt"));
  }

  bool wantReferredTB = false;
  if (rg.profile == "r") {
    s.pkceVerifier = ctx.fresh("pkceverifier");
    s.pkceChallenge = hashT(s.pkceVerifier);
  } else if (rg.clientType == "pub" ||
             (rg.clientType == "conf_OAUTB" && app)) {
    s.pkceChallenge = hashT(pubOf(rg.tbKeyAS));
  } else if (rg.clientType == "conf_OAUTB") {
    s.pkceChallenge = Term::atom("referred_tb");
    wantReferredTB = true;
  }

  params = dictSet(params, Term::atom("response_type"), s.responseType);
  params = dictSet(params, Term::atom("client_id"), rg.clientId);
  params = dictSet(params, Term::atom("redirect_uri"), s.redirectUri);
  params = dictSet(params, Term::atom("scope"), s.scope);
  params = dictSet(params, Term::atom("state"), s.state);
  params = dictSet(params, Term::atom("nonce"), s.nonce);
  if (s.pkceChallenge.truthy())
    params = dictSet(params, Term::atom("code_challenge"), s.pkceChallenge);
  Term jwsPayload = dictSet(params, Term::atom("aud"), urlHost(rg.authEp));
  params = dictSet(params, Term::atom("request"), sign(jwsPayload, rg.jwsKey));

  s.tokenHost = urlHost(rg.tokenEp);
  if (rg.profile == "rw") s.modeStr = mode;

  Term location = mkUrl(atoms::S(), urlHost(rg.authEp), urlPath(rg.authEp),
                        params, nil());
  Term headers = dict(
      {{Term::atom("Set-Cookie"),
        Term::seq({Term::seq({secureCookieName("sessionId"),
                              Term::seq({sid, top()})})})},
       {Term::atom("Location"), location}});
  if (wantReferredTB)
    headers = dictSet(headers, Term::atom("Include-Referred-Token-Binding-ID"),
                      top());
  sessions[sid] = s;

  Note n;
  n.type = "sessionCreated";
  n.attrs["process"] = id;
  n.terms["lsid"] = sid;
  n.terms["identity"] = identity;
  n.terms["state"] = s.state;
  n.terms["as"] = rg.as;
  ctx.note(std::move(n));

  respond(r, Term::atom("303"), headers, nil(), ctx);
  if (knobs && knobs->leaks.authRequest)
    ctx.emit(leakAddr, ownAddress(),
             Term::seq({atoms::LEAK(), Term::atom("auth_request"), location}));
}

void ClientProc::handleRedirectEp(const Term& req, const Responder& r,
                                  StepCtx& ctx) {
  Term sid = dictGet(header(req, "Cookie"), secureCookieName("sessionId"));
  auto it = sessions.find(sid);
  if (it == sessions.end()) return;
  Session& s = it->second;
  const Registration& rg = reg(s);

  // Relaxed redirect-uri match: scheme/host/path equal, registered query
  // parameters a subset of the received ones.
  if (urlHost(s.redirectUri) != reqHost(req)) return;
  if (urlPath(s.redirectUri) != reqPath(req)) return;
  Term regParams = urlParams(s.redirectUri);
  if (regParams.isSeq())
    for (const Term& kv : regParams.args())
      if (dictGet(reqParams(req), kv.at(1)) != kv.at(2)) return;

  std::string mode = s.mode();

  if (rg.profile == "rw" && rg.clientType == "conf_OAUTB" && !app) {
    Term tbid = verifyTB(header(req, "Sec-Token-Binding"),
                         atoms::TB_provided(), oautbEKM);
    if (tbid.isFail()) return;
    s.browserTBID = tbid;
  }

  Term data;
  if (rg.profile == "rw" && mode == "hybrid") {
    if (reqMethod(req) == atoms::GET()) {
      respond(r, Term::atom("200"), Term::seq({}),
              Term::seq({Term::atom("script_c_get_fragment"), Term::seq({})}),
              ctx);
      return;
    }
    data = reqBody(req);
  } else {
    data = reqParams(req);
  }

  if (rg.profile == "rw" && mode == "jarm") {
    if (!checkResponseJws(s, dictGet(data, Term::atom("response")))) return;
  } else {
    if (!s.state.truthy()) return;
    if (dictGet(data, Term::atom("state")) != s.state) return;
    s.state = nil();
    if (rg.profile == "rw") {
      if (!checkFirstIdToken(s, dictGet(data, Term::atom("id_token")), data))
        return;
    }
    s.code = dictGet(data, Term::atom("code"));
    if (!s.code.truthy()) return;
  }

  s.redirectEpRequest = Term::seq({r.nonce, r.key, r.senderAddr});
  prepareTokenRequest(sid, ctx);
}

void ClientProc::prepareTokenRequest(const Term& sid, StepCtx& ctx) {
  Session& s = sessions[sid];
  const Registration& rg = reg(s);
  s.tokenHost = urlHost(rg.tokenEp);
  if (rg.profile == "rw" && knobs && knobs->leaks.misconfiguredTokenEndpoint &&
      !knobs->attackerEndpointHosts.empty()) {
    if (ctx.choose("client.misconfTEp", 2) == 1)
      s.tokenHost = knobs->attackerEndpointHosts.front();
  }

  if (rg.clientType == "conf_MTLS") {
    Term req = newReq(ctx, atoms::GET(), s.tokenHost,
                      Term::atom("/MTLS-prepare"),
                      dict({{Term::atom("client_id"), rg.clientId}}),
                      Term::seq({}), nil());
    httpsSimpleSend(refTag("mtls_as", sid), req, ctx);
    return;
  }
  if (rg.profile == "rw" &&
      (rg.clientType == "conf_OAUTB" || rg.clientType == "pub")) {
    Term req = newReq(ctx, atoms::GET(), s.tokenHost,
                      Term::atom("/OAUTB-prepare"), Term::seq({}),
                      Term::seq({}), nil());
    httpsSimpleSend(refTag("oautb_as", sid), req, ctx);
    return;
  }
  sendTokenRequest(sid, ctx);
}

void ClientProc::sendTokenRequest(const Term& sid, StepCtx& ctx) {
  Session& s = sessions[sid];
  const Registration& rg = reg(s);

  Term body = Term::seq({});
  body = dictSet(body, Term::atom("grant_type"),
                 Term::atom("authorization_code"));
  body = dictSet(body, Term::atom("code"), s.code);
  body = dictSet(body, Term::atom("redirect_uri"), s.redirectUri);
  body = dictSet(body, Term::atom("client_id"), rg.clientId);
  if (rg.profile == "r")
    body = dictSet(body, Term::atom("pkce_verifier"), s.pkceVerifier);
  if (rg.clientType == "conf_JWS" || rg.clientType == "conf_OAUTB") {
    Term assertion = mac(dict({{Term::atom("iss"), rg.clientId},
                               {Term::atom("aud"), s.tokenHost}}),
                         rg.clientSecret);
    body = dictSet(body, Term::atom("assertion"), assertion);
  }
  if (rg.clientType == "conf_MTLS")
    body = dictSet(body, Term::atom("TLS_AuthN"), s.mtlsNonce);
  if (rg.profile == "rw" && rg.clientType == "conf_OAUTB" && !app)
    body = dictSet(body, Term::atom("pkce_verifier"), s.browserTBID);

  Term headers = Term::seq({});
  if (rg.profile == "rw" &&
      (rg.clientType == "conf_OAUTB" || rg.clientType == "pub")) {
    headers = dictSet(
        headers, Term::atom("Sec-Token-Binding"),
        Term::seq({tbMessage(atoms::TB_provided(), s.ekm, rg.tbKeyAS),
                   tbMessage(atoms::TB_referred(), s.ekm, rg.tbKeyRS)}));
  }

  Term req = newReq(ctx, atoms::POST(), s.tokenHost, Term::atom("/token"),
                    Term::seq({}), headers, body);
  httpsSimpleSend(refTag("tokenresp", sid), req, ctx);
}

void ClientProc::processHttpsResponse(const Term& resp, const Term& reference,
                                      const Term& request, StepCtx& ctx) {
  if (!reference.isSeq() || reference.size() != 2) return;
  Term tag = reference.at(1);
  Term sid = reference.at(2);
  auto it = sessions.find(sid);
  if (it == sessions.end()) return;
  Session& s = it->second;
  const Registration& rg = reg(s);
  Term body = respBody(resp);

  if (tag.isAtom("mtls_as") || tag.isAtom("mtls_rs")) {
    Term inner = decA(body, rg.mtlsKey);
    if (!inner.isSeq() || inner.size() != 2) return;
    auto km = keyMapping.find(reqHost(request));
    if (km == keyMapping.end() || inner.at(2) != km->second) return;
    s.mtlsNonce = inner.at(1);
    if (tag.isAtom("mtls_as"))
      sendTokenRequest(sid, ctx);
    else
      sendResourceRequest(sid, ctx);
    return;
  }

  if (tag.isAtom("oautb_as") || tag.isAtom("oautb_rs")) {
    Term tn = dictGet(body, Term::atom("tb_nonce"));
    if (!tn.truthy()) return;
    auto km = keyMapping.find(reqHost(request));
    if (km == keyMapping.end()) return;
    s.ekm = hashT(Term::seq({reqNonce(request), tn, km->second}));
    if (tag.isAtom("oautb_as"))
      sendTokenRequest(sid, ctx);
    else
      sendResourceRequest(sid, ctx);
    return;
  }

  if (tag.isAtom("tokenresp")) {
    processTokenResponse(sid, body, ctx);
    return;
  }

  if (tag.isAtom("resource")) {
    s.resource = body;
    Note n;
    n.type = "resourceStored";
    n.attrs["process"] = id;
    n.attrs["rs"] = s.rsDomain.text();
    n.terms["lsid"] = sid;
    n.terms["resource"] = body;
    ctx.note(std::move(n));
    if (!app && s.redirectEpRequest.truthy()) {
      Responder r{s.redirectEpRequest.at(1), s.redirectEpRequest.at(2),
                  s.redirectEpRequest.at(3)};
      respond(r, Term::atom("200"), Term::seq({}), body, ctx);
    }
    return;
  }
}

void ClientProc::processTokenResponse(const Term& sid, const Term& body,
                                      StepCtx& ctx) {
  Session& s = sessions[sid];
  const Registration& rg = reg(s);
  Term at = dictGet(body, Term::atom("access_token"));
  if (!at.truthy()) return;
  Term idt = dictGet(body, Term::atom("id_token"));

  std::string mode = s.mode();
  if (rg.profile == "rw" && mode == "hybrid") {
    // Second id token: consistency with the one from the fragment.
    if (!idt.truthy()) return;
    Term payload = extractMsg(idt);
    if (!checkSig(idt, rg.asJwkPub).isTop()) return;
    if (dictGet(payload, Term::atom("iss")) != s.idt1Iss) return;
    if (dictGet(payload, Term::atom("sub")) != s.idt1Sub) return;
    if (dictGet(payload, Term::atom("aud")) != rg.clientId) return;
    if (knobs && knobs->fixes.atHash &&
        dictGet(payload, Term::atom("at_hash")) != hashT(at))
      return;
    s.idt2Iss = dictGet(payload, Term::atom("iss"));
  }
  if (rg.profile == "rw" && mode == "jarm") {
    if (knobs && knobs->fixes.atHash && s.jarmAtHash != hashT(at)) return;
  }

  s.accessToken = at;
  if (idt.truthy() && !(s.scope.isSeq() && s.scope.size() == 0)) {
    if (!checkIdToken(sid, idt, ctx)) return;
  }
  useAccessToken(sid, ctx);
}

bool ClientProc::checkIdToken(const Term& sid, const Term& idt,
                              StepCtx& ctx) {
  Session& s = sessions[sid];
  const Registration& rg = reg(s);
  Term payload = extractMsg(idt);
  if (!checkSig(idt, rg.asJwkPub).isTop()) return false;
  if (dictGet(payload, Term::atom("iss")) != rg.as) return false;
  if (dictGet(payload, Term::atom("aud")) != rg.clientId) return false;
  if (dictGet(payload, Term::atom("nonce")) != s.nonce) return false;
  Term sub = dictGet(payload, Term::atom("sub"));
  s.idt2Iss = dictGet(payload, Term::atom("iss"));

  if (app) return true;
  Term ssid = ctx.fresh("serviceSessionId");
  s.serviceSessionId = ssid;
  if (s.redirectEpRequest.truthy()) {
    Responder r{s.redirectEpRequest.at(1), s.redirectEpRequest.at(2),
                s.redirectEpRequest.at(3)};
    respond(r, Term::atom("200"),
            dict({{Term::atom("Set-Cookie"),
                   Term::seq({Term::seq({secureCookieName("serviceSessionId"),
                                         Term::seq({ssid, top()})})})}}),
            nil(), ctx);
  }
  Note n;
  n.type = "loggedIn";
  n.attrs["process"] = id;
  n.attrs["as"] = rg.as.text();
  n.terms["as"] = rg.as;
  n.terms["identity"] = sub;
  n.terms["lsid"] = sid;
  n.terms["ssid"] = ssid;
  ctx.note(std::move(n));
  return true;
}

void ClientProc::useAccessToken(const Term& sid, StepCtx& ctx) {
  Session& s = sessions[sid];
  const Registration& rg = reg(s);
  if (rg.profile == "r") {
    Term req = newReq(
        ctx, atoms::GET(), s.rsDomain, Term::atom("/resource-r"),
        Term::seq({}),
        dict({{Term::atom("Authorization"),
               Term::seq({Term::atom("Bearer"), s.accessToken})}}),
        nil());
    httpsSimpleSend(refTag("resource", sid), req, ctx);
    return;
  }
  if (rg.clientType == "conf_MTLS") {
    Term req = newReq(ctx, atoms::POST(), s.rsDomain,
                      Term::atom("/MTLS-prepare"), Term::seq({}),
                      Term::seq({}),
                      dict({{Term::atom("pub_key"), pubOf(rg.mtlsKey)}}));
    httpsSimpleSend(refTag("mtls_rs", sid), req, ctx);
    return;
  }
  Term req = newReq(ctx, atoms::GET(), s.rsDomain,
                    Term::atom("/OAUTB-prepare"), Term::seq({}), Term::seq({}),
                    nil());
  httpsSimpleSend(refTag("oautb_rs", sid), req, ctx);
}

void ClientProc::sendResourceRequest(const Term& sid, StepCtx& ctx) {
  Session& s = sessions[sid];
  const Registration& rg = reg(s);
  Term body = Term::seq({});
  body = dictSet(body, Term::atom("access_token"), s.accessToken);
  if (knobs && knobs->fixes.atIss) {
    Term iss = s.mode() == "jarm" ? s.jarmIss : s.idt2Iss;
    body = dictSet(body, Term::atom("at_iss"), iss);
  }
  Term headers = Term::seq({});
  if (rg.clientType == "conf_MTLS") {
    body = dictSet(body, Term::atom("MTLS_AuthN"), s.mtlsNonce);
  } else {
    headers = dictSet(
        headers, Term::atom("Sec-Token-Binding"),
        Term::seq({tbMessage(atoms::TB_provided(), s.ekm, rg.tbKeyRS)}));
  }
  Term req = newReq(ctx, atoms::POST(), s.rsDomain,
                    Term::atom("/resource-rw"), Term::seq({}), headers, body);
  httpsSimpleSend(refTag("resource", sid), req, ctx);
}

bool ClientProc::checkFirstIdToken(Session& s, const Term& idt,
                                   const Term& data) {
  const Registration& rg = reg(s);
  if (!idt.truthy()) return false;
  Term payload = extractMsg(idt);
  if (!checkSig(idt, rg.asJwkPub).isTop()) return false;
  if (dictGet(payload, Term::atom("iss")) != rg.as) return false;
  if (dictGet(payload, Term::atom("aud")) != rg.clientId) return false;
  if (dictGet(payload, Term::atom("nonce")) != s.nonce) return false;
  if (dictGet(payload, Term::atom("c_hash")) !=
      hashT(dictGet(data, Term::atom("code"))))
    return false;
  if (dictGet(payload, Term::atom("s_hash")) !=
      hashT(dictGet(data, Term::atom("state"))))
    return false;
  s.idt1Sub = dictGet(payload, Term::atom("sub"));
  s.idt1Iss = dictGet(payload, Term::atom("iss"));
  return true;
}

bool ClientProc::checkResponseJws(Session& s, const Term& jws) {
  const Registration& rg = reg(s);
  if (!jws.truthy()) return false;
  Term payload = extractMsg(jws);
  if (!checkSig(jws, rg.asJwkPub).isTop()) return false;
  if (!s.state.truthy()) return false;
  if (dictGet(payload, Term::atom("state")) != s.state) return false;
  s.state = nil();
  if (dictGet(payload, Term::atom("aud")) != rg.clientId) return false;
  if (dictGet(payload, Term::atom("iss")) != rg.as) return false;
  s.jarmIss = dictGet(payload, Term::atom("iss"));
  s.code = dictGet(payload, Term::atom("code"));
  if (!s.code.truthy()) return false;
  s.jarmAtHash = dictGet(payload, Term::atom("at_hash"));
  return true;
}

Term ClientProc::roleStateTerm() const {
  std::vector<Term> regs;
  for (const Registration& rg : registrations) {
    std::vector<Term> uris = rg.redirectUris;
    regs.push_back(Term::seq(
        {rg.as, rg.clientId, Term::atom(rg.profile), Term::atom(rg.clientType),
         Term::atom(rg.responseMode.empty() ? "-" : rg.responseMode),
         rg.authEp, rg.tokenEp, Term::seq(std::move(uris)),
         Term::seq(rg.resourceServers), rg.asJwkPub, rg.clientSecret,
         rg.mtlsKey, rg.jwsKey, rg.tbKeyAS, rg.tbKeyRS}));
  }
  std::vector<Term> sess;
  for (const auto& [sid, s] : sessions)
    sess.push_back(Term::seq(
        {sid, Term::atom(std::to_string(s.reg)), s.state, s.nonce, s.scope,
         s.responseType, s.redirectUri, s.rsDomain, s.pkceVerifier,
         s.pkceChallenge, s.tokenHost, s.browserTBID, s.code, s.accessToken,
         s.idt1Sub, s.idt1Iss, s.idt2Iss, s.jarmIss, s.jarmAtHash,
         s.mtlsNonce, s.ekm, s.redirectEpRequest, s.serviceSessionId,
         s.resource, Term::atom(s.mode().empty() ? "-" : s.mode())}));
  std::vector<Term> ekms(oautbEKM.begin(), oautbEKM.end());
  return Term::seq({Term::atom(app ? "app" : "webserver"), leakAddr,
                    Term::seq(std::move(regs)), Term::seq(std::move(sess)),
                    Term::seq(std::move(ekms))});
}

}  // namespace fapisim
