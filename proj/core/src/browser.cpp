#include "fapisim/browser.hpp"

namespace fapisim {

namespace atoms {
Term HREF() { return Term::atom("HREF"); }
Term FORM() { return Term::atom("FORM"); }
Term TB_provided() { return Term::atom("TB_provided"); }
Term TB_referred() { return Term::atom("TB_referred"); }
}  // namespace atoms

Term secureCookieName(std::string_view base) {
  return Term::seq({Term::atom("__Secure"), Term::atom(base)});
}

Term tbMessage(const Term& kind, const Term& ekm, const Term& key) {
  return Term::seq({kind, pubOf(key), sign(ekm, key)});
}

Term verifyTB(const Term& tbHeader, const Term& kind,
              const std::set<Term>& ekms) {
  if (!tbHeader.isSeq()) return fail();
  for (const Term& msg : tbHeader.args()) {
    if (!msg.isSeq() || msg.size() != 3 || msg.at(1) != kind) continue;
    Term pk = msg.at(2);
    Term sg = msg.at(3);
    if (!checkSig(sg, pk).isTop()) continue;
    if (!ekms.count(extractMsg(sg))) continue;
    return pk;
  }
  return fail();
}

static bool isSecurePrefixed(const Term& name) {
  return name.isSeq() && name.size() == 2 && name.at(1).isAtom("__Secure");
}

Term addCookie(const Term& jar, const Term& cookie, const Term& protocol) {
  if (!cookie.isSeq() || cookie.size() != 2) return jar;
  if (isSecurePrefixed(cookie.at(1)) && !(protocol == atoms::S())) return jar;
  // Remove any same-named cookie, then append.
  std::vector<Term> out;
  if (jar.isSeq())
    for (const Term& c : jar.args())
      if (!(c.isSeq() && c.size() == 2 && c.at(1) == cookie.at(1)))
        out.push_back(c);
  out.push_back(cookie);
  return Term::seq(std::move(out));
}

static Term originOf(const Term& url) {
  return Term::seq({urlHost(url), urlProtocol(url)});
}

Term BrowserProc::tbKey(const Term& domain, StepCtx& ctx) {
  auto it = tokenBindings.find(domain);
  if (it != tokenBindings.end()) return it->second;
  Term k = ctx.fresh("tbkey:" + domain.text());
  tokenBindings.emplace(domain, k);
  return k;
}

void BrowserProc::httpSend(Term request, Term url, const Term& origin,
                           const Term& referrer, const Term& referrerPolicy,
                           StepCtx& ctx) {
  // STS upgrade.
  if (sts.count(urlHost(url)) && urlProtocol(url) == atoms::P())
    url = mkUrl(atoms::S(), urlHost(url), urlPath(url), urlParams(url),
                urlFragment(url));
  Term protocol = urlProtocol(url);
  Term headers = reqHeaders(request);

  // Cookies for the destination host; secure-flagged ones only over HTTPS.
  Term jar = cookies.count(urlHost(url)) ? cookies[urlHost(url)]
                                         : Term::seq({});
  std::vector<Term> sendable;
  for (const Term& c : jar.args()) {
    Term flags = c.at(2);
    bool secure = flags.isSeq() && flags.at(2).isTop();
    if (secure && !(protocol == atoms::S())) continue;
    sendable.push_back(Term::seq({c.at(1), flags.at(1)}));
  }
  if (!sendable.empty())
    headers = dictSet(headers, Term::atom("Cookie"), Term::seq(sendable));

  if (origin.truthy())
    headers = dictSet(headers, Term::atom("Origin"), origin);

  if (referrer.truthy() && !referrerPolicy.isAtom("noreferrer")) {
    Term ref = referrerPolicy.isAtom("origin")
                   ? mkUrl(urlProtocol(referrer), urlHost(referrer),
                           Term::atom("/"))
                   : mkUrl(urlProtocol(referrer), urlHost(referrer),
                           urlPath(referrer), urlParams(referrer), nil());
    headers = dictSet(headers, Term::atom("Referer"), ref);
  }

  request = mkReq(reqNonce(request), reqMethod(request), urlHost(url),
                  urlPath(url), urlParams(url), headers, reqBody(request));

  SavedReq saved{request, url, nil(), nil()};
  auto cached = dnsCache.find(urlHost(url));
  if (cached != dnsCache.end()) {
    sendResolved(std::move(saved), cached->second, ctx);
    return;
  }
  Term n = ctx.fresh("dns");
  pendingDNS.emplace(n, std::move(saved));
  ctx.emit(dnsAddr, addresses.front(),
           Term::seq({atoms::DNSResolve(), urlHost(url), n}));
}

void BrowserProc::sendResolved(SavedReq saved, const Term& addr,
                               StepCtx& ctx) {
  Term host = urlHost(saved.url);
  if (useTB.count(host) && saved.original.isNil()) {
    // Token-binding handshake precedes the actual request.
    Term prepUrl = mkUrl(atoms::S(), host, Term::atom("/OAUTB-prepare"));
    Term prep = mkReq(ctx.fresh("reqnonce"), atoms::GET(), host,
                      Term::atom("/OAUTB-prepare"), Term::seq({}),
                      Term::seq({}), nil());
    wireSend(SavedReq{prep, prepUrl, saved.request, saved.url}, addr, ctx);
    return;
  }
  wireSend(saved, addr, ctx);
}

void BrowserProc::wireSend(const SavedReq& saved, const Term& addr,
                           StepCtx& ctx) {
  Term host = urlHost(saved.url);
  auto km = keyMapping.find(host);
  if (km == keyMapping.end()) return;
  Term key = ctx.fresh("tlssym");
  pendingRequests.push_back({saved, key, addr});
  ctx.emit(addr, addresses.front(),
           encA(Term::seq({saved.request, key}), km->second));
}

void BrowserProc::onEvent(const Event& ev, StepCtx& ctx) {
  const Term& m = ev.msg;
  if (m == TRIGGER()) {
    onTrigger(ctx);
    return;
  }
  if (m.isSeq() && m.size() == 4 && m.at(1) == atoms::DNSResolved()) {
    auto it = pendingDNS.find(m.at(4));
    if (it == pendingDNS.end()) return;
    SavedReq saved = it->second;
    pendingDNS.erase(it);
    if (urlHost(saved.url) != m.at(2)) return;
    dnsCache[m.at(2)] = m.at(3);
    sendResolved(std::move(saved), m.at(3), ctx);
    return;
  }
  if (m.kind() == Term::Kind::App && m.fn() == Fn::EncS) {
    for (size_t i = 0; i < pendingRequests.size(); ++i) {
      Term resp = decS(m, pendingRequests[i].key);
      if (resp.isFail() || !isResp(resp)) continue;
      if (respNonce(resp) != reqNonce(pendingRequests[i].saved.request))
        continue;
      PendingReq pr = pendingRequests[i];
      pendingRequests.erase(pendingRequests.begin() +
                            static_cast<ptrdiff_t>(i));
      processResponse(resp, pr, ctx);
      return;
    }
  }
}

void BrowserProc::onTrigger(StepCtx& ctx) {
  // The user: pick a loaded document to run (newest first, so default
  // choices follow the flow), or type a urlbar target.
  std::vector<size_t> runnable;
  for (size_t i = documents.size(); i > 0; --i)
    if (documents[i - 1].runs < 2) runnable.push_back(i - 1);
  size_t n = runnable.size() + urlbar.size();
  if (n == 0) return;
  size_t c = ctx.choose("browser.trigger", n);
  if (c < runnable.size()) {
    runScript(documents[runnable[c]], ctx);
    return;
  }
  Term url = urlbar[c - runnable.size()];
  Term req = mkReq(ctx.fresh("reqnonce"), atoms::GET(), urlHost(url),
                   urlPath(url), urlParams(url), Term::seq({}), nil());
  httpSend(req, url, nil(), nil(), nil(), ctx);
}

void BrowserProc::runScript(Document& doc, StepCtx& ctx) {
  doc.runs++;
  Term host = urlHost(doc.location);
  Term origin = originOf(doc.location);

  if (doc.script == "script_client_index") {
    // Start a login with one of the owned identities, or follow a link.
    size_t n = identities.size() + urlbar.size();
    if (n == 0) return;
    size_t c = ctx.choose("script_client_index.action", n);
    if (c < identities.size()) {
      const Term& id = identities[c];
      Term url = mkUrl(atoms::S(), host, Term::atom("/startLogin"));
      Term req = mkReq(ctx.fresh("reqnonce"), atoms::POST(), host,
                       urlPath(url), Term::seq({}), Term::seq({}),
                       dict({{Term::atom("identity"), id}}));
      // Tag the navigation so the session-start annotation can fire when the
      // session cookie comes back.
      Term tagged = mkReq(reqNonce(req), reqMethod(req), reqHost(req),
                          reqPath(req), reqParams(req),
                          dictSet(reqHeaders(req), Term::atom("X-Nav"),
                                  Term::atom("index_auth")),
                          reqBody(req));
      httpSend(tagged, url, origin, doc.location, Term::atom("origin"), ctx);
      return;
    }
    Term url = urlbar[c - identities.size()];
    Term req = mkReq(ctx.fresh("reqnonce"), atoms::GET(), urlHost(url),
                     urlPath(url), urlParams(url), Term::seq({}), nil());
    httpSend(req, url, nil(), doc.location, Term::atom("origin"), ctx);
    return;
  }

  if (doc.script == "script_c_get_fragment") {
    Term url = mkUrl(atoms::S(), host, urlPath(doc.location),
                     urlParams(doc.location), nil());
    Term req = mkReq(ctx.fresh("reqnonce"), atoms::POST(), host, urlPath(url),
                     urlParams(url), Term::seq({}),
                     urlFragment(doc.location));
    httpSend(req, url, origin, doc.location, nil(), ctx);
    return;
  }

  if (doc.script == "script_as_form") {
    if (identities.empty()) return;
    size_t c = ctx.choose("script_as_form.identity", identities.size());
    const Term& id = identities[c];
    Term pw = secrets.count(id) ? secrets[id] : nil();
    Term body = doc.scriptstate;
    body = dictSet(body, Term::atom("identity"), id);
    body = dictSet(body, Term::atom("password"), pw);
    Term url = mkUrl(atoms::S(), host, Term::atom("/auth2"));
    Term req = mkReq(ctx.fresh("reqnonce"), atoms::POST(), host, urlPath(url),
                     Term::seq({}), Term::seq({}), body);
    Note note;
    note.type = "authenticated";
    note.attrs["as"] = host.text();
    note.terms["as"] = host;
    note.terms["identity"] = id;
    note.terms["state"] = dictGet(doc.scriptstate, Term::atom("state"));
    note.attrs["process"] = this->id;
    ctx.note(std::move(note));
    httpSend(req, url, origin, doc.location, nil(), ctx);
    return;
  }

  if (doc.script == "att_script") {
    // The attacker's page issues whatever command it was loaded with.
    Term cmd = doc.scriptstate;
    if (!cmd.isSeq() || cmd.size() < 2) return;
    Term url = cmd.at(2);
    if (!isUrl(url)) return;
    if (cmd.at(1) == atoms::HREF()) {
      Term req = mkReq(ctx.fresh("reqnonce"), atoms::GET(), urlHost(url),
                       urlPath(url), urlParams(url), Term::seq({}), nil());
      httpSend(req, url, nil(), doc.location, nil(), ctx);
    } else if (cmd.at(1) == atoms::FORM() && cmd.size() == 4) {
      Term req = mkReq(ctx.fresh("reqnonce"), cmd.at(3), urlHost(url),
                       urlPath(url), urlParams(url), Term::seq({}),
                       cmd.at(4));
      httpSend(req, url, origin, doc.location, nil(), ctx);
    }
    return;
  }
}

void BrowserProc::processResponse(const Term& resp, const PendingReq& pr,
                                  StepCtx& ctx) {
  const SavedReq& saved = pr.saved;
  Term host = urlHost(saved.url);

  // Token-binding handshake response: sign the EKM and send the original.
  if (saved.original.truthy()) {
    Term tbNonce = dictGet(respBody(resp), Term::atom("tb_nonce"));
    if (!tbNonce.truthy()) return;
    auto km = keyMapping.find(host);
    if (km == keyMapping.end()) return;
    Term ekm = hashT(
        Term::seq({reqNonce(saved.request), tbNonce, km->second}));
    Term provKey = tbKey(host, ctx);
    std::vector<Term> tbMsgs;
    tbMsgs.push_back(Term::seq(
        {atoms::TB_provided(), pubOf(provKey), sign(ekm, provKey)}));
    auto src = refTBSource.find(host);
    if (src != refTBSource.end()) {
      Term refKey = tbKey(src->second, ctx);
      tbMsgs.push_back(Term::seq(
          {atoms::TB_referred(), pubOf(refKey), sign(ekm, refKey)}));
    }
    Term orig = saved.original;
    orig = mkReq(reqNonce(orig), reqMethod(orig), reqHost(orig),
                 reqPath(orig), reqParams(orig),
                 dictSet(reqHeaders(orig), Term::atom("Sec-Token-Binding"),
                         Term::seq(std::move(tbMsgs))),
                 reqBody(orig));
    wireSend(SavedReq{orig, saved.originalUrl, nil(), nil()}, pr.addr, ctx);
    return;
  }

  // Set-Cookie.
  Term setCookies = header(resp, "Set-Cookie");
  if (setCookies.isSeq()) {
    Term jar = cookies.count(host) ? cookies[host] : Term::seq({});
    for (const Term& c : setCookies.args())
      jar = addCookie(jar, c, urlProtocol(saved.url));
    cookies[host] = jar;
    // Session-start: the index script's login POST got its session cookie.
    if (header(saved.request, "X-Nav").isAtom("index_auth")) {
      for (const Term& c : setCookies.args()) {
        if (c.isSeq() && c.size() == 2 &&
            c.at(1) == secureCookieName("sessionId")) {
          Note note;
          note.type = "started";
          note.attrs["process"] = id;
          note.attrs["client_host"] = host.text();
          note.terms["lsid"] = c.at(2).at(1);
          ctx.note(std::move(note));
        }
      }
    }
  }

  if (header(resp, "Strict-Transport-Security").truthy()) sts.insert(host);

  Term loc = header(resp, "Location");
  if (header(resp, "Include-Referred-Token-Binding-ID").isTop()) {
    useTB.insert(host);
    if (isUrl(loc)) {
      useTB.insert(urlHost(loc));
      refTBSource[urlHost(loc)] = host;
    }
  }

  Term status = respStatus(resp);
  if ((status.isAtom("303") || status.isAtom("307")) && isUrl(loc)) {
    Term method = reqMethod(saved.request);
    Term body = reqBody(saved.request);
    if (status.isAtom("303") && !(method == atoms::GET())) {
      method = atoms::GET();
      body = nil();
    }
    Term req = mkReq(ctx.fresh("reqnonce"), method, urlHost(loc),
                     urlPath(loc), urlParams(loc), Term::seq({}), body);
    httpSend(req, loc, nil(), saved.url, nil(), ctx);
    return;
  }

  // Document load: body ⟨scriptname, scriptstate⟩.
  Term body = respBody(resp);
  if (body.isSeq() && body.size() == 2 &&
      body.at(1).kind() == Term::Kind::Atom) {
    documents.push_back(Document{ctx.fresh("window"), saved.url,
                                 body.at(1).text(), body.at(2)});
  }
}

Term BrowserProc::stateTerm() const {
  auto mapTerm = [](const std::map<Term, Term>& m) {
    std::vector<Term> out;
    for (const auto& [k, v] : m) out.push_back(Term::seq({k, v}));
    return Term::seq(std::move(out));
  };
  std::vector<Term> stsv(sts.begin(), sts.end());
  std::vector<Term> docs;
  for (const auto& d : documents)
    docs.push_back(Term::seq(
        {d.nonce, d.location, Term::atom(d.script), d.scriptstate}));
  std::vector<Term> pd;
  for (const auto& [n, s] : pendingDNS)
    pd.push_back(Term::seq({n, s.request, s.url, s.original}));
  std::vector<Term> prs;
  for (const auto& p : pendingRequests)
    prs.push_back(Term::seq(
        {p.saved.request, p.saved.url, p.saved.original, p.key, p.addr}));
  std::vector<Term> utb(useTB.begin(), useTB.end());
  return Term::seq({mapTerm(cookies), Term::seq(std::move(stsv)),
                    mapTerm(tokenBindings), Term::seq(std::move(utb)),
                    mapTerm(refTBSource), Term::seq(identities),
                    mapTerm(secrets), Term::seq(std::move(docs)),
                    Term::seq(std::move(pd)), Term::seq(std::move(prs)),
                    mapTerm(dnsCache), mapTerm(keyMapping),
                    Term::seq(urlbar)});
}

}  // namespace fapisim
