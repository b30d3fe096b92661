#include "fapisim/attacks.hpp"

#include <stdexcept>

#include "fapisim/browser.hpp"

namespace fapisim {

namespace {

Term A(const char* s) { return Term::atom(s); }
Term D(const char* s) { return Term::domain(s); }

// Canonical fixture names shared by the attack scenarios.
const char* kClientHost = "client.example";
const char* kAsHost = "as.example";
const char* kRsHost = "rs.example";
const char* kEvilAsHost = "evil-as.example";
const char* kClientId = "client1";
const char* kEvilClientId = "client1e";

Term originHdr(const Term& host) { return Term::seq({host, atoms::S()}); }

Term cookieHdr(const Term& sid) {
  return dict({{secureCookieName("sessionId"), sid}});
}

Term sidFromSetCookie(const Term& resp) {
  Term sc = header(resp, "Set-Cookie");
  if (!sc.isSeq()) return nil();
  for (const Term& c : sc.args())
    if (c.isSeq() && c.size() == 2 && c.at(1) == secureCookieName("sessionId"))
      return c.at(2).at(1);
  return nil();
}

// Recipe base playing the HTTPS client role: correlates its own outgoing
// requests with incoming encrypted responses by tag.
class HttpRecipe : public Recipe {
 protected:
  struct Pending {
    std::string tag;
    Term nonce;
    Term key;
  };
  struct Matched {
    std::string tag;
    Term resp;
    Term reqNonce;
  };
  std::vector<Pending> pending;

  void request(AttackerProc& a, StepCtx& ctx, const std::string& tag,
               const Term& method, const Term& host, const Term& path,
               const Term& params, const Term& headers, const Term& body) {
    Term n = a.freshKnown(ctx, "att:" + tag);
    Term k = a.freshKnown(ctx, "att:key:" + tag);
    Term req = mkReq(n, method, host, path, params, headers, body);
    pending.push_back({tag, n, k});
    a.send(ctx, a.dnsTable.at(host),
           encA(Term::seq({req, k}), a.keyMapping.at(host)));
  }

  std::optional<Matched> matchResponse(const Event& ev) {
    if (ev.msg.kind() != Term::Kind::App || ev.msg.fn() != Fn::EncS)
      return std::nullopt;
    for (size_t i = 0; i < pending.size(); ++i) {
      Term resp = decS(ev.msg, pending[i].key);
      if (resp.isFail() || !isResp(resp)) continue;
      if (respNonce(resp) != pending[i].nonce) continue;
      Matched m{pending[i].tag, resp, pending[i].nonce};
      pending.erase(pending.begin() + static_cast<ptrdiff_t>(i));
      return m;
    }
    return std::nullopt;
  }

  Term pendingTerm() const {
    std::vector<Term> ps;
    for (const Pending& p : pending)
      ps.push_back(Term::seq({A(p.tag.c_str()), p.nonce, p.key}));
    return Term::seq(std::move(ps));
  }
};

// Replays a leaked authorization request at the AS under the attacker's own
// login, then lures the victim browser into delivering the resulting
// authorization response inside the victim's session (CSRF): the honest
// session completes for the attacker's identity without the browser ever
// authenticating. Token binding of the PKCE verifier (conf_OAUTB webserver
// deployment) makes the stolen response unredeemable.
class AuthReqLeakRecipe : public HttpRecipe {
 public:
  std::unique_ptr<Recipe> clone() const override {
    return std::make_unique<AuthReqLeakRecipe>(*this);
  }

  void onEvent(AttackerProc& a, const Event& ev, StepCtx& ctx) override {
    if (auto m = matchResponse(ev)) {
      if (m->tag == "tbprep") {
        // Own token-binding handshake with the AS, so /auth2 accepts us even
        // for token-bound deployments.
        Term tn = dictGet(respBody(m->resp), A("tb_nonce"));
        Term ekm =
            hashT(Term::seq({m->reqNonce, tn, a.keyMapping.at(asHost_)}));
        Term prov = a.freshKnown(ctx, "att:tbprov");
        Term ref = a.freshKnown(ctx, "att:tbref");
        Term tb = Term::seq({tbMessage(atoms::TB_provided(), ekm, prov),
                             tbMessage(atoms::TB_referred(), ekm, ref)});
        Term body = leakedParams_;
        body = dictSet(body, A("identity"), a.fact("identity:mallory"));
        body = dictSet(body, A("password"), a.fact("password:mallory"));
        request(a, ctx, "auth2", atoms::POST(), asHost_, A("/auth2"),
                Term::seq({}),
                dict({{A("Origin"), originHdr(asHost_)},
                      {A("Sec-Token-Binding"), tb}}),
                body);
      } else if (m->tag == "auth2") {
        Term loc = header(m->resp, "Location");
        if (isUrl(loc)) csrfUrl_ = loc;
      }
      return;
    }
    const Term& msg = ev.msg;
    if (msg.isSeq() && msg.size() == 3 && msg.at(1) == atoms::LEAK() &&
        msg.at(2).isAtom("auth_request") && leakedParams_.isNil()) {
      Term loc = msg.at(3);
      asHost_ = urlHost(loc);
      leakedParams_ = urlParams(loc);
      request(a, ctx, "tbprep", atoms::GET(), asHost_, A("/OAUTB-prepare"),
              Term::seq({}), Term::seq({}), nil());
      return;
    }
    if (auto dr = a.decryptRequest(ev)) {
      // Our site: serve the CSRF page once the stolen response is ready.
      if (csrfUrl_.truthy()) {
        pageServed_ = true;
        a.respondEnc(
            ctx, *dr, A("200"), Term::seq({}),
            Term::seq({A("att_script"), Term::seq({atoms::HREF(), csrfUrl_})}));
      } else {
        a.respondEnc(ctx, *dr, A("200"), Term::seq({}), nil());
      }
    }
  }

  size_t pickChoice(const std::string& label, size_t n) override {
    // Send the victim to our site exactly when the CSRF page is ready;
    // otherwise follow the flow.
    if (label == "browser.trigger" && csrfUrl_.truthy() && !pageServed_)
      return n - 1;
    return 0;
  }

  Term stateTerm() const override {
    return Term::seq({leakedParams_, csrfUrl_, asHost_,
                      pageServed_ ? top() : nil(), pendingTerm()});
  }

 private:
  Term leakedParams_, csrfUrl_, asHost_;
  bool pageServed_ = false;
};

// Lures the victim into authorizing an attacker-crafted request whose PKCE
// challenge the attacker chose; the leaked authorization response (app
// deployment) is then redeemed with the attacker's own verifier. The signed
// request object makes the AS ignore the attacker-chosen parameters.
class PkceRecipe : public HttpRecipe {
 public:
  std::unique_ptr<Recipe> clone() const override {
    return std::make_unique<PkceRecipe>(*this);
  }

  void onEvent(AttackerProc& a, const Event& ev, StepCtx& ctx) override {
    if (auto m = matchResponse(ev)) {
      if (m->tag == "token") {
        Term at = dictGet(respBody(m->resp), A("access_token"));
        if (at.truthy())
          request(a, ctx, "resource", atoms::GET(), D(kRsHost),
                  A("/resource-r"), Term::seq({}),
                  dict({{A("Authorization"), Term::seq({A("Bearer"), at})}}),
                  nil());
      }
      return;
    }
    const Term& msg = ev.msg;
    if (msg.isSeq() && msg.size() == 3 && msg.at(1) == atoms::LEAK() &&
        msg.at(2).isAtom("auth_response") && !redeemed_) {
      Term code = dictGet(urlParams(msg.at(3)), A("code"));
      if (!code.truthy()) return;
      redeemed_ = true;
      Term body = dict({{A("grant_type"), A("authorization_code")},
                        {A("code"), code},
                        {A("redirect_uri"), redirectUri()},
                        {A("client_id"), A(kClientId)},
                        {A("pkce_verifier"), verifier_}});
      request(a, ctx, "token", atoms::POST(), D(kAsHost), A("/token"),
              Term::seq({}), Term::seq({}), body);
      return;
    }
    if (auto dr = a.decryptRequest(ev)) {
      if (verifier_.isNil()) {
        verifier_ = a.freshKnown(ctx, "att:verifier");
        Term st = a.freshKnown(ctx, "att:state");
        Term nn = a.freshKnown(ctx, "att:nonce");
        Term params =
            dict({{A("response_type"), Term::seq({A("code")})},
                  {A("client_id"), A(kClientId)},
                  {A("redirect_uri"), redirectUri()},
                  {A("scope"), A("openid")},
                  {A("state"), st},
                  {A("nonce"), nn},
                  {A("code_challenge"), hashT(verifier_)}});
        authUrl_ = mkUrl(atoms::S(), D(kAsHost), A("/auth"), params, nil());
      }
      a.respondEnc(
          ctx, *dr, A("200"), Term::seq({}),
          Term::seq({A("att_script"), Term::seq({atoms::HREF(), authUrl_})}));
    }
  }

  Term stateTerm() const override {
    return Term::seq(
        {verifier_, authUrl_, redeemed_ ? top() : nil(), pendingTerm()});
  }

 private:
  static Term redirectUri() {
    return mkUrl(atoms::S(), D(kClientHost), A("/redirect_ep"));
  }
  Term verifier_, authUrl_;
  bool redeemed_ = false;
};

// Phase 1 observes a leaked read-write access token from the victim's honest
// flow. Phase 2: the attacker runs its own login session at the client,
// steers the token request to its misconfigured endpoint and answers with
// the victim's token plus a replay of the session's first id token — which
// passes every consistency check except the access-token hash.
class IdtReplayRecipe : public HttpRecipe {
 public:
  std::unique_ptr<Recipe> clone() const override {
    return std::make_unique<IdtReplayRecipe>(*this);
  }

  void onEvent(AttackerProc& a, const Event& ev, StepCtx& ctx) override {
    if (auto m = matchResponse(ev)) {
      if (m->tag == "startLogin") {
        sid_ = sidFromSetCookie(m->resp);
        Term loc = header(m->resp, "Location");
        if (!isUrl(loc) || !sid_.truthy()) return;
        Term body = urlParams(loc);
        body = dictSet(body, A("identity"), a.fact("identity:mallory"));
        body = dictSet(body, A("password"), a.fact("password:mallory"));
        request(a, ctx, "auth2", atoms::POST(), D(kAsHost), A("/auth2"),
                Term::seq({}), dict({{A("Origin"), originHdr(D(kAsHost))}}),
                body);
      } else if (m->tag == "auth2") {
        Term loc = header(m->resp, "Location");
        if (!isUrl(loc)) return;
        Term frag = urlFragment(loc);
        idt1_ = dictGet(frag, A("id_token"));
        request(a, ctx, "redirect", atoms::POST(), urlHost(loc), urlPath(loc),
                urlParams(loc), dict({{A("Cookie"), cookieHdr(sid_)}}), frag);
      }
      return;
    }
    const Term& msg = ev.msg;
    if (msg.isSeq() && msg.size() == 3 && msg.at(1) == atoms::LEAK() &&
        msg.at(2).isAtom("access_token") && !phase2_) {
      // The phished token is in; immediately open our own session.
      leakedAT_ = msg.at(3);
      phase2_ = true;
      request(a, ctx, "startLogin", atoms::POST(), D(kClientHost),
              A("/startLogin"), Term::seq({}),
              dict({{A("Origin"), originHdr(D(kClientHost))}}),
              dict({{A("identity"), a.fact("identity:mallory")}}));
      return;
    }
    if (auto dr = a.decryptRequest(ev)) {
      Term path = reqPath(dr->req);
      if (path.isAtom("/MTLS-prepare")) {
        Term n = a.freshKnown(ctx, "att:mtls");
        a.respondEnc(ctx, *dr, A("200"), Term::seq({}),
                     encA(Term::seq({n, a.keyMapping.at(reqHost(dr->req))}),
                          a.fact(std::string("mtlsPub:") + kClientId)));
      } else if (path.isAtom("/token")) {
        a.respondEnc(ctx, *dr, A("200"), Term::seq({}),
                     dict({{A("access_token"), leakedAT_},
                           {A("id_token"), idt1_}}));
      }
    }
  }

  size_t pickChoice(const std::string& label, size_t) override {
    // Only the attacker's own session is pointed at the rogue endpoint.
    if (label == "client.misconfTEp") return phase2_ ? 1 : 0;
    // The attacked session runs the Hybrid Flow (the replayed id token
    // comes from its fragment); the victim's earlier session may as well
    // take the shorter JARM route.
    if (label == "client.response_type") return phase2_ ? 0 : 1;
    return 0;
  }

  Term stateTerm() const override {
    return Term::seq(
        {leakedAT_, sid_, idt1_, phase2_ ? top() : nil(), pendingTerm()});
  }

 private:
  Term leakedAT_, sid_, idt1_;
  bool phase2_ = false;
};

// The attacker operates a rogue AS the client is also registered at. Phase 1
// observes the victim's leaked access token; phase 2 runs an attacker login
// session against the rogue registration and forges a JARM response (signed
// with the rogue AS key, access-token hash matching the stolen token). The
// client redeems at the rogue token endpoint and presents the victim's token
// to the honest RS; the issuer check on the token's provenance blocks it.
class CuckooRecipe : public HttpRecipe {
 public:
  std::unique_ptr<Recipe> clone() const override {
    return std::make_unique<CuckooRecipe>(*this);
  }

  void onEvent(AttackerProc& a, const Event& ev, StepCtx& ctx) override {
    if (auto m = matchResponse(ev)) {
      if (m->tag == "startLogin") {
        Term sid = sidFromSetCookie(m->resp);
        Term loc = header(m->resp, "Location");
        if (!isUrl(loc) || !sid.truthy()) return;
        Term state = dictGet(urlParams(loc), A("state"));
        Term code = a.freshKnown(ctx, "att:code");
        Term jws = sign(dict({{A("iss"), D(kEvilAsHost)},
                              {A("aud"), A(kEvilClientId)},
                              {A("code"), code},
                              {A("at_hash"), hashT(leakedAT_)},
                              {A("state"), state}}),
                        a.fact(std::string("asKey:") + kEvilAsHost));
        request(a, ctx, "redirect", atoms::GET(), D(kClientHost),
                A("/redirect_ep2"), dict({{A("response"), jws}}),
                dict({{A("Cookie"), cookieHdr(sid)}}), nil());
      }
      return;
    }
    const Term& msg = ev.msg;
    if (msg.isSeq() && msg.size() == 3 && msg.at(1) == atoms::LEAK() &&
        msg.at(2).isAtom("access_token") && !phase2_) {
      // The phished token is in; immediately log in at the rogue
      // registration.
      leakedAT_ = msg.at(3);
      phase2_ = true;
      request(a, ctx, "startLogin", atoms::POST(), D(kClientHost),
              A("/startLogin"), Term::seq({}),
              dict({{A("Origin"), originHdr(D(kClientHost))}}),
              dict({{A("identity"), a.fact("identity:mallory")}}));
      return;
    }
    if (auto dr = a.decryptRequest(ev)) {
      Term path = reqPath(dr->req);
      if (path.isAtom("/MTLS-prepare")) {
        Term n = a.freshKnown(ctx, "att:mtls");
        a.respondEnc(ctx, *dr, A("200"), Term::seq({}),
                     encA(Term::seq({n, a.keyMapping.at(reqHost(dr->req))}),
                          a.fact(std::string("mtlsPub:") + kEvilClientId)));
      } else if (path.isAtom("/token")) {
        a.respondEnc(ctx, *dr, A("200"), Term::seq({}),
                     dict({{A("access_token"), leakedAT_}}));
      }
    }
  }

  Term stateTerm() const override {
    return Term::seq({leakedAT_, phase2_ ? top() : nil(), pendingTerm()});
  }

 private:
  Term leakedAT_;
  bool phase2_ = false;
};

}  // namespace

std::unique_ptr<Recipe> makeRecipeByName(const std::string& name) {
  if (name == "authreq-leak") return std::make_unique<AuthReqLeakRecipe>();
  if (name == "pkce-chosen-challenge") return std::make_unique<PkceRecipe>();
  if (name == "idtoken-replay") return std::make_unique<IdtReplayRecipe>();
  if (name == "cuckoo") return std::make_unique<CuckooRecipe>();
  return nullptr;
}

const std::vector<std::string>& attackNames() {
  static const std::vector<std::string> names = {
      "cuckoo", "idtoken-replay", "pkce-chosen-challenge", "authreq-leak"};
  return names;
}

AttackOutcome runAttack(const std::string& name, bool fixEnabled,
                        const std::string& scenarioDir) {
  std::string file = name;
  if (name == "cuckoo" || name == "idtoken-replay" ||
      name == "pkce-chosen-challenge") {
    // countermeasure toggled below
  } else if (name == "authreq-leak") {
    // countermeasure is the token-bound deployment variant
    if (fixEnabled) file = "authreq-leak-oautb";
  } else {
    throw std::runtime_error("unknown attack: " + name);
  }

  ScenarioConfig sc = loadScenario(scenarioDir + "/" + file + ".json");
  if (name == "cuckoo") sc.knobs.fixes.atIss = fixEnabled;
  if (name == "idtoken-replay") sc.knobs.fixes.atHash = fixEnabled;
  if (name == "pkce-chosen-challenge")
    sc.knobs.fixes.signedRequestJws = fixEnabled;
  sc.name = name + std::string(fixEnabled ? "+fix" : "");

  BuiltScenario b = buildScenario(sc);
  auto* att = dynamic_cast<AttackerProc*>(b.cfg.attacker());
  if (!att || !att->recipe)
    throw std::runtime_error("attack scenario has no recipe: " + file);

  AttackOutcome out;
  out.scenarioFile = file;
  out.mc = b.mc;
  RecipeChooser ch(att);
  out.trace =
      runDriver(b.cfg, b.initialKnowledge, sc.name, 0, ch, 600, 4, true);
  out.verdicts = checkAll(out.trace, b.mc);
  out.violated = !out.verdicts.empty();
  if (out.violated) {
    // Keep only the minimal violating prefix.
    for (size_t k = 1; k <= out.trace.steps.size(); ++k) {
      Trace p = out.trace;
      p.steps.resize(k);
      std::vector<MonitorVerdict> v = checkAll(p, b.mc);
      if (!v.empty()) {
        out.trace = std::move(p);
        out.verdicts = std::move(v);
        break;
      }
    }
  }
  out.expectedViolation = !fixEnabled;
  out.expectedProperty =
      name == "authreq-leak" ? "session_integrity" : "authorization";
  return out;
}

}  // namespace fapisim
