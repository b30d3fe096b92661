#pragma once

#include <set>

#include "fapisim/https_base.hpp"

namespace fapisim {

// Relying party. One process may hold registrations at several authorization
// servers; a login session is pinned to the registration whose server issued
// the chosen identity's domain.
class ClientProc : public ServerCore {
 public:
  struct Registration {
    Term as;           // AS domain
    Term clientId;
    std::string profile;       // "r" | "rw"
    std::string clientType;    // "pub" | "conf_JWS" | "conf_MTLS" | "conf_OAUTB"
    std::string responseMode;  // rw only: "hybrid" | "jarm"
    Term authEp;               // url
    Term tokenEp;              // url
    std::vector<Term> redirectUris;      // urls on this client's domains
    std::vector<Term> resourceServers;   // RS domains
    Term asJwkPub;     // AS signing public key
    Term clientSecret; // conf_JWS / conf_OAUTB assertion key
    Term mtlsKey;      // conf_MTLS private key (AS knows pub)
    Term jwsKey;       // request-object signing key (AS knows pub)
    Term tbKeyAS;      // OAUTB binding key toward the AS
    Term tbKeyRS;      // OAUTB binding key toward the RS
  };

  struct Session {
    size_t reg = 0;
    Term state, nonce, scope, responseType;
    Term redirectUri;  // chosen url
    Term rsDomain;
    Term pkceVerifier, pkceChallenge;
    Term tokenHost;    // token endpoint host actually used
    Term browserTBID;  // webserver conf_OAUTB: browser-provided binding id
    Term code, accessToken;
    Term idt1Sub, idt1Iss;        // from the fragment id token (hybrid)
    Term idt2Iss, jarmIss, jarmAtHash;
    Term mtlsNonce, ekm;          // current MTLS / OAUTB round state
    Term redirectEpRequest;       // ⟨nonce, key, addr⟩ pending browser request
    Term serviceSessionId;
    Term resource;
    std::string modeStr;          // "", "hybrid" or "jarm"
    const std::string& mode() const { return modeStr; }
  };

  bool app = false;   // app deployment; false: webserver
  Term leakAddr;      // where threat-model leak events go
  std::vector<Registration> registrations;
  std::map<Term, Session> sessions;  // sessionId nonce -> session
  std::set<Term> oautbEKM;           // EKMs of browser TB handshakes with us

  Term stateTerm() const override { return ServerCore::stateTerm(); }
  std::unique_ptr<Process> clone() const override {
    return std::make_unique<ClientProc>(*this);
  }

  const Knobs* knobs = nullptr;  // scenario-owned

 protected:
  void processHttpsRequest(const Term& req, const Responder& r,
                           StepCtx& ctx) override;
  void processHttpsResponse(const Term& resp, const Term& reference,
                            const Term& request, StepCtx& ctx) override;
  Term roleStateTerm() const override;

 private:
  void startLoginFlow(const Term& sid, const Term& identity,
                      const Responder& r, StepCtx& ctx);
  void handleRedirectEp(const Term& req, const Responder& r, StepCtx& ctx);
  void prepareTokenRequest(const Term& sid, StepCtx& ctx);
  void sendTokenRequest(const Term& sid, StepCtx& ctx);
  void processTokenResponse(const Term& sid, const Term& body, StepCtx& ctx);
  bool checkIdToken(const Term& sid, const Term& idt, StepCtx& ctx);
  void useAccessToken(const Term& sid, StepCtx& ctx);
  void sendResourceRequest(const Term& sid, StepCtx& ctx);

  bool checkFirstIdToken(Session& s, const Term& idt, const Term& data);
  bool checkResponseJws(Session& s, const Term& jws);
  const Registration& reg(const Session& s) const {
    return registrations[s.reg];
  }
};

}  // namespace fapisim
