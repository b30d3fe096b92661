#pragma once

#include <set>

#include "fapisim/https_base.hpp"

namespace fapisim {

class ASProc : public ServerCore {
 public:
  struct ClientReg {
    Term clientId;
    std::string profile;     // "r" | "rw"
    std::string clientType;  // "pub" | "conf_JWS" | "conf_MTLS" | "conf_OAUTB"
    bool isApp = false;
    std::vector<Term> redirectUris;  // urls
    Term jwsPub;        // request-object verification key
    Term mtlsPub;       // registered MTLS key
    Term clientSecret;  // assertion key (conf_JWS / conf_OAUTB)
  };

  struct AuthRecord {
    Term clientId;
    Term redirectUri;
    Term subject;
    Term issuer;  // own domain the authorization ran on
    Term nonce;
    Term scope;
    Term responseType;
    Term pkceChallenge;
    Term code;
    Term accessToken;
    std::string mode;  // "plain" | "hybrid" | "jarm"
    bool codeUsed = false;
  };

  Term jwk;      // token/id-token signing key
  Term leakAddr;
  std::map<Term, Term> passwords;  // identity -> password
  std::vector<ClientReg> clients;
  std::vector<AuthRecord> records;
  std::set<Term> oautbEKM;
  std::vector<Term> mtlsRequests;  // ⟨nonce, client MTLS pub⟩, consumed on use
  std::vector<Term> accessTokens;  // ⟨sub, cid, at, r⟩ |
                                   // ⟨MTLS|OAUTB, sub, cid, at, key, rw⟩
  const Knobs* knobs = nullptr;

  std::unique_ptr<Process> clone() const override {
    return std::make_unique<ASProc>(*this);
  }

 protected:
  void processHttpsRequest(const Term& req, const Responder& r,
                           StepCtx& ctx) override;
  void processHttpsResponse(const Term&, const Term&, const Term&,
                            StepCtx&) override {}
  Term roleStateTerm() const override;

 private:
  void handleAuth2(const Term& req, const Responder& r, StepCtx& ctx);
  void handleToken(const Term& req, const Responder& r, StepCtx& ctx);
  const ClientReg* findClient(const Term& cid) const;
};

}  // namespace fapisim
