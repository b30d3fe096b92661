#pragma once

#include <set>

#include "fapisim/https_base.hpp"

namespace fapisim {

// Holds one secret resource nonce per identity and access mode; hands it out
// against access tokens validated directly against the issuing AS's records
// (synchronous introspection).
class RSProc : public ServerCore {
 public:
  Term authServ;  // domain of the AS whose tokens are accepted
  PID asPid;
  std::map<Term, Term> rNonces;  // identity -> read resource nonce
  std::map<Term, Term> wNonces;  // identity -> latest written nonce
  std::set<Term> oautbEKM;
  std::vector<Term> mtlsRequests;  // ⟨nonce, supplied pub key⟩
  const Knobs* knobs = nullptr;

  std::unique_ptr<Process> clone() const override {
    return std::make_unique<RSProc>(*this);
  }

 protected:
  void processHttpsRequest(const Term& req, const Responder& r,
                           StepCtx& ctx) override;
  void processHttpsResponse(const Term&, const Term&, const Term&,
                            StepCtx&) override {}
  Term roleStateTerm() const override;

 private:
  // AS-side access-token record lookup; returns the matching entry or fail.
  Term findToken(const Term& at, StepCtx& ctx) const;
  void serveResource(const Term& identity, bool write, const Responder& r,
                     StepCtx& ctx);
};

}  // namespace fapisim
