#pragma once

#include <optional>
#include <set>

#include "fapisim/https_base.hpp"

namespace fapisim {

// Reduced browser: cookie jar with the __Secure prefix rule, STS, redirects,
// token-binding participation, a flat document list and the honest scripts.
// No frames, storage, XHR or history navigation.
class BrowserProc : public Process {
 public:
  struct Document {
    Term nonce;
    Term location;  // url (fragment intact)
    std::string script;
    Term scriptstate;
    size_t runs = 0;  // exploration pruning counter
  };

  Term dnsAddr;
  std::map<Term, Term> keyMapping;
  std::map<Term, Term> dnsCache;
  std::map<Term, Term> cookies;        // Domain -> list of ⟨name, ⟨value, secure⟩⟩
  std::set<Term> sts;                  // Domains
  std::map<Term, Term> tokenBindings;  // Domain -> private key (lazy)
  std::set<Term> useTB;                // Domains requiring the TB handshake
  std::map<Term, Term> refTBSource;    // dest Domain -> referring Domain
  std::vector<Term> identities;        // ⟨name, domain⟩
  std::map<Term, Term> secrets;        // identity -> password
  std::vector<Document> documents;
  std::vector<Term> urlbar;  // scenario-declared navigation targets

  void onEvent(const Event& ev, StepCtx& ctx) override;
  Term stateTerm() const override;
  std::unique_ptr<Process> clone() const override {
    return std::make_unique<BrowserProc>(*this);
  }

  // Prepares headers (cookies, Origin, Referer), applies STS, resolves and
  // sends. Public so tests can drive single navigations.
  void httpSend(Term request, Term url, const Term& origin,
                const Term& referrer, const Term& referrerPolicy,
                StepCtx& ctx);

 private:
  struct SavedReq {
    Term request;
    Term url;
    Term original;     // nil, or the request this TB handshake is for
    Term originalUrl;
  };
  std::map<Term, SavedReq> pendingDNS;  // dns nonce -> saved
  struct PendingReq {
    SavedReq saved;
    Term key;
    Term addr;
  };
  std::vector<PendingReq> pendingRequests;

  void onTrigger(StepCtx& ctx);
  void runScript(Document& doc, StepCtx& ctx);
  void sendResolved(SavedReq saved, const Term& addr, StepCtx& ctx);
  void wireSend(const SavedReq& saved, const Term& addr, StepCtx& ctx);
  void processResponse(const Term& resp, const PendingReq& pr, StepCtx& ctx);
  Term tbKey(const Term& domain, StepCtx& ctx);
};

// Cookie jar update. Rejects a ⟨__Secure, ...⟩-named cookie unless the
// response came over HTTPS; otherwise replaces any same-named cookie and
// appends.
Term addCookie(const Term& jar, const Term& cookie, const Term& protocol);

// Browser script command shapes, also used by the attacker's page script:
//   ⟨HREF, url⟩  |  ⟨FORM, url, method, body⟩
namespace atoms {
Term HREF();
Term FORM();
Term TB_provided();
Term TB_referred();
}  // namespace atoms

Term secureCookieName(std::string_view base);  // ⟨__Secure, base⟩

// Token-binding message ⟨kind, pub(key), sig(ekm, key)⟩.
Term tbMessage(const Term& kind, const Term& ekm, const Term& key);
// Scans a Sec-Token-Binding header for a message of `kind` whose signature
// verifies over an EKM in `ekms`; returns the binding id (public key) or
// fail.
Term verifyTB(const Term& tbHeader, const Term& kind,
              const std::set<Term>& ekms);

}  // namespace fapisim
