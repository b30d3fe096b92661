#pragma once

#include "fapisim/runtime.hpp"

namespace fapisim {

// --- HTTP message / URL term shapes -----------------------------------------
//   request:  ⟨HTTPReq, nonce, method, host, path, parameters, headers, body⟩
//   response: ⟨HTTPResp, nonce, status, headers, body⟩
//   url:      ⟨URL, protocol, host, path, parameters, fragment⟩

namespace atoms {
Term HTTPReq();
Term HTTPResp();
Term URL();
Term GET();
Term POST();
Term S();  // https
Term P();  // plain http
Term DNSResolve();
Term DNSResolved();
Term LEAK();
}  // namespace atoms

Term mkReq(const Term& nonce, const Term& method, const Term& host,
           const Term& path, const Term& params, const Term& headers,
           const Term& body);
Term mkResp(const Term& nonce, const Term& status, const Term& headers,
            const Term& body);
Term mkUrl(const Term& protocol, const Term& host, const Term& path,
           const Term& params = Term::seq({}), const Term& fragment = nil());

bool isReq(const Term& m);
bool isResp(const Term& m);
bool isUrl(const Term& m);

inline Term reqNonce(const Term& m) { return m.at(2); }
inline Term reqMethod(const Term& m) { return m.at(3); }
inline Term reqHost(const Term& m) { return m.at(4); }
inline Term reqPath(const Term& m) { return m.at(5); }
inline Term reqParams(const Term& m) { return m.at(6); }
inline Term reqHeaders(const Term& m) { return m.at(7); }
inline Term reqBody(const Term& m) { return m.at(8); }
inline Term respNonce(const Term& m) { return m.at(2); }
inline Term respStatus(const Term& m) { return m.at(3); }
inline Term respHeaders(const Term& m) { return m.at(4); }
inline Term respBody(const Term& m) { return m.at(5); }
inline Term urlProtocol(const Term& u) { return u.at(2); }
inline Term urlHost(const Term& u) { return u.at(3); }
inline Term urlPath(const Term& u) { return u.at(4); }
inline Term urlParams(const Term& u) { return u.at(5); }
inline Term urlFragment(const Term& u) { return u.at(6); }

Term header(const Term& m, std::string_view name);  // request or response

// --- generic HTTPS server ----------------------------------------------------

// Correlates outgoing requests with responses across the DNS round-trip and
// the TLS abstraction (enc_a of ⟨request, fresh symmetric key⟩ under the
// receiver's public key; response enc_s under that key). Role behavior is
// supplied through the template-method hooks.
class ServerCore : public Process {
 public:
  Term dnsAddr;
  std::map<Term, Term> keyMapping;  // Domain -> public key (global PKI view)
  std::map<Term, Term> tlskeys;     // own Domain -> private key
  std::map<Term, Term> dnsCache;    // Domain -> resolved Address

  void onEvent(const Event& ev, StepCtx& ctx) final;

  // Starts an HTTPS exchange: resolves the host (or reuses the cached
  // address) and eventually emits the encrypted request.
  void httpsSimpleSend(const Term& reference, const Term& request,
                       StepCtx& ctx);

  Term stateTerm() const override;

 protected:
  struct PendingDns {
    Term reference;
    Term request;
  };
  struct PendingReq {
    Term reference;
    Term request;
    Term key;
    Term addr;
  };
  std::map<Term, PendingDns> pendingDNS;  // DNS nonce -> saved send
  std::vector<PendingReq> pendingRequests;

  // `respond` helper: reply to the request being processed.
  struct Responder {
    Term nonce;
    Term key;
    Term senderAddr;
  };
  void respond(const Responder& r, const Term& status, const Term& headers,
               const Term& body, StepCtx& ctx);

  virtual void processHttpsRequest(const Term& req, const Responder& r,
                                   StepCtx& ctx) = 0;
  virtual void processHttpsResponse(const Term& resp, const Term& reference,
                                    const Term& request, StepCtx& ctx) = 0;
  virtual void onTrigger(StepCtx&) {}
  virtual void onOther(const Event&, StepCtx&) {}

  // Extra state the subclass wants inside stateTerm().
  virtual Term roleStateTerm() const { return Term::seq({}); }

  Term ownAddress() const { return addresses.front(); }

 private:
  void sendResolved(const Term& reference, const Term& request,
                    const Term& addr, StepCtx& ctx);
};

}  // namespace fapisim
