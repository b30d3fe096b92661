#pragma once

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fapisim {

// Function symbols of the signature. The first six are constructors and may
// appear in normal forms; the rest are destructors, evaluated away by
// normalization.
enum class Fn : uint8_t {
  EncA, EncS, Sig, Mac, Hash, Pub,
  DecA, DecS, CheckSig, CheckMac, ExtractMsg, Proj, Lookup,
};

constexpr bool isConstructor(Fn f) { return f <= Fn::Pub; }
const char* fnName(Fn f);

// Immutable term over the message algebra: printable atoms, run-unique
// nonces, network addresses, DNS domains, sequences and applications of the
// function symbols above. Shared, structurally compared, hash-accelerated.
class Term {
 public:
  enum class Kind : uint8_t { Atom, Nonce, Address, Domain, Seq, App };

  Term();  // the nil atom

  static Term atom(std::string_view text);
  static Term nonce(uint64_t id, std::string_view label);
  static Term address(std::string_view host);
  static Term domain(std::string_view host);
  static Term seq(std::vector<Term> elems);
  static Term seq(std::initializer_list<Term> elems);
  // Raw application; not normalized. Use the helpers below for evaluated
  // destructor application.
  static Term app(Fn f, std::vector<Term> args);

  Kind kind() const;
  Fn fn() const;                       // Kind::App only
  const std::string& text() const;     // Atom/Address/Domain text, Nonce label
  uint64_t nonceId() const;            // Kind::Nonce only
  const std::vector<Term>& args() const;  // Seq elements or App arguments

  bool isAtom(std::string_view text) const;
  bool isNil() const;
  bool isFail() const;
  bool isTop() const;
  // nil or fail: every guard in the role algorithms treats both as "stop".
  bool truthy() const { return !isNil() && !isFail(); }
  bool isSeq() const { return kind() == Kind::Seq; }
  size_t size() const;                 // Seq arity, 0 otherwise
  // Projection pi_i (1-based, like the algorithms); fail when out of range.
  Term at(size_t i) const;

  uint64_t hash() const;
  bool operator==(const Term& o) const;
  bool operator!=(const Term& o) const { return !(*this == o); }
  std::strong_ordering operator<=>(const Term& o) const;

  // Canonical rendering, stable across runs: atoms bare, nonces as
  // `ν<id>:<label>`, sequences as ⟨a, b⟩, applications as fn(a, b).
  std::string render() const;
  // Rendering with nonce ids renumbered by first occurrence; used for
  // duplicate-state detection where fresh-nonce identity is irrelevant.
  void renderCanonical(std::string& out,
                       std::map<uint64_t, uint64_t>& renaming) const;

  struct Node;  // opaque; defined in the implementation

 private:
  explicit Term(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

// Distinguished atoms: nil (absent value), fail (destructor failure),
// top (successful check).
const Term& nil();
const Term& fail();
const Term& top();

// Total normalization under the equational theory:
//   dec_a(enc_a(x, pub(y)), y) = x        dec_s(enc_s(x, k), k) = x
//   checksig(sig(x, k), pub(k)) = top     checkmac(mac(x, y), y) = top
//   mac(x, y) = hash(⟨x, y⟩)              extractmsg(sig(x, k)) = x
//   extractmsg(mac(x, y)) = x             proj/lookup evaluate structurally
// Destructors on non-matching arguments yield the fail atom. Idempotent.
Term normalize(const Term& t);

// Constructor helpers (arguments are normalized, results are normal forms).
Term encA(const Term& m, const Term& pubKey);
Term encS(const Term& m, const Term& key);
Term sign(const Term& m, const Term& key);
Term mac(const Term& m, const Term& key);  // canonicalized to hash(⟨m, key⟩)
Term hashT(const Term& m);
Term pubOf(const Term& key);

// Evaluated destructors.
Term decA(const Term& c, const Term& key);
Term decS(const Term& c, const Term& key);
Term checkSig(const Term& s, const Term& pubKey);
Term checkMac(const Term& m, const Term& key);
Term extractMsg(const Term& t);

// Association maps: sequences of two-element ⟨key, value⟩ sequences,
// insertion-ordered; lookup returns the value of the FIRST matching key.
Term dict(std::initializer_list<std::pair<Term, Term>> kvs);
Term dictGet(const Term& d, const Term& key);          // nil when absent
Term dictSet(const Term& d, const Term& key, const Term& value);
Term dictErase(const Term& d, const Term& key);
bool dictHas(const Term& d, const Term& key);

inline Term atomT(std::string_view s) { return Term::atom(s); }

}  // namespace fapisim
