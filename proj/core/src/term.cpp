#include "fapisim/term.hpp"

#include <cassert>
#include <cstdlib>
#include <stdexcept>

namespace fapisim {

const char* fnName(Fn f) {
  switch (f) {
    case Fn::EncA: return "enc_a";
    case Fn::EncS: return "enc_s";
    case Fn::Sig: return "sig";
    case Fn::Mac: return "mac";
    case Fn::Hash: return "hash";
    case Fn::Pub: return "pub";
    case Fn::DecA: return "dec_a";
    case Fn::DecS: return "dec_s";
    case Fn::CheckSig: return "checksig";
    case Fn::CheckMac: return "checkmac";
    case Fn::ExtractMsg: return "extractmsg";
    case Fn::Proj: return "proj";
    case Fn::Lookup: return "lookup";
  }
  return "?";
}

struct Term::Node {
  Kind kind;
  Fn fn = Fn::EncA;
  uint64_t num = 0;       // nonce id
  std::string text;       // atom text / host / nonce label
  std::vector<Term> args;
  uint64_t h = 0;
};

namespace {

constexpr uint64_t kFnvOffset = 1469598103934665603ull;
constexpr uint64_t kFnvPrime = 1099511628211ull;

uint64_t fnv(uint64_t h, uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (i * 8)) & 0xff;
    h *= kFnvPrime;
  }
  return h;
}

uint64_t fnv(uint64_t h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

uint64_t nodeHash(const Term::Node& n);

}  // namespace

namespace {
uint64_t nodeHashImpl(Term::Kind kind, Fn fn, uint64_t num,
                      const std::string& text, const std::vector<Term>& args) {
  uint64_t h = kFnvOffset;
  h = fnv(h, static_cast<uint64_t>(kind));
  h = fnv(h, static_cast<uint64_t>(fn));
  h = fnv(h, num);
  h = fnv(h, text);
  for (const Term& a : args) h = fnv(h, a.hash());
  return h;
}
}  // namespace

static std::shared_ptr<const Term::Node> makeNode(Term::Kind kind, Fn fn,
                                                  uint64_t num,
                                                  std::string text,
                                                  std::vector<Term> args) {
  auto n = std::make_shared<Term::Node>();
  n->kind = kind;
  n->fn = fn;
  n->num = num;
  n->text = std::move(text);
  n->args = std::move(args);
  n->h = nodeHashImpl(kind, fn, num, n->text, n->args);
  return n;
}

Term::Term() { *this = nil(); }

Term Term::atom(std::string_view text) {
  return Term(makeNode(Kind::Atom, Fn::EncA, 0, std::string(text), {}));
}
Term Term::nonce(uint64_t id, std::string_view label) {
  return Term(makeNode(Kind::Nonce, Fn::EncA, id, std::string(label), {}));
}
Term Term::address(std::string_view host) {
  return Term(makeNode(Kind::Address, Fn::EncA, 0, std::string(host), {}));
}
Term Term::domain(std::string_view host) {
  return Term(makeNode(Kind::Domain, Fn::EncA, 0, std::string(host), {}));
}
Term Term::seq(std::vector<Term> elems) {
  return Term(makeNode(Kind::Seq, Fn::EncA, 0, "", std::move(elems)));
}
Term Term::seq(std::initializer_list<Term> elems) {
  return seq(std::vector<Term>(elems));
}
Term Term::app(Fn f, std::vector<Term> args) {
  return Term(makeNode(Kind::App, f, 0, "", std::move(args)));
}

Term::Kind Term::kind() const { return node_->kind; }
Fn Term::fn() const { return node_->fn; }
const std::string& Term::text() const { return node_->text; }
uint64_t Term::nonceId() const { return node_->num; }
const std::vector<Term>& Term::args() const { return node_->args; }

bool Term::isAtom(std::string_view text) const {
  return kind() == Kind::Atom && node_->text == text;
}
bool Term::isNil() const { return isAtom("nil"); }
bool Term::isFail() const { return isAtom("fail"); }
bool Term::isTop() const { return isAtom("top"); }

size_t Term::size() const { return kind() == Kind::Seq ? node_->args.size() : 0; }

Term Term::at(size_t i) const {
  if (kind() != Kind::Seq || i == 0 || i > node_->args.size()) return fail();
  return node_->args[i - 1];
}

uint64_t Term::hash() const { return node_->h; }

bool Term::operator==(const Term& o) const {
  if (node_ == o.node_) return true;
  const Node& a = *node_;
  const Node& b = *o.node_;
  if (a.h != b.h || a.kind != b.kind || a.fn != b.fn || a.num != b.num ||
      a.text != b.text || a.args.size() != b.args.size())
    return false;
  for (size_t i = 0; i < a.args.size(); ++i)
    if (!(a.args[i] == b.args[i])) return false;
  return true;
}

std::strong_ordering Term::operator<=>(const Term& o) const {
  if (node_ == o.node_) return std::strong_ordering::equal;
  const Node& a = *node_;
  const Node& b = *o.node_;
  if (auto c = a.kind <=> b.kind; c != 0) return c;
  if (auto c = a.fn <=> b.fn; c != 0) return c;
  if (auto c = a.num <=> b.num; c != 0) return c;
  if (auto c = a.text <=> b.text; c != 0) return c;
  if (auto c = a.args.size() <=> b.args.size(); c != 0) return c;
  for (size_t i = 0; i < a.args.size(); ++i)
    if (auto c = a.args[i] <=> b.args[i]; c != 0) return c;
  return std::strong_ordering::equal;
}

static void renderInto(const Term& t, std::string& out,
                       std::map<uint64_t, uint64_t>* renaming) {
  switch (t.kind()) {
    case Term::Kind::Atom:
      out += t.text();
      return;
    case Term::Kind::Nonce: {
      uint64_t id = t.nonceId();
      if (renaming) {
        auto it = renaming->try_emplace(id, renaming->size()).first;
        id = it->second;
      }
      out += "ν";
      out += std::to_string(id);
      out += ":";
      out += t.text();
      return;
    }
    case Term::Kind::Address:
      out += "addr:";
      out += t.text();
      return;
    case Term::Kind::Domain:
      out += "dom:";
      out += t.text();
      return;
    case Term::Kind::Seq: {
      out += "⟨";
      bool first = true;
      for (const Term& a : t.args()) {
        if (!first) out += ", ";
        first = false;
        renderInto(a, out, renaming);
      }
      out += "⟩";
      return;
    }
    case Term::Kind::App: {
      out += fnName(t.fn());
      out += "(";
      bool first = true;
      for (const Term& a : t.args()) {
        if (!first) out += ", ";
        first = false;
        renderInto(a, out, renaming);
      }
      out += ")";
      return;
    }
  }
}

std::string Term::render() const {
  std::string out;
  renderInto(*this, out, nullptr);
  return out;
}

void Term::renderCanonical(std::string& out,
                           std::map<uint64_t, uint64_t>& renaming) const {
  renderInto(*this, out, &renaming);
}

const Term& nil() {
  static const Term t = Term::atom("nil");
  return t;
}
const Term& fail() {
  static const Term t = Term::atom("fail");
  return t;
}
const Term& top() {
  static const Term t = Term::atom("top");
  return t;
}

// --- normalization -----------------------------------------------------------

static Term applyDestructor(Fn f, const std::vector<Term>& a) {
  switch (f) {
    case Fn::DecA: {
      // dec_a(enc_a(x, pub(y)), y) = x
      const Term& c = a[0];
      if (c.kind() == Term::Kind::App && c.fn() == Fn::EncA) {
        const Term& ek = c.args()[1];
        if (ek.kind() == Term::Kind::App && ek.fn() == Fn::Pub &&
            ek.args()[0] == a[1])
          return c.args()[0];
      }
      return fail();
    }
    case Fn::DecS: {
      const Term& c = a[0];
      if (c.kind() == Term::Kind::App && c.fn() == Fn::EncS &&
          c.args()[1] == a[1])
        return c.args()[0];
      return fail();
    }
    case Fn::CheckSig: {
      const Term& s = a[0];
      if (s.kind() == Term::Kind::App && s.fn() == Fn::Sig) {
        const Term& pk = a[1];
        if (pk.kind() == Term::Kind::App && pk.fn() == Fn::Pub &&
            pk.args()[0] == s.args()[1])
          return top();
      }
      return fail();
    }
    case Fn::CheckMac: {
      // mac is canonicalized to hash(⟨x, y⟩)
      const Term& m = a[0];
      if (m.kind() == Term::Kind::App && m.fn() == Fn::Hash) {
        const Term& body = m.args()[0];
        if (body.isSeq() && body.size() == 2 && body.at(2) == a[1])
          return top();
      }
      return fail();
    }
    case Fn::ExtractMsg: {
      const Term& t = a[0];
      if (t.kind() == Term::Kind::App && t.fn() == Fn::Sig)
        return t.args()[0];
      if (t.kind() == Term::Kind::App && t.fn() == Fn::Hash) {
        const Term& body = t.args()[0];
        if (body.isSeq() && body.size() == 2) return body.at(1);
      }
      return fail();
    }
    case Fn::Proj: {
      // proj(t, i) with i a numeric atom; 1-based.
      const Term& t = a[0];
      const Term& idx = a[1];
      if (t.isSeq() && idx.kind() == Term::Kind::Atom) {
        char* end = nullptr;
        unsigned long i = std::strtoul(idx.text().c_str(), &end, 10);
        if (end && *end == '\0' && i >= 1 && i <= t.size())
          return t.at(static_cast<size_t>(i));
      }
      return fail();
    }
    case Fn::Lookup:
      return dictGet(a[0], a[1]);
    default:
      return fail();
  }
}

Term normalize(const Term& t) {
  switch (t.kind()) {
    case Term::Kind::Atom:
    case Term::Kind::Nonce:
    case Term::Kind::Address:
    case Term::Kind::Domain:
      return t;
    case Term::Kind::Seq: {
      std::vector<Term> out;
      out.reserve(t.args().size());
      bool changed = false;
      for (const Term& a : t.args()) {
        Term n = normalize(a);
        if (!(n == a)) changed = true;
        out.push_back(std::move(n));
      }
      return changed ? Term::seq(std::move(out)) : t;
    }
    case Term::Kind::App: {
      std::vector<Term> out;
      out.reserve(t.args().size());
      bool changed = false;
      for (const Term& a : t.args()) {
        Term n = normalize(a);
        if (!(n == a)) changed = true;
        out.push_back(std::move(n));
      }
      Fn f = t.fn();
      if (f == Fn::Mac)
        return Term::app(Fn::Hash, {Term::seq({out[0], out[1]})});
      if (isConstructor(f))
        return changed ? Term::app(f, std::move(out)) : t;
      return applyDestructor(f, out);
    }
  }
  return fail();
}

Term encA(const Term& m, const Term& pubKey) {
  return Term::app(Fn::EncA, {normalize(m), normalize(pubKey)});
}
Term encS(const Term& m, const Term& key) {
  return Term::app(Fn::EncS, {normalize(m), normalize(key)});
}
Term sign(const Term& m, const Term& key) {
  return Term::app(Fn::Sig, {normalize(m), normalize(key)});
}
Term mac(const Term& m, const Term& key) {
  return Term::app(Fn::Hash, {Term::seq({normalize(m), normalize(key)})});
}
Term hashT(const Term& m) { return Term::app(Fn::Hash, {normalize(m)}); }
Term pubOf(const Term& key) { return Term::app(Fn::Pub, {normalize(key)}); }

Term decA(const Term& c, const Term& key) {
  return applyDestructor(Fn::DecA, {normalize(c), normalize(key)});
}
Term decS(const Term& c, const Term& key) {
  return applyDestructor(Fn::DecS, {normalize(c), normalize(key)});
}
Term checkSig(const Term& s, const Term& pubKey) {
  return applyDestructor(Fn::CheckSig, {normalize(s), normalize(pubKey)});
}
Term checkMac(const Term& m, const Term& key) {
  return applyDestructor(Fn::CheckMac, {normalize(m), normalize(key)});
}
Term extractMsg(const Term& t) {
  return applyDestructor(Fn::ExtractMsg, {normalize(t)});
}

// --- association maps --------------------------------------------------------

Term dict(std::initializer_list<std::pair<Term, Term>> kvs) {
  std::vector<Term> entries;
  entries.reserve(kvs.size());
  for (const auto& [k, v] : kvs) entries.push_back(Term::seq({k, v}));
  return Term::seq(std::move(entries));
}

Term dictGet(const Term& d, const Term& key) {
  if (!d.isSeq()) return nil();
  for (const Term& e : d.args())
    if (e.isSeq() && e.size() == 2 && e.at(1) == key) return e.at(2);
  return nil();
}

Term dictSet(const Term& d, const Term& key, const Term& value) {
  std::vector<Term> out;
  bool replaced = false;
  if (d.isSeq()) {
    for (const Term& e : d.args()) {
      if (!replaced && e.isSeq() && e.size() == 2 && e.at(1) == key) {
        out.push_back(Term::seq({key, value}));
        replaced = true;
      } else {
        out.push_back(e);
      }
    }
  }
  if (!replaced) out.push_back(Term::seq({key, value}));
  return Term::seq(std::move(out));
}

Term dictErase(const Term& d, const Term& key) {
  std::vector<Term> out;
  bool erased = false;
  if (d.isSeq()) {
    for (const Term& e : d.args()) {
      if (!erased && e.isSeq() && e.size() == 2 && e.at(1) == key) {
        erased = true;
        continue;
      }
      out.push_back(e);
    }
  }
  return Term::seq(std::move(out));
}

bool dictHas(const Term& d, const Term& key) {
  if (!d.isSeq()) return false;
  for (const Term& e : d.args())
    if (e.isSeq() && e.size() == 2 && e.at(1) == key) return true;
  return false;
}

}  // namespace fapisim
