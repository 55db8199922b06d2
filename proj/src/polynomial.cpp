#include "probfp/polynomial.hpp"

#include <algorithm>
#include <unordered_map>

namespace probfp {

std::uint64_t degree(const Monomial& m) noexcept {
  std::uint64_t d = 0;
  for (const Factor& f : m) d += f.exp;
  return d;
}

bool grlex_greater(const Monomial& a, const Monomial& b) noexcept {
  std::uint64_t da = degree(a), db = degree(b);
  if (da != db) return da > db;
  std::size_t i = 0;
  for (; i < a.size() && i < b.size(); ++i) {
    if (a[i].sym != b[i].sym) return a[i].sym < b[i].sym;  // a has a variable b lacks
    if (a[i].exp != b[i].exp) return a[i].exp > b[i].exp;
  }
  return a.size() > b.size();
}

namespace {

bool conflicting(const Factor& x, const Factor& y) {
  return x.sym.is_var() && y.sym.is_var() && x.sym.base() == y.sym.base() &&
         ((x.sym.tag() == Tag::Pos && y.sym.tag() == Tag::Neg) || (x.sym.tag() == Tag::Neg && y.sym.tag() == Tag::Pos));
}

struct MonoHash {
  std::size_t operator()(const Monomial& m) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (const Factor& f : m) {
      h ^= (static_cast<std::uint64_t>(f.sym.code()) << 20) ^ f.exp;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

struct TermOrder {
  bool operator()(const Term& a, const Term& b) const noexcept { return grlex_greater(a.mono, b.mono); }
};

[[noreturn]] void too_many_terms(std::size_t cap) {
  throw Error(ErrorKind::Resource, "polynomial exceeds the term cap of " + std::to_string(cap) +
                                       " terms; try a lower analysis order");
}

}  // namespace

std::optional<Monomial> multiply(const Monomial& a, const Monomial& b) {
  Monomial out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    Factor next;
    if (j == b.size() || (i < a.size() && a[i].sym < b[j].sym)) {
      next = a[i++];
    } else if (i == a.size() || b[j].sym < a[i].sym) {
      next = b[j++];
    } else {
      next = {a[i].sym, a[i].exp + b[j].exp};
      ++i;
      ++j;
    }
    if (!out.empty() && conflicting(out.back(), next)) return std::nullopt;
    out.push_back(next);
  }
  return out;
}

Polynomial Polynomial::constant(const Rational& c) {
  Polynomial p;
  if (c != 0) p.terms_.push_back({{}, c});
  return p;
}

Polynomial Polynomial::symbol(Symbol s) {
  Polynomial p;
  p.terms_.push_back({{{s, 1}}, 1});
  return p;
}

Polynomial Polynomial::from_terms(std::vector<Term> terms) {
  std::sort(terms.begin(), terms.end(), TermOrder{});
  Polynomial p;
  for (Term& t : terms) {
    if (!p.terms_.empty() && p.terms_.back().mono == t.mono) {
      p.terms_.back().coef += t.coef;
      if (p.terms_.back().coef == 0) p.terms_.pop_back();
    } else if (t.coef != 0) {
      p.terms_.push_back(std::move(t));
    }
  }
  return p;
}

Rational Polynomial::constant_term() const {
  if (!terms_.empty() && terms_.back().mono.empty()) return terms_.back().coef;
  return 0;
}

std::uint64_t Polynomial::total_degree() const noexcept { return terms_.empty() ? 0 : degree(terms_.front().mono); }

bool Polynomial::has_error_symbols() const noexcept {
  for (const Term& t : terms_)
    for (const Factor& f : t.mono)
      if (f.sym.is_error()) return true;
  return false;
}

std::uint32_t Polynomial::max_exponent() const noexcept {
  std::uint32_t m = 0;
  for (const Term& t : terms_)
    for (const Factor& f : t.mono) m = std::max(m, f.exp);
  return m;
}

Polynomial Polynomial::operator-() const {
  Polynomial p = *this;
  for (Term& t : p.terms_) t.coef = -t.coef;
  return p;
}

Polynomial Polynomial::scaled(const Rational& c) const {
  if (c == 0) return {};
  Polynomial p = *this;
  for (Term& t : p.terms_) t.coef *= c;
  return p;
}

namespace {

Polynomial merge(const Polynomial& a, const Polynomial& b, bool subtract) {
  std::vector<Term> out;
  out.reserve(a.size() + b.size());
  auto ia = a.terms().begin(), ib = b.terms().begin();
  auto push_b = [&](const Term& t) {
    out.push_back(t);
    if (subtract) out.back().coef = -out.back().coef;
  };
  while (ia != a.terms().end() || ib != b.terms().end()) {
    if (ib == b.terms().end() || (ia != a.terms().end() && grlex_greater(ia->mono, ib->mono))) {
      out.push_back(*ia++);
    } else if (ia == a.terms().end() || grlex_greater(ib->mono, ia->mono)) {
      push_b(*ib++);
    } else {
      Rational c = subtract ? Rational(ia->coef - ib->coef) : Rational(ia->coef + ib->coef);
      if (c != 0) out.push_back({ia->mono, std::move(c)});
      ++ia;
      ++ib;
    }
  }
  // already canonical
  return Polynomial::from_terms(std::move(out));
}

}  // namespace

Polynomial operator+(const Polynomial& a, const Polynomial& b) { return merge(a, b, false); }
Polynomial operator-(const Polynomial& a, const Polynomial& b) { return merge(a, b, true); }
Polynomial operator*(const Polynomial& a, const Polynomial& b) { return multiply(a, b, PolyLimits{}); }

Polynomial multiply(const Polynomial& a, const Polynomial& b, const PolyLimits& limits) {
  if (a.is_zero() || b.is_zero()) return {};
  std::unordered_map<Monomial, Rational, MonoHash> acc;
  acc.reserve(std::min<std::size_t>(a.size() * b.size(), limits.term_cap) + 1);
  std::size_t tick = 0;
  for (const Term& ta : a.terms()) {
    for (const Term& tb : b.terms()) {
      if ((++tick & 0xfff) == 0 && limits.deadline) limits.deadline->check();
      auto m = multiply(ta.mono, tb.mono);
      if (!m) continue;
      auto [it, inserted] = acc.try_emplace(std::move(*m));
      if (inserted) {
        it->second = ta.coef * tb.coef;
        if (acc.size() > limits.term_cap) too_many_terms(limits.term_cap);
      } else {
        it->second += ta.coef * tb.coef;
      }
    }
  }
  std::vector<Term> terms;
  terms.reserve(acc.size());
  for (auto& [mono, coef] : acc)
    if (coef != 0) terms.push_back({mono, std::move(coef)});
  return Polynomial::from_terms(std::move(terms));
}

Polynomial poly_pow(const Polynomial& p, unsigned n, const PolyLimits& limits) {
  if (n == 0) return Polynomial::constant(1);
  Polynomial r = p;
  for (unsigned i = 1; i < n; ++i) r = multiply(r, p, limits);
  return r;
}

std::optional<Polynomial> poly_divide_exact(const Polynomial& p, const Polynomial& q) {
  if (q.is_zero()) throw Error(ErrorKind::Internal, "division by the zero polynomial");
  const Term& lead = q.terms().front();
  std::vector<Term> quotient;
  Polynomial rem = p;
  while (!rem.is_zero()) {
    const Term& lt = rem.terms().front();
    // monomial quotient lt / lead
    Monomial m;
    std::size_t j = 0;
    for (const Factor& f : lt.mono) {
      if (j < lead.mono.size() && lead.mono[j].sym == f.sym) {
        if (lead.mono[j].exp > f.exp) return std::nullopt;
        if (f.exp > lead.mono[j].exp) m.push_back({f.sym, f.exp - lead.mono[j].exp});
        ++j;
      } else if (j < lead.mono.size() && lead.mono[j].sym < f.sym) {
        return std::nullopt;
      } else {
        m.push_back(f);
      }
    }
    if (j != lead.mono.size()) return std::nullopt;
    Term t{std::move(m), lt.coef / lead.coef};
    Polynomial step = Polynomial::from_terms({t});
    quotient.push_back(std::move(t));
    rem = rem - step * q;
  }
  return Polynomial::from_terms(std::move(quotient));
}

Polynomial expand(const Expr& e, const PolyLimits& limits) {
  switch (e.kind()) {
    case NodeKind::Const:
      return Polynomial::constant(e.value());
    case NodeKind::Var:
      return Polynomial::symbol(Symbol::var(e.index()));
    case NodeKind::RelErr:
      return Polynomial::symbol(Symbol::rel_err(e.index()));
    case NodeKind::AbsErr:
      return Polynomial::symbol(Symbol::abs_err(e.index()));
    case NodeKind::Neg:
      return -expand(e.child(), limits);
    case NodeKind::Add:
      return expand(e.lhs(), limits) + expand(e.rhs(), limits);
    case NodeKind::Sub:
      return expand(e.lhs(), limits) - expand(e.rhs(), limits);
    case NodeKind::Mul: {
      Polynomial r = multiply(expand(e.lhs(), limits), expand(e.rhs(), limits), limits);
      if (r.size() > limits.term_cap) too_many_terms(limits.term_cap);
      return r;
    }
    case NodeKind::Div: {
      Polynomial den = expand(e.rhs(), limits);
      if (!den.is_constant() || den.is_zero())
        throw Error(ErrorKind::Internal, "polynomial expansion met a non-constant division");
      return expand(e.lhs(), limits).scaled(1 / den.constant_term());
    }
  }
  return {};
}

namespace {

RationalFunction normalize(RationalFunction f) {
  if (f.den.is_constant()) {
    f.num = f.num.scaled(1 / f.den.constant_term());
    f.den = Polynomial::constant(1);
  }
  return f;
}

}  // namespace

RationalFunction expand_rational(const Expr& e, const PolyLimits& limits) {
  const Polynomial one = Polynomial::constant(1);
  switch (e.kind()) {
    case NodeKind::Const:
    case NodeKind::Var:
    case NodeKind::RelErr:
    case NodeKind::AbsErr:
      return {expand(e, limits), one};
    case NodeKind::Neg: {
      RationalFunction c = expand_rational(e.child(), limits);
      return {-c.num, c.den};
    }
    case NodeKind::Add:
    case NodeKind::Sub: {
      RationalFunction a = expand_rational(e.lhs(), limits);
      RationalFunction b = expand_rational(e.rhs(), limits);
      bool sub = e.kind() == NodeKind::Sub;
      if (a.den == b.den) return {sub ? a.num - b.num : a.num + b.num, a.den};
      Polynomial l = multiply(a.num, b.den, limits);
      Polynomial r = multiply(b.num, a.den, limits);
      return normalize({sub ? l - r : l + r, multiply(a.den, b.den, limits)});
    }
    case NodeKind::Mul: {
      RationalFunction a = expand_rational(e.lhs(), limits);
      RationalFunction b = expand_rational(e.rhs(), limits);
      return normalize({multiply(a.num, b.num, limits), multiply(a.den, b.den, limits)});
    }
    case NodeKind::Div: {
      RationalFunction a = expand_rational(e.lhs(), limits);
      RationalFunction b = expand_rational(e.rhs(), limits);
      if (b.num.is_zero()) throw Error(ErrorKind::NonFinite, "division by an identically zero expression");
      return normalize({multiply(a.num, b.den, limits), multiply(a.den, b.num, limits)});
    }
  }
  return {};
}

Polynomial pn_replace(const Polynomial& h, const std::vector<SignClass>& signs) {
  Polynomial out;
  for (const Term& t : h.terms()) {
    Monomial kept;
    Polynomial tp = Polynomial::constant(t.coef);
    for (const Factor& f : t.mono) {
      if (!f.sym.is_var() || f.sym.tag() != Tag::Orig || f.exp % 2 == 0) {
        kept.push_back(f);
        continue;
      }
      SignClass s = f.sym.base() < signs.size() ? signs[f.sym.base()] : SignClass::Spans;
      Polynomial pos = Polynomial::from_terms({{{{Symbol::var(f.sym.base(), Tag::Pos), f.exp}}, 1}});
      Polynomial neg = Polynomial::from_terms({{{{Symbol::var(f.sym.base(), Tag::Neg), f.exp}}, 1}});
      switch (s) {
        case SignClass::NonNeg:
          kept.push_back(f);
          break;
        case SignClass::NonPos:
          tp = tp * -neg;
          break;
        case SignClass::Spans:
          tp = tp * (pos - neg);
          break;
      }
    }
    out = out + tp * Polynomial::from_terms({{kept, 1}});
  }
  return out;
}

std::pair<Polynomial, Polynomial> split_signs(const Polynomial& h) {
  std::vector<Term> plus, minus;
  for (const Term& t : h.terms()) {
    if (t.coef > 0) plus.push_back(t);
    else minus.push_back({t.mono, -t.coef});
  }
  return {Polynomial::from_terms(std::move(plus)), Polynomial::from_terms(std::move(minus))};
}

Polynomial pn_decompose(const std::vector<Polynomial>& hs, const std::vector<SignClass>& signs) {
  Polynomial p;
  for (const Polynomial& h : hs) {
    auto [plus, minus] = split_signs(pn_replace(h, signs));
    p = p + plus + minus;
  }
  return p;
}

std::string to_string(const Polynomial& p, const std::vector<std::string>& names) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const Term& t : p.terms()) {
    Rational c = t.coef;
    if (first) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    first = false;
    c = abs(c);
    bool wrote = false;
    if (c != 1 || t.mono.empty()) {
      out += to_string(c);
      wrote = true;
    }
    for (const Factor& f : t.mono) {
      if (wrote) out += "*";
      wrote = true;
      std::uint32_t b = f.sym.base();
      if (f.sym.is_rel_err()) {
        out += "e" + std::to_string(b);
      } else if (f.sym.is_abs_err()) {
        out += "d" + std::to_string(b);
      } else {
        out += b < names.size() ? names[b] : "x" + std::to_string(b);
        if (f.sym.tag() == Tag::Pos) out += "⁺";
        if (f.sym.tag() == Tag::Neg) out += "⁻";
      }
      if (f.exp != 1) out += "^" + std::to_string(f.exp);
    }
  }
  return out;
}

}  // namespace probfp
