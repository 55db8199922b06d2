#pragma once

#include "probfp/error.hpp"
#include "probfp/expr.hpp"
#include "probfp/rational.hpp"

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace probfp {

enum class Tag : std::uint8_t { Orig = 0, Pos = 1, Neg = 2 };

// Polynomial indeterminate: a decorated input variable, or an error symbol e_i / d_i.
// The packed code orders x's before e's before d's; for one input x: x < x+ < x-.
class Symbol {
 public:
  constexpr Symbol() noexcept : code_(0) {}
  static constexpr Symbol var(std::uint32_t id, Tag tag = Tag::Orig) noexcept {
    return Symbol((id << 2) | static_cast<std::uint32_t>(tag));
  }
  static constexpr Symbol rel_err(std::uint32_t op) noexcept { return Symbol((1u << 30) | op); }
  static constexpr Symbol abs_err(std::uint32_t op) noexcept { return Symbol((2u << 30) | op); }

  [[nodiscard]] constexpr bool is_var() const noexcept { return (code_ >> 30) == 0; }
  [[nodiscard]] constexpr bool is_rel_err() const noexcept { return (code_ >> 30) == 1; }
  [[nodiscard]] constexpr bool is_abs_err() const noexcept { return (code_ >> 30) == 2; }
  [[nodiscard]] constexpr bool is_error() const noexcept { return !is_var(); }
  // variable id, or operation index for error symbols
  [[nodiscard]] constexpr std::uint32_t base() const noexcept {
    return is_var() ? code_ >> 2 : code_ & ((1u << 30) - 1);
  }
  [[nodiscard]] constexpr Tag tag() const noexcept { return static_cast<Tag>(is_var() ? code_ & 3u : 0u); }
  [[nodiscard]] constexpr std::uint32_t code() const noexcept { return code_; }

  constexpr auto operator<=>(const Symbol&) const = default;

 private:
  constexpr explicit Symbol(std::uint32_t code) noexcept : code_(code) {}
  std::uint32_t code_;
};

struct Factor {
  Symbol sym;
  std::uint32_t exp;
  bool operator==(const Factor&) const = default;
};

using Monomial = std::vector<Factor>;  // sorted by symbol, exponents >= 1

[[nodiscard]] std::uint64_t degree(const Monomial& m) noexcept;
// graded lexicographic order; true when a ranks strictly above b
[[nodiscard]] bool grlex_greater(const Monomial& a, const Monomial& b) noexcept;
// product with exponent merging; nullopt when x+ meets x- (identically zero)
[[nodiscard]] std::optional<Monomial> multiply(const Monomial& a, const Monomial& b);

struct Term {
  Monomial mono;
  Rational coef;
  bool operator==(const Term&) const = default;
};

struct PolyLimits {
  std::size_t term_cap = 5'000'000;
  const Deadline* deadline = nullptr;
};

class Polynomial {
 public:
  Polynomial() = default;
  static Polynomial constant(const Rational& c);
  static Polynomial symbol(Symbol s);
  // merges duplicates, drops zeros, sorts
  static Polynomial from_terms(std::vector<Term> terms);

  [[nodiscard]] const std::vector<Term>& terms() const noexcept { return terms_; }
  [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }
  [[nodiscard]] bool is_zero() const noexcept { return terms_.empty(); }
  [[nodiscard]] bool is_constant() const noexcept { return terms_.empty() || (terms_.size() == 1 && terms_[0].mono.empty()); }
  [[nodiscard]] Rational constant_term() const;
  [[nodiscard]] std::uint64_t total_degree() const noexcept;
  [[nodiscard]] bool has_error_symbols() const noexcept;
  [[nodiscard]] std::uint32_t max_exponent() const noexcept;

  Polynomial operator-() const;
  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  [[nodiscard]] Polynomial scaled(const Rational& c) const;
  bool operator==(const Polynomial&) const = default;

 private:
  std::vector<Term> terms_;  // canonical: descending grlex
};

[[nodiscard]] Polynomial multiply(const Polynomial& a, const Polynomial& b, const PolyLimits& limits);
[[nodiscard]] Polynomial poly_pow(const Polynomial& p, unsigned n, const PolyLimits& limits = {});
// r with r*q == p exactly, or nullopt. Meant for polynomials without x+/x- factors.
[[nodiscard]] std::optional<Polynomial> poly_divide_exact(const Polynomial& p, const Polynomial& q);

// Division-free expansion (literal-constant denominators allowed).
[[nodiscard]] Polynomial expand(const Expr& e, const PolyLimits& limits = {});

struct RationalFunction {
  Polynomial num;
  Polynomial den;
};
// expansion of an arbitrary expression as num/den (not reduced)
[[nodiscard]] RationalFunction expand_rational(const Expr& e, const PolyLimits& limits = {});

// PN replacement step: odd powers of sign-spanning variables become
// (x+)^a - (x-)^a, odd powers of nonpositive ones -(x-)^a. signs is indexed by variable id.
[[nodiscard]] Polynomial pn_replace(const Polynomial& h, const std::vector<SignClass>& signs);
[[nodiscard]] std::pair<Polynomial, Polynomial> split_signs(const Polynomial& h);
[[nodiscard]] Polynomial pn_decompose(const std::vector<Polynomial>& hs, const std::vector<SignClass>& signs);

[[nodiscard]] std::string to_string(const Polynomial& p, const std::vector<std::string>& names);

template <class T, class ValueOf>
T evaluate(const Polynomial& p, ValueOf&& value_of) {
  T sum(0);
  for (const Term& t : p.terms()) {
    T prod = static_cast<T>(t.coef);
    for (const Factor& f : t.mono) {
      T v = value_of(f.sym);
      for (std::uint32_t i = 0; i < f.exp; ++i) prod *= v;
    }
    sum += prod;
  }
  return sum;
}

}  // namespace probfp
