#include "probfp/rational.hpp"

#include "probfp/error.hpp"

#include <gmp.h>

#include <bit>
#include <cctype>
#include <cstdint>
#include <cmath>
#include <limits>

namespace probfp {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

[[noreturn]] void bad_literal(std::string_view text) {
  throw Error(ErrorKind::Parse, "malformed numeric literal '" + std::string(text) + "'");
}

long parse_exponent(std::string_view s, std::size_t& i, std::string_view whole) {
  bool neg = false;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) neg = s[i++] == '-';
  if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i]))) bad_literal(whole);
  long e = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    e = e * 10 + (s[i++] - '0');
    if (e > 100000) throw Error(ErrorKind::Parse, "exponent out of range in '" + std::string(whole) + "'");
  }
  return neg ? -e : e;
}

Rational scale_pow(const Integer& mant, unsigned base, long e) {
  Integer p = boost::multiprecision::pow(Integer(base), static_cast<unsigned>(e < 0 ? -e : e));
  if (e >= 0) return Rational(mant * p);
  return Rational(mant, p);
}

}  // namespace

Rational parse_rational(std::string_view text) {
  std::size_t i = 0;
  bool neg = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) neg = text[i++] == '-';
  std::string_view s = text;
  Integer mant = 0;
  int digits = 0;
  Rational out;
  if (i + 1 < s.size() && s[i] == '0' && (s[i + 1] == 'x' || s[i + 1] == 'X')) {
    i += 2;
    long frac = 0;
    bool dot = false;
    for (; i < s.size(); ++i) {
      if (s[i] == '.' && !dot) {
        dot = true;
        continue;
      }
      int v = hex_value(s[i]);
      if (v < 0) break;
      mant = mant * 16 + v;
      ++digits;
      if (dot) ++frac;
    }
    if (digits == 0) bad_literal(text);
    long e = 0;
    if (i < s.size() && (s[i] == 'p' || s[i] == 'P')) {
      ++i;
      e = parse_exponent(s, i, text);
    }
    out = scale_pow(mant, 2, e - 4 * frac);
  } else {
    long frac = 0;
    bool dot = false;
    for (; i < s.size(); ++i) {
      if (s[i] == '.' && !dot) {
        dot = true;
        continue;
      }
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) break;
      mant = mant * 10 + (s[i] - '0');
      ++digits;
      if (dot) ++frac;
    }
    if (digits == 0) bad_literal(text);
    long e = 0;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
      ++i;
      e = parse_exponent(s, i, text);
    }
    out = scale_pow(mant, 10, e - frac);
  }
  if (i != s.size()) bad_literal(text);
  return neg ? Rational(-out) : out;
}

Rational from_double(double x) {
  if (!std::isfinite(x)) throw Error(ErrorKind::NonFinite, "non-finite value cannot become a rational");
  return Rational(x);
}

namespace {

// truncation toward zero, as mpq_get_d does
double trunc_double(const Rational& q) { return mpq_get_d(q.backend().data()); }

}  // namespace

double to_double_up(const Rational& q) {
  double d = trunc_double(q);
  if (std::isinf(d)) return d > 0 ? d : -std::numeric_limits<double>::max();
  if (Rational(d) < q) d = std::nextafter(d, std::numeric_limits<double>::infinity());
  return d;
}

double to_double_down(const Rational& q) {
  double d = trunc_double(q);
  if (std::isinf(d)) return d < 0 ? d : std::numeric_limits<double>::max();
  if (Rational(d) > q) d = std::nextafter(d, -std::numeric_limits<double>::infinity());
  return d;
}

double to_double(const Rational& q) {
  double lo = to_double_down(q);
  double hi = to_double_up(q);
  if (lo == hi) return lo;
  Rational dl = q - Rational(lo);
  Rational dh = Rational(hi) - q;
  if (dl < dh) return lo;
  if (dh < dl) return hi;
  // tie: even significand
  return (std::bit_cast<std::uint64_t>(lo) & 1u) == 0 ? lo : hi;
}

Rational pow(const Rational& base, unsigned e) {
  Rational r = 1;
  Rational b = base;
  while (e) {
    if (e & 1u) r *= b;
    e >>= 1;
    if (e) b *= b;
  }
  return r;
}

Rational abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

bool is_terminating(const Rational& q) {
  Integer d = boost::multiprecision::denominator(q);
  while (d % 2 == 0) d /= 2;
  while (d % 5 == 0) d /= 5;
  return d == 1;
}

std::string to_string(const Rational& q) {
  Integer num = boost::multiprecision::numerator(q);
  Integer den = boost::multiprecision::denominator(q);
  if (den == 1) return num.str();
  if (!is_terminating(q)) return num.str() + "/" + den.str();
  // scale to an integer over a power of ten
  unsigned twos = 0, fives = 0;
  Integer d = den;
  while (d % 2 == 0) { d /= 2; ++twos; }
  while (d % 5 == 0) { d /= 5; ++fives; }
  unsigned places = std::max(twos, fives);
  Integer scaled = num * boost::multiprecision::pow(Integer(10), places) / den;
  bool neg = scaled < 0;
  if (neg) scaled = -scaled;
  std::string digits = scaled.str();
  if (digits.size() <= places) digits.insert(0, places + 1 - digits.size(), '0');
  digits.insert(digits.size() - places, ".");
  return neg ? "-" + digits : digits;
}

double mul_up(double x, const Rational& y) { return to_double_up(from_double(x) * y); }

}  // namespace probfp
