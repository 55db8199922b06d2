#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <string>
#include <string_view>

namespace probfp {

using Rational = boost::multiprecision::mpq_rational;
using Integer = boost::multiprecision::mpz_int;

// Decimal ("0.1", "3e-5") or hexadecimal-float ("0x1.8p-3") literal, parsed exactly.
// Leading sign allowed. Throws Error(Parse) on malformed text.
[[nodiscard]] Rational parse_rational(std::string_view text);

[[nodiscard]] Rational from_double(double x);

// directed conversions; results below the subnormal range round to +-denorm_min
[[nodiscard]] double to_double_up(const Rational& q);
[[nodiscard]] double to_double_down(const Rational& q);
[[nodiscard]] double to_double(const Rational& q);  // nearest

[[nodiscard]] Rational pow(const Rational& base, unsigned e);
[[nodiscard]] Rational abs(const Rational& q);

// exact decimal when the denominator is 2^a 5^b, otherwise "p/q"
[[nodiscard]] std::string to_string(const Rational& q);
[[nodiscard]] bool is_terminating(const Rational& q);

// x * y rounded upward, for nonnegative x
[[nodiscard]] double mul_up(double x, const Rational& y);

}  // namespace probfp
