#pragma once

#include "probfp/expr.hpp"
#include "probfp/polynomial.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace probfp {

struct FpModel {
  Expr original;
  Expr tilde;              // every rounded op replaced by op*(1+e_i)+d_i
  std::uint32_t ops = 0;   // k
};

[[nodiscard]] FpModel fp_transform(const Expr& e);

// simplifying constructors used for derived expressions (exact real arithmetic)
namespace build {
[[nodiscard]] Expr add(const Expr& a, const Expr& b);
[[nodiscard]] Expr sub(const Expr& a, const Expr& b);
[[nodiscard]] Expr mul(const Expr& a, const Expr& b);
[[nodiscard]] Expr div(const Expr& a, const Expr& b);
[[nodiscard]] Expr neg(const Expr& a);
}  // namespace build

// d/dy where y is the error symbol with the given key (2*op for e, 2*op+1 for d)
[[nodiscard]] Expr differentiate(const Expr& e, std::uint32_t key);
// e = d = 0, folded
[[nodiscard]] Expr substitute_zero(const Expr& e);

[[nodiscard]] std::vector<Expr> first_order_derivatives(const FpModel& m);

// h_i * Q^2 as polynomials (top-level fraction only)
[[nodiscard]] std::vector<Polynomial> scaled_derivatives(const FpModel& m, const Expr& q,
                                                         const PolyLimits& limits = {});

struct ReducedDerivatives {
  std::vector<Polynomial> hs;
  unsigned power = 2;
};
[[nodiscard]] ReducedDerivatives reduce_common_factor(const std::vector<Polynomial>& hs, const Polynomial& q);

struct RemainderForm {
  // exact residual numerator / prod(factor^power); the denominator list is empty when it is 1
  bool exact = true;
  Polynomial numerator;
  std::vector<std::pair<Expr, unsigned>> denominator;

  // Fallback when expansion is too large: second-order Lagrange pieces.
  // Each piece contributes weight * max|expr| * |y_i| * |y_j| (key_j == none: gradient piece).
  struct Piece {
    Expr expr;
    std::uint32_t key_i = 0;
    std::uint32_t key_j = 0;
    Rational weight = 1;
  };
  static constexpr std::uint32_t none = UINT32_MAX;
  std::vector<Piece> pieces;
};

struct RemainderOptions {
  std::size_t exact_term_cap = 200'000;  // beyond this the Lagrange form is used
  bool force_q2 = false;                 // fractional case: keep Q^2
  const Deadline* deadline = nullptr;
};

// R2 = f~ - f - sum h_i e_i
[[nodiscard]] RemainderForm remainder(const FpModel& m, const std::vector<Expr>& derivs,
                                      const RemainderOptions& opts = {});
[[nodiscard]] RemainderForm lagrange_remainder(const FpModel& m, const Deadline* deadline = nullptr);

// every numerator term has a d factor or (e,d)-degree >= 2
[[nodiscard]] bool remainder_terms_ok(const Polynomial& numerator);

}  // namespace probfp
