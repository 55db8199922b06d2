#pragma once

#include "probfp/expr.hpp"
#include "probfp/fp_model.hpp"
#include "probfp/polynomial.hpp"

#include <utility>
#include <vector>

namespace probfp {

struct Interval {
  Rational lo;
  Rational hi;
};

struct Box {
  std::vector<Interval> vars;  // indexed by variable id
  Rational eps;
  Rational delta;

  static Box from_supports(const std::vector<Distribution>& dists, const Rational& eps, const Rational& delta);
  [[nodiscard]] Interval of(Symbol s) const;
  [[nodiscard]] Interval of_key(std::uint32_t key) const;  // error-symbol key
};

// Structural magnitude bound: |c|, max(|a|,|b|), sums and products of bounds.
[[nodiscard]] Rational struct_bound_exact(const Expr& e, const Box& box);
[[nodiscard]] Rational struct_bound_exact(const Polynomial& p, const Box& box);
[[nodiscard]] double struct_bound(const Expr& e, const Box& box);
[[nodiscard]] double struct_bound(const Polynomial& p, const Box& box);

// Naive interval enclosure. Throws Error(Unsupported, "indeterminate denominator ...")
// when a denominator enclosure contains zero.
[[nodiscard]] Interval interval_eval_exact(const Expr& e, const Box& box);
[[nodiscard]] Interval interval_eval_exact(const Polynomial& p, const Box& box);
[[nodiscard]] std::pair<double, double> interval_eval(const Expr& e, const Box& box);

[[nodiscard]] double second_order_bound(const RemainderForm& r, const Box& box);

}  // namespace probfp
