#include "probfp/det_bound.hpp"

#include "probfp/error.hpp"

#include <algorithm>

namespace probfp {

Box Box::from_supports(const std::vector<Distribution>& dists, const Rational& eps, const Rational& delta) {
  Box b;
  b.eps = eps;
  b.delta = delta;
  b.vars.reserve(dists.size());
  for (const Distribution& d : dists) b.vars.push_back({d.lower, d.upper});
  return b;
}

Interval Box::of(Symbol s) const {
  if (s.is_rel_err()) return {-eps, eps};
  if (s.is_abs_err()) return {-delta, delta};
  if (s.base() >= vars.size()) throw Error(ErrorKind::Internal, "box lacks variable " + std::to_string(s.base()));
  const Interval& v = vars[s.base()];
  switch (s.tag()) {
    case Tag::Orig:
      return v;
    case Tag::Pos:
      return {std::max(v.lo, Rational(0)), std::max(v.hi, Rational(0))};
    case Tag::Neg:
      return {std::max(Rational(-v.hi), Rational(0)), std::max(Rational(-v.lo), Rational(0))};
  }
  return v;
}

Interval Box::of_key(std::uint32_t key) const {
  return (key & 1u) ? Interval{-delta, delta} : Interval{-eps, eps};
}

namespace {

Rational magnitude(const Interval& iv) { return std::max(abs(iv.lo), abs(iv.hi)); }

Interval add(const Interval& a, const Interval& b) { return {a.lo + b.lo, a.hi + b.hi}; }
Interval sub(const Interval& a, const Interval& b) { return {a.lo - b.hi, a.hi - b.lo}; }

Interval mul(const Interval& a, const Interval& b) {
  Rational c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
}

Interval div(const Interval& a, const Interval& b) {
  if (b.lo <= 0 && b.hi >= 0)
    throw Error(ErrorKind::Unsupported, "indeterminate denominator: enclosure [" + to_string(b.lo) + ", " +
                                            to_string(b.hi) + "] contains zero");
  return mul(a, Interval{1 / b.hi, 1 / b.lo});
}

Interval ipow(const Interval& a, unsigned k) {
  if (k == 0) return {1, 1};
  Rational lo = pow(a.lo, k), hi = pow(a.hi, k);
  if (k % 2 == 1) return {lo, hi};
  if (a.lo >= 0) return {lo, hi};
  if (a.hi <= 0) return {hi, lo};
  return {0, std::max(lo, hi)};
}

Interval leaf(const Expr& e, const Box& box) {
  switch (e.kind()) {
    case NodeKind::Const:
      return {e.value(), e.value()};
    case NodeKind::Var:
      return box.of(Symbol::var(e.index()));
    case NodeKind::RelErr:
      return {-box.eps, box.eps};
    default:
      return {-box.delta, box.delta};
  }
}

}  // namespace

Rational struct_bound_exact(const Expr& e, const Box& box) {
  switch (e.kind()) {
    case NodeKind::Const:
    case NodeKind::Var:
    case NodeKind::RelErr:
    case NodeKind::AbsErr:
      return magnitude(leaf(e, box));
    case NodeKind::Neg:
      return struct_bound_exact(e.child(), box);
    case NodeKind::Add:
    case NodeKind::Sub:
      return struct_bound_exact(e.lhs(), box) + struct_bound_exact(e.rhs(), box);
    case NodeKind::Mul:
      return struct_bound_exact(e.lhs(), box) * struct_bound_exact(e.rhs(), box);
    case NodeKind::Div:
      if (!e.rhs().is_const() || e.rhs().value() == 0)
        throw Error(ErrorKind::Unsupported, "structural bound needs constant denominators");
      return struct_bound_exact(e.lhs(), box) / abs(e.rhs().value());
  }
  return 0;
}

Rational struct_bound_exact(const Polynomial& p, const Box& box) {
  Rational sum = 0;
  for (const Term& t : p.terms()) {
    Rational prod = abs(t.coef);
    for (const Factor& f : t.mono) prod *= pow(magnitude(box.of(f.sym)), f.exp);
    sum += prod;
  }
  return sum;
}

double struct_bound(const Expr& e, const Box& box) { return to_double_up(struct_bound_exact(e, box)); }
double struct_bound(const Polynomial& p, const Box& box) { return to_double_up(struct_bound_exact(p, box)); }

Interval interval_eval_exact(const Expr& e, const Box& box) {
  switch (e.kind()) {
    case NodeKind::Const:
    case NodeKind::Var:
    case NodeKind::RelErr:
    case NodeKind::AbsErr:
      return leaf(e, box);
    case NodeKind::Neg: {
      Interval c = interval_eval_exact(e.child(), box);
      return {-c.hi, -c.lo};
    }
    case NodeKind::Add:
      return add(interval_eval_exact(e.lhs(), box), interval_eval_exact(e.rhs(), box));
    case NodeKind::Sub:
      return sub(interval_eval_exact(e.lhs(), box), interval_eval_exact(e.rhs(), box));
    case NodeKind::Mul:
      return mul(interval_eval_exact(e.lhs(), box), interval_eval_exact(e.rhs(), box));
    case NodeKind::Div:
      return div(interval_eval_exact(e.lhs(), box), interval_eval_exact(e.rhs(), box));
  }
  return {0, 0};
}

Interval interval_eval_exact(const Polynomial& p, const Box& box) {
  Interval sum{0, 0};
  for (const Term& t : p.terms()) {
    Interval prod{t.coef, t.coef};
    for (const Factor& f : t.mono) prod = mul(prod, ipow(box.of(f.sym), f.exp));
    sum = add(sum, prod);
  }
  return sum;
}

std::pair<double, double> interval_eval(const Expr& e, const Box& box) {
  Interval iv = interval_eval_exact(e, box);
  return {to_double_down(iv.lo), to_double_up(iv.hi)};
}

double second_order_bound(const RemainderForm& r, const Box& box) {
  if (r.exact) {
    Rational num = struct_bound_exact(r.numerator, box);
    if (num == 0) return 0;
    Rational den = 1;
    for (const auto& [factor, power] : r.denominator) {
      Interval iv = interval_eval_exact(factor, box);
      if (iv.lo <= 0 && iv.hi >= 0)
        throw Error(ErrorKind::Unsupported,
                    "indeterminate denominator: the remainder denominator may vanish over the input box");
      Rational m = iv.lo > 0 ? iv.lo : Rational(-iv.hi);
      den *= pow(m, power);
    }
    return to_double_up(num / den);
  }
  Rational sum = 0;
  for (const auto& piece : r.pieces) {
    Rational b = division_free(piece.expr) ? struct_bound_exact(piece.expr, box)
                                            : magnitude(interval_eval_exact(piece.expr, box));
    b *= piece.weight * magnitude(box.of_key(piece.key_i));
    if (piece.key_j != RemainderForm::none) b *= magnitude(box.of_key(piece.key_j));
    sum += b;
  }
  return to_double_up(sum);
}

}  // namespace probfp
