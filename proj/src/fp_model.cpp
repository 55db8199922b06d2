#include "probfp/fp_model.hpp"

#include "probfp/error.hpp"

#include <unordered_map>

namespace probfp {

namespace {

bool is_value(const Expr& e, int v) { return e.is_const() && e.value() == v; }

Expr transform(const Expr& e, std::uint32_t& counter) {
  switch (e.kind()) {
    case NodeKind::Neg:
      return Expr::neg(transform(e.child(), counter));
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div: {
      Expr l = transform(e.lhs(), counter);
      Expr r = transform(e.rhs(), counter);
      std::uint32_t i = ++counter;
      Expr op = Expr::binary(e.kind(), l, r);
      Expr scaled = Expr::binary(NodeKind::Mul, op, Expr::binary(NodeKind::Add, Expr::constant(1), Expr::rel_err(i)));
      return Expr::binary(NodeKind::Add, scaled, Expr::abs_err(i));
    }
    default:
      return e;
  }
}

}  // namespace

FpModel fp_transform(const Expr& e) {
  FpModel m;
  m.original = e;
  m.tilde = transform(e, m.ops);
  return m;
}

namespace build {

Expr add(const Expr& a, const Expr& b) {
  if (is_value(a, 0)) return b;
  if (is_value(b, 0)) return a;
  if (a.is_const() && b.is_const()) return Expr::constant(a.value() + b.value());
  return Expr::binary(NodeKind::Add, a, b);
}

Expr sub(const Expr& a, const Expr& b) {
  if (is_value(b, 0)) return a;
  if (is_value(a, 0)) return neg(b);
  if (a.is_const() && b.is_const()) return Expr::constant(a.value() - b.value());
  return Expr::binary(NodeKind::Sub, a, b);
}

Expr mul(const Expr& a, const Expr& b) {
  if (is_value(a, 0) || is_value(b, 0)) return Expr::constant(0);
  if (is_value(a, 1)) return b;
  if (is_value(b, 1)) return a;
  if (is_value(a, -1)) return neg(b);
  if (is_value(b, -1)) return neg(a);
  if (a.is_const() && b.is_const()) return Expr::constant(a.value() * b.value());
  return Expr::binary(NodeKind::Mul, a, b);
}

Expr div(const Expr& a, const Expr& b) {
  if (is_value(b, 0)) throw Error(ErrorKind::NonFinite, "symbolic division by zero");
  if (is_value(a, 0)) return Expr::constant(0);
  if (is_value(b, 1)) return a;
  if (a.is_const() && b.is_const()) return Expr::constant(a.value() / b.value());
  return Expr::binary(NodeKind::Div, a, b);
}

Expr neg(const Expr& a) {
  if (a.is_const()) return Expr::constant(-a.value());
  if (a.kind() == NodeKind::Neg) return a.child();
  return Expr::neg(a);
}

}  // namespace build

Expr differentiate(const Expr& e, std::uint32_t key) {
  static const Expr zero = Expr::constant(0);
  if (key < e.sym_lo() || key > e.sym_hi()) return zero;
  switch (e.kind()) {
    case NodeKind::RelErr:
    case NodeKind::AbsErr:
      return symbol_key(e) == key ? Expr::constant(1) : zero;
    case NodeKind::Neg:
      return build::neg(differentiate(e.child(), key));
    case NodeKind::Add:
      return build::add(differentiate(e.lhs(), key), differentiate(e.rhs(), key));
    case NodeKind::Sub:
      return build::sub(differentiate(e.lhs(), key), differentiate(e.rhs(), key));
    case NodeKind::Mul: {
      Expr dl = differentiate(e.lhs(), key);
      Expr dr = differentiate(e.rhs(), key);
      return build::add(build::mul(dl, e.rhs()), build::mul(e.lhs(), dr));
    }
    case NodeKind::Div: {
      Expr dl = differentiate(e.lhs(), key);
      Expr dr = differentiate(e.rhs(), key);
      Expr first = build::div(dl, e.rhs());
      if (is_value(dr, 0)) return first;
      return build::sub(first, build::div(build::mul(e.lhs(), dr), build::mul(e.rhs(), e.rhs())));
    }
    default:
      return zero;
  }
}

namespace {

Expr subst0(const Expr& e, std::unordered_map<const void*, Expr>& memo) {
  if (e.sym_lo() > e.sym_hi()) return e;  // no error symbols below
  if (auto it = memo.find(e.identity()); it != memo.end()) return it->second;
  Expr out;
  switch (e.kind()) {
    case NodeKind::RelErr:
    case NodeKind::AbsErr:
      out = Expr::constant(0);
      break;
    case NodeKind::Neg:
      out = build::neg(subst0(e.child(), memo));
      break;
    case NodeKind::Add:
      out = build::add(subst0(e.lhs(), memo), subst0(e.rhs(), memo));
      break;
    case NodeKind::Sub:
      out = build::sub(subst0(e.lhs(), memo), subst0(e.rhs(), memo));
      break;
    case NodeKind::Mul:
      out = build::mul(subst0(e.lhs(), memo), subst0(e.rhs(), memo));
      break;
    case NodeKind::Div:
      out = build::div(subst0(e.lhs(), memo), subst0(e.rhs(), memo));
      break;
    default:
      out = e;
  }
  memo.emplace(e.identity(), out);
  return out;
}

}  // namespace

Expr substitute_zero(const Expr& e) {
  std::unordered_map<const void*, Expr> memo;
  return subst0(e, memo);
}

std::vector<Expr> first_order_derivatives(const FpModel& m) {
  std::vector<Expr> hs;
  hs.reserve(m.ops);
  for (std::uint32_t i = 1; i <= m.ops; ++i) hs.push_back(substitute_zero(differentiate(m.tilde, 2 * i)));
  return hs;
}

std::vector<Polynomial> scaled_derivatives(const FpModel& m, const Expr& q, const PolyLimits& limits) {
  Polynomial qp = expand(q, limits);
  Polynomial q2 = multiply(qp, qp, limits);
  std::vector<Polynomial> out;
  for (const Expr& h : first_order_derivatives(m)) {
    RationalFunction rf = expand_rational(h, limits);
    auto g = poly_divide_exact(multiply(rf.num, q2, limits), rf.den);
    if (!g) throw Error(ErrorKind::Internal, "scaled derivative did not cancel its denominator");
    out.push_back(std::move(*g));
  }
  return out;
}

ReducedDerivatives reduce_common_factor(const std::vector<Polynomial>& hs, const Polynomial& q) {
  ReducedDerivatives r;
  r.power = 1;
  for (const Polynomial& h : hs) {
    auto d = poly_divide_exact(h, q);
    if (!d) return {hs, 2};
    r.hs.push_back(std::move(*d));
  }
  return r;
}

bool remainder_terms_ok(const Polynomial& numerator) {
  for (const Term& t : numerator.terms()) {
    std::uint64_t deg = 0;
    bool has_d = false;
    for (const Factor& f : t.mono) {
      if (f.sym.is_error()) deg += f.exp;
      if (f.sym.is_abs_err()) has_d = true;
    }
    if (!has_d && deg < 2) return false;
  }
  return true;
}

RemainderForm lagrange_remainder(const FpModel& m, const Deadline* deadline) {
  RemainderForm r;
  r.exact = false;
  const std::uint32_t k = m.ops;
  std::vector<std::uint32_t> keys;
  for (std::uint32_t i = 1; i <= k; ++i) {
    keys.push_back(2 * i);
    keys.push_back(2 * i + 1);
  }
  std::vector<Expr> grad;
  grad.reserve(keys.size());
  for (std::uint32_t key : keys) grad.push_back(differentiate(m.tilde, key));
  for (std::size_t a = 0; a < keys.size(); ++a) {
    if (deadline) deadline->check();
    if (keys[a] & 1u) {
      Expr g = substitute_zero(grad[a]);
      if (!is_value(g, 0)) r.pieces.push_back({g, keys[a], RemainderForm::none, 1});
    }
    for (std::size_t b = a; b < keys.size(); ++b) {
      Expr h = differentiate(grad[a], keys[b]);
      if (is_value(h, 0)) continue;
      r.pieces.push_back({h, keys[a], keys[b], a == b ? Rational(1, 2) : Rational(1)});
    }
  }
  return r;
}

RemainderForm remainder(const FpModel& m, const std::vector<Expr>& derivs, const RemainderOptions& opts) {
  RemainderForm r;
  if (m.ops == 0) return r;
  PolyLimits lim{opts.exact_term_cap, opts.deadline};
  StructuralForm form = classify(m.original);
  try {
    if (form.kind == StructuralForm::Kind::DivisionFree) {
      Polynomial num = expand(m.tilde, lim) - expand(m.original, lim);
      for (std::size_t i = 0; i < derivs.size(); ++i)
        num = num - expand(derivs[i], lim) * Polynomial::symbol(Symbol::rel_err(static_cast<std::uint32_t>(i + 1)));
      r.numerator = std::move(num);
    } else if (form.kind == StructuralForm::Kind::TopFraction) {
      // tilde = (Ntil / Qtil) * (1 + e_k) + d_k
      const Expr& quotient = m.tilde.lhs().lhs();
      Polynomial ntil = expand(quotient.lhs(), lim);
      Polynomial qtil = expand(quotient.rhs(), lim);
      Polynomial n = expand(form.numerator, lim);
      Polynomial q = expand(form.denominator, lim);
      std::vector<Polynomial> gs = scaled_derivatives(m, form.denominator, lim);
      unsigned power = 2;
      if (!opts.force_q2) {
        auto red = reduce_common_factor(gs, q);
        gs = std::move(red.hs);
        power = red.power;
      }
      Polynomial qpow = poly_pow(q, power, lim);
      Polynomial ek = Polynomial::symbol(Symbol::rel_err(m.ops));
      Polynomial dk = Polynomial::symbol(Symbol::abs_err(m.ops));
      Polynomial num = multiply(multiply(ntil, Polynomial::constant(1) + ek, lim), qpow, lim);
      num = num + multiply(multiply(dk, qtil, lim), qpow, lim);
      num = num - multiply(multiply(n, qtil, lim), poly_pow(q, power - 1, lim), lim);
      for (std::size_t i = 0; i < gs.size(); ++i) {
        Polynomial ei = Polynomial::symbol(Symbol::rel_err(static_cast<std::uint32_t>(i + 1)));
        num = num - multiply(multiply(gs[i], ei, lim), qtil, lim);
      }
      r.numerator = std::move(num);
      r.denominator = {{quotient.rhs(), 1u}, {form.denominator, power}};
    } else {
      throw Error(ErrorKind::Unsupported, "remainder of an unsupported expression: " + form.reason);
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Resource) throw;
    return lagrange_remainder(m, opts.deadline);
  }
  if (!remainder_terms_ok(r.numerator))
    throw Error(ErrorKind::Internal, "remainder kept a zeroth- or first-order error term");
  return r;
}

}  // namespace probfp
