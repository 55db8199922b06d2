#pragma once
// Helpers shared by the test programs: random problems and independent evaluators.

#include "probfp/expr.hpp"
#include "probfp/moments.hpp"
#include "probfp/polynomial.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace testsupport {

using namespace probfp;

inline Rational rnd_rational(std::mt19937_64& g, int lo, int hi, int den = 4) {
  std::uniform_int_distribution<int> d(lo * den, hi * den);
  return Rational(d(g), den);
}

// random law with a mix of sign classes
inline Distribution random_distribution(std::mt19937_64& g) {
  std::uniform_int_distribution<int> fam(0, 2), kind(0, 2);
  Rational a, b;
  switch (kind(g)) {
    case 0: a = rnd_rational(g, -3, -1); b = rnd_rational(g, 1, 3); break;   // spans 0
    case 1: a = rnd_rational(g, 0, 1); b = a + rnd_rational(g, 1, 3); break;  // nonneg
    default: b = rnd_rational(g, -1, 0); a = b - rnd_rational(g, 1, 3); break;
  }
  switch (fam(g)) {
    case 0: return make_uniform(a, b);
    case 1: return make_normal(a, b);
    default: return make_laplace(a, b, rnd_rational(g, 1, 2, 2));
  }
}

// division-free unless allow_const_div; at most max_ops rounded operations
inline Expr random_expr(std::mt19937_64& g, unsigned nvars, unsigned max_ops, bool allow_const_div = false) {
  std::function<Expr(unsigned)> gen = [&](unsigned budget) -> Expr {
    std::uniform_int_distribution<int> pick(0, 9);
    int r = pick(g);
    if (budget == 0 || r < 2) {
      if (r == 0) return Expr::constant(rnd_rational(g, 1, 3, 2));
      return Expr::variable(std::uniform_int_distribution<unsigned>(0, nvars - 1)(g));
    }
    if (r == 2) return Expr::neg(gen(budget - 1));
    unsigned left = std::uniform_int_distribution<unsigned>(0, budget - 1)(g);
    Expr l = gen(left);
    if (allow_const_div && r == 3) return Expr::binary(NodeKind::Div, l, Expr::constant(rnd_rational(g, 1, 4, 2)));
    static const NodeKind ops[] = {NodeKind::Add, NodeKind::Sub, NodeKind::Mul, NodeKind::Mul};
    return Expr::binary(ops[r % 4], l, gen(budget - 1 - left));
  };
  for (;;) {
    Expr e = gen(max_ops);
    if (count_rounded_ops(e) >= 1 && e.has_variables()) return e;
  }
}

inline ProblemSpec random_problem(std::mt19937_64& g, unsigned max_vars, unsigned max_ops) {
  ProblemSpec s;
  unsigned nv = std::uniform_int_distribution<unsigned>(1, max_vars)(g);
  for (unsigned i = 0; i < nv; ++i) s.variables.push_back({"x" + std::to_string(i + 1), random_distribution(g)});
  s.expr = random_expr(g, nv, max_ops);
  return s;
}

// exact evaluation; errors[key] supplies e/d values (key = 2*op + is_abs)
inline Rational eval_exact(const Expr& e, const std::vector<Rational>& x, const std::map<std::uint32_t, Rational>& errs = {}) {
  switch (e.kind()) {
    case NodeKind::Const: return e.value();
    case NodeKind::Var: return x.at(e.index());
    case NodeKind::RelErr:
    case NodeKind::AbsErr: {
      auto it = errs.find(symbol_key(e));
      return it == errs.end() ? Rational(0) : it->second;
    }
    case NodeKind::Neg: return -eval_exact(e.lhs(), x, errs);
    case NodeKind::Add: return eval_exact(e.lhs(), x, errs) + eval_exact(e.rhs(), x, errs);
    case NodeKind::Sub: return eval_exact(e.lhs(), x, errs) - eval_exact(e.rhs(), x, errs);
    case NodeKind::Mul: return eval_exact(e.lhs(), x, errs) * eval_exact(e.rhs(), x, errs);
    case NodeKind::Div: return eval_exact(e.lhs(), x, errs) / eval_exact(e.rhs(), x, errs);
  }
  return 0;
}

inline double eval_double(const Expr& e, const std::vector<double>& x) {
  switch (e.kind()) {
    case NodeKind::Const: return to_double(e.value());
    case NodeKind::Var: return x.at(e.index());
    case NodeKind::RelErr:
    case NodeKind::AbsErr: return 0;
    case NodeKind::Neg: return -eval_double(e.lhs(), x);
    case NodeKind::Add: return eval_double(e.lhs(), x) + eval_double(e.rhs(), x);
    case NodeKind::Sub: return eval_double(e.lhs(), x) - eval_double(e.rhs(), x);
    case NodeKind::Mul: return eval_double(e.lhs(), x) * eval_double(e.rhs(), x);
    case NodeKind::Div: return eval_double(e.lhs(), x) / eval_double(e.rhs(), x);
  }
  return 0;
}

// forward-mode derivative w.r.t. one error symbol, all error symbols at 0
struct Dual {
  Rational v, d;
};
inline Dual eval_dual(const Expr& e, const std::vector<Rational>& x, std::uint32_t key) {
  switch (e.kind()) {
    case NodeKind::Const: return {e.value(), 0};
    case NodeKind::Var: return {x.at(e.index()), 0};
    case NodeKind::RelErr:
    case NodeKind::AbsErr: return {0, symbol_key(e) == key ? 1 : 0};
    case NodeKind::Neg: {
      Dual a = eval_dual(e.lhs(), x, key);
      return {-a.v, -a.d};
    }
    default: break;
  }
  Dual a = eval_dual(e.lhs(), x, key), b = eval_dual(e.rhs(), x, key);
  switch (e.kind()) {
    case NodeKind::Add: return {a.v + b.v, a.d + b.d};
    case NodeKind::Sub: return {a.v - b.v, a.d - b.d};
    case NodeKind::Mul: return {a.v * b.v, a.d * b.v + a.v * b.d};
    default: return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
  }
}

// values of x, x+ and x- for a polynomial symbol
inline double symbol_value(Symbol s, const std::vector<double>& x) {
  double v = x.at(s.base());
  switch (s.tag()) {
    case Tag::Orig: return v;
    case Tag::Pos: return v > 0 ? v : 0;
    case Tag::Neg: return v < 0 ? -v : 0;
  }
  return v;
}

inline double eval_poly(const Polynomial& p, const std::vector<double>& x) {
  return evaluate<double>(p, [&](Symbol s) { return symbol_value(s, x); });
}

// sample uniformly from a law's support (not its distribution; for pointwise checks)
inline std::vector<double> random_point(std::mt19937_64& g, const std::vector<Distribution>& dists) {
  std::vector<double> x;
  for (const Distribution& d : dists) x.push_back(std::uniform_real_distribution<double>(d.a(), d.b())(g));
  return x;
}

// pre-truncation density of the family
inline double density(Family f, double sigma, double x) {
  switch (f) {
    case Family::Uniform: return 1.0;
    case Family::Normal: return std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI);
    case Family::Laplace: return std::exp(-std::fabs(x) / sigma) / (2 * sigma);
  }
  return 0;
}

// adaptive Gauss-Kronrod integral of g(x)*density over [lo,hi], split at 0
inline double integrate(const Distribution& d, double lo, double hi, const std::function<double(double)>& g) {
  const Family fam = d.family;
  const double sigma = d.sigma();
  auto f = [&](double x) { return g(x) * density(fam, sigma, x); };
  auto piece = [&](double a, double b) {
    if (!(b > a)) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 12, 1e-13);
  };
  if (lo < 0 && hi > 0) return piece(lo, 0) + piece(0, hi);
  return piece(lo, hi);
}

// quadrature reference for raw_moment: conditional moment on [lo,hi]; Pos/Neg k=0 give side probabilities
inline double quadrature_moment(const Distribution& d, Range r, Component c, int k) {
  double mass = integrate(d, r.lo, r.hi, [](double) { return 1.0; });
  auto pw = [k](double x) { return std::pow(x, k); };
  switch (c) {
    case Component::Orig: return integrate(d, r.lo, r.hi, pw) / mass;
    case Component::Pos: return integrate(d, std::max(r.lo, 0.0), std::max(r.hi, 0.0), pw) / mass;
    case Component::Neg:
      return integrate(d, std::min(r.lo, 0.0), std::min(r.hi, 0.0), [k](double x) { return std::pow(-x, k); }) / mass;
  }
  return 0;
}

}  // namespace testsupport
