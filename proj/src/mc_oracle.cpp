#include "probfp/mc_oracle.hpp"

#include "probfp/error.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <functional>

namespace probfp {

Format format_for(const Rational& eps) {
  if (eps == pow(Rational(1, 2), 24)) return Format::Binary32;
  if (eps == pow(Rational(1, 2), 53)) return Format::Binary64;
  throw Error(ErrorKind::Validation, "sampling needs single (eps=2^-24) or double (eps=2^-53) precision");
}

double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
}

namespace {

double to_format(double x, Format f) { return f == Format::Binary32 ? static_cast<double>(static_cast<float>(x)) : x; }

double sample_normal(double a, double b, double u) {
  static const boost::math::normal_distribution<double> nd;
  using boost::math::cdf;
  using boost::math::complement;
  using boost::math::quantile;
  if (a >= 0) {
    // upper tail: work with survival probabilities to keep precision
    double sa = cdf(complement(nd, a)), sb = cdf(complement(nd, b));
    double s = sa - u * (sa - sb);
    return quantile(complement(nd, s));
  }
  double pa = cdf(nd, a), pb = cdf(nd, b);
  return quantile(nd, pa + u * (pb - pa));
}

double sample_laplace(double a, double b, double s, double u) {
  auto F = [s](double x) { return x <= 0 ? 0.5 * std::exp(x / s) : 1 - 0.5 * std::exp(-x / s); };
  if (a >= 0) {
    double sa = 0.5 * std::exp(-a / s), sb = 0.5 * std::exp(-b / s);
    return -s * std::log(2 * (sa - u * (sa - sb)));
  }
  double p = F(a) + u * (F(b) - F(a));
  return p <= 0.5 ? s * std::log(2 * p) : -s * std::log(2 * (1 - p));
}

// double-double
struct DD {
  double hi, lo;
};
DD two_sum(double a, double b) {
  double s = a + b, bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}
DD quick(double a, double b) {
  double s = a + b;
  return {s, b - (s - a)};
}
DD dd_add(DD a, DD b) {
  DD s = two_sum(a.hi, b.hi), t = two_sum(a.lo, b.lo);
  s.lo += t.hi;
  s = quick(s.hi, s.lo);
  s.lo += t.lo;
  return quick(s.hi, s.lo);
}
DD dd_neg(DD a) { return {-a.hi, -a.lo}; }
DD dd_mul(DD a, DD b) {
  double p = a.hi * b.hi;
  double e = std::fma(a.hi, b.hi, -p);
  e += a.hi * b.lo + a.lo * b.hi;
  return quick(p, e);
}
DD dd_div(DD a, DD b) {
  double q1 = a.hi / b.hi;
  DD r = dd_add(a, dd_neg(dd_mul(b, {q1, 0})));
  double q2 = r.hi / b.hi;
  r = dd_add(r, dd_neg(dd_mul(b, {q2, 0})));
  double q3 = r.hi / b.hi;
  DD q = quick(q1, q2);
  return dd_add(q, {q3, 0});
}

// binary32 value nearest to q, rounded once from the exact value
double nearest_float(const Rational& q) {
  float f = static_cast<float>(to_double(q));
  float best = f;
  Rational bd = abs(q - from_double(f));
  for (float c : {std::nextafter(f, -INFINITY), std::nextafter(f, INFINITY)}) {
    if (!std::isfinite(c)) continue;
    Rational d = abs(q - from_double(c));
    if (d < bd) {
      bd = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

double sample(const Distribution& d, Rng& rng) {
  double u = uniform_open01(rng);
  double a = d.a(), b = d.b(), x = 0;
  switch (d.family) {
    case Family::Uniform: x = a + (b - a) * u; break;
    case Family::Normal: x = sample_normal(a, b, u); break;
    case Family::Laplace: x = sample_laplace(a, b, d.sigma(), u); break;
  }
  return std::clamp(x, a, b);
}

Program::Program(const Expr& e) {
  std::function<void(const Expr&)> emit = [&](const Expr& n) {
    switch (n.kind()) {
      case NodeKind::Var: code_.push_back({Op::Var, n.index(), 0, 0}); return;
      case NodeKind::Const: {
        const Rational& q = n.value();
        code_.push_back({Op::Const, 0, nearest_float(q), to_double(q)});
        return;
      }
      case NodeKind::Neg: emit(n.lhs()); code_.push_back({Op::Neg, 0, 0, 0}); return;
      case NodeKind::Add:
      case NodeKind::Sub:
      case NodeKind::Mul:
      case NodeKind::Div: {
        emit(n.lhs());
        emit(n.rhs());
        Op op = n.kind() == NodeKind::Add ? Op::Add : n.kind() == NodeKind::Sub ? Op::Sub
                : n.kind() == NodeKind::Mul ? Op::Mul : Op::Div;
        code_.push_back({op, 0, 0, 0});
        return;
      }
      default: throw Error(ErrorKind::Unsupported, "cannot sample an expression with error symbols");
    }
  };
  emit(e);
}

double Program::eval_rounded(const std::vector<double>& x, Format f) const {
  std::vector<double> st;
  st.reserve(code_.size());
  if (f == Format::Binary32) {
    std::vector<float> s;
    s.reserve(code_.size());
    for (const Instr& in : code_) {
      switch (in.op) {
        case Op::Var: s.push_back(static_cast<float>(x[in.var])); break;
        case Op::Const: s.push_back(static_cast<float>(in.c32)); break;
        case Op::Neg: s.back() = -s.back(); break;
        default: {
          float r = s.back();
          s.pop_back();
          float& l = s.back();
          if (in.op == Op::Add) l = l + r;
          else if (in.op == Op::Sub) l = l - r;
          else if (in.op == Op::Mul) l = l * r;
          else l = l / r;
        }
      }
    }
    return s.back();
  }
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Var: st.push_back(x[in.var]); break;
      case Op::Const: st.push_back(in.c64); break;
      case Op::Neg: st.back() = -st.back(); break;
      default: {
        double r = st.back();
        st.pop_back();
        double& l = st.back();
        if (in.op == Op::Add) l = l + r;
        else if (in.op == Op::Sub) l = l - r;
        else if (in.op == Op::Mul) l = l * r;
        else l = l / r;
      }
    }
  }
  return st.back();
}

double Program::eval_reference(const std::vector<double>& x, Format f) const {
  // the reference uses the same (already rounded) constants as the program under test
  if (f == Format::Binary32) {
    std::vector<double> st;
    for (const Instr& in : code_) {
      switch (in.op) {
        case Op::Var: st.push_back(x[in.var]); break;
        case Op::Const: st.push_back(in.c32); break;
        case Op::Neg: st.back() = -st.back(); break;
        default: {
          double r = st.back();
          st.pop_back();
          double& l = st.back();
          if (in.op == Op::Add) l = l + r;
          else if (in.op == Op::Sub) l = l - r;
          else if (in.op == Op::Mul) l = l * r;
          else l = l / r;
        }
      }
    }
    return st.back();
  }
  std::vector<DD> st;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Var: st.push_back({x[in.var], 0}); break;
      case Op::Const: st.push_back({in.c64, 0}); break;
      case Op::Neg: st.back() = dd_neg(st.back()); break;
      default: {
        DD r = st.back();
        st.pop_back();
        DD& l = st.back();
        if (in.op == Op::Add) l = dd_add(l, r);
        else if (in.op == Op::Sub) l = dd_add(l, dd_neg(r));
        else if (in.op == Op::Mul) l = dd_mul(l, r);
        else l = dd_div(l, r);
      }
    }
  }
  return st.back().hi + st.back().lo;
}

double eval_rounded(const Expr& e, const std::vector<double>& x, Format f) { return Program(e).eval_rounded(x, f); }

double SampleRun::half_width() const {
  if (!valid) return 0;
  double p = frequency();
  return 3 * std::sqrt(p * (1 - p) / static_cast<double>(valid));
}

SampleRun violation_rate(const ProblemSpec& spec, double u, std::uint64_t samples, std::uint64_t seed, Format f) {
  if (samples < kMinSamples)
    throw Error(ErrorKind::Validation, "at least " + std::to_string(kMinSamples) + " samples are required");
  if (!(u >= 0)) throw Error(ErrorKind::Validation, "threshold must be non-negative");
  Program prog(spec.expr);
  auto dists = spec.distributions();
  Rng rng(seed);
  SampleRun run;
  run.requested = samples;
  run.threshold = u;
  run.seed = seed;
  std::vector<double> x(dists.size());
  for (std::uint64_t i = 0; i < samples; ++i) {
    for (std::size_t v = 0; v < dists.size(); ++v) x[v] = to_format(sample(dists[v], rng), f);
    double got = prog.eval_rounded(x, f);
    double ref = prog.eval_reference(x, f);
    double err = std::fabs(got - ref);
    if (!std::isfinite(got) || !std::isfinite(ref) || !std::isfinite(err)) {
      ++run.excluded;
      continue;
    }
    ++run.valid;
    run.max_error = std::max(run.max_error, err);
    if (err >= u) ++run.violations;
  }
  return run;
}

}  // namespace probfp
