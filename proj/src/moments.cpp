#include "probfp/moments.hpp"

#include "probfp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace probfp {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// c^p * exp(-w) computed in log space so huge/small factors do not overflow
double pow_exp(double c, int p, double w) {
  if (p == 0) return std::exp(-w);
  if (c == 0) return 0;
  return std::exp(p * std::log(c) - w);
}

// ---- half-line kernels --------------------------------------------------
// Each family provides P_k(lo, hi) = integral of x^k g(x) over [lo,hi] ⊆ [0, inf), k = 0..K,
// for an even, unnormalized kernel g.

// integral of x^k phi(x) over [0,c]
std::vector<double> normal_inner(double c, int K) {
  std::vector<double> J(K + 1, 0.0);
  if (c <= 0) return J;
  // the positive series is good until its scale e^{c^2/2} c^k nears overflow; past that c^2 > kmax,
  // so the half-line-minus-tail form below does not cancel
  if (c <= 25) {
    // positive series seeds, then the recursion run downward (all additions positive)
    auto series = [&](int k) {
      double t = std::exp((k + 1) * std::log(c) - std::log(k + 1.0));
      double s = 0;
      for (int j = 0; j < 10000; ++j) {
        s += t;
        if (t < 1e-18 * s && c * c < k + 3 + 2 * j) break;
        t *= c * c / (k + 3 + 2 * j);
      }
      return s * normal_pdf(c);
    };
    J[K] = series(K);
    if (K >= 1) J[K - 1] = series(K - 1);
    for (int k = K; k >= 2; --k) J[k - 2] = (J[k] + pow_exp(c, k - 1, c * c / 2) * kInvSqrt2Pi) / (k - 1);
    return J;
  }
  // far out: full half-line moment minus the tail
  std::vector<double> M(K + 1);
  M[0] = 0.5;
  if (K >= 1) M[1] = kInvSqrt2Pi;
  for (int k = 2; k <= K; ++k) M[k] = (k - 1) * M[k - 2];
  double t0 = 0.5 * std::erfc(c / std::numbers::sqrt2);
  std::vector<double> T(K + 1);
  T[0] = t0;
  if (K >= 1) T[1] = normal_pdf(c);
  for (int k = 2; k <= K; ++k) T[k] = pow_exp(c, k - 1, c * c / 2) * kInvSqrt2Pi + (k - 1) * T[k - 2];
  for (int k = 0; k <= K; ++k) J[k] = M[k] - T[k];
  return J;
}

// integral of x^k phi(x) over [c, inf)
std::vector<double> normal_tail(double c, int K) {
  std::vector<double> T(K + 1);
  T[0] = 0.5 * std::erfc(c / std::numbers::sqrt2);
  if (K >= 1) T[1] = normal_pdf(c);
  for (int k = 2; k <= K; ++k) T[k] = pow_exp(c, k - 1, c * c / 2) * kInvSqrt2Pi + (k - 1) * T[k - 2];
  return T;
}

// I(c,k), k = 0..K
std::vector<double> laplace_inner(double c, int K) {
  std::vector<double> I(K + 1, 0.0);
  if (c <= 0) return I;
  if (c <= 500) {
    auto series = [&](int k) {
      double t = std::exp((k + 1) * std::log(c) - std::log(k + 1.0));
      double s = 0;
      for (int j = 0; j < 10000; ++j) {
        s += t;
        if (t < 1e-18 * s && c < k + 2 + j) break;
        t *= c / (k + 2 + j);
      }
      return s * std::exp(-c);
    };
    I[K] = series(K);
    for (int k = K; k >= 1; --k) I[k - 1] = (I[k] + pow_exp(c, k, c)) / k;
    I[0] = -std::expm1(-c);
    return I;
  }
  double g = std::exp(-c);
  double fact = 1;
  I[0] = -std::expm1(-c);
  for (int k = 1; k <= K; ++k) {
    g = k * g + pow_exp(c, k, c);
    fact *= k;
    I[k] = fact - g;
  }
  return I;
}

// integral of x^k e^{-x} over [c, inf)
std::vector<double> laplace_tail(double c, int K) {
  std::vector<double> G(K + 1);
  G[0] = std::exp(-c);
  for (int k = 1; k <= K; ++k) G[k] = k * G[k - 1] + pow_exp(c, k, c);
  return G;
}

std::vector<double> kernel_integrals(const Distribution& d, double lo, double hi, int K) {
  std::vector<double> P(K + 1);
  switch (d.family) {
    case Family::Uniform: {
      // (hi-lo)/(k+1) * sum_j lo^j hi^(k-j); every summand is nonnegative
      double s = 1, lop = 1;
      for (int k = 0; k <= K; ++k) {
        if (k > 0) {
          lop *= lo;
          s = hi * s + lop;
        }
        P[k] = (hi - lo) * s / (k + 1);
      }
      return P;
    }
    case Family::Normal: {
      // Pick the difference that does not cancel: integrals from 0 while the integrand x^k phi(x)
      // still rises at lo (peak at sqrt(k)), tail integrals once it is past its peak.
      std::vector<double> in_hi, in_lo, t_lo, t_hi;
      for (int k = 0; k <= K; ++k) {
        if (k >= lo * lo) {
          if (in_hi.empty()) in_hi = normal_inner(hi, K), in_lo = normal_inner(lo, K);
          P[k] = in_hi[k] - in_lo[k];
        } else {
          if (t_lo.empty()) t_lo = normal_tail(lo, K), t_hi = normal_tail(hi, K);
          P[k] = t_lo[k] - t_hi[k];
        }
      }
      return P;
    }
    case Family::Laplace: {
      // same choice for x^k e^{-x}, whose peak is at x = k
      double s = d.sigma();
      double yl = lo / s, yh = hi / s;
      std::vector<double> in_hi, in_lo, t_lo, t_hi;
      double sk = 0.5;
      for (int k = 0; k <= K; ++k) {
        if (k >= yl) {
          if (in_hi.empty()) in_hi = laplace_inner(yh, K), in_lo = laplace_inner(yl, K);
          P[k] = sk * (in_hi[k] - in_lo[k]);
        } else {
          if (t_lo.empty()) t_lo = laplace_tail(yl, K), t_hi = laplace_tail(yh, K);
          P[k] = sk * (t_lo[k] - t_hi[k]);
        }
        sk *= s;
      }
      return P;
    }
  }
  return P;
}

}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double laplace_cdf(double x, double sigma) {
  return x <= 0 ? 0.5 * std::exp(x / sigma) : 1 - 0.5 * std::exp(-x / sigma);
}

double cdf(const Distribution& d, double x) {
  switch (d.family) {
    case Family::Uniform: {
      double a = d.a(), b = d.b();
      return x <= a ? 0 : x >= b ? 1 : (x - a) / (b - a);
    }
    case Family::Normal:
      return normal_cdf(x);
    case Family::Laplace:
      return laplace_cdf(x, d.sigma());
  }
  return 0;
}

double laplace_partial(double c, int k) {
  if (c < 0 || k < 0) throw Error(ErrorKind::Validation, "laplace_partial needs c >= 0 and k >= 0");
  return laplace_inner(c, k)[static_cast<std::size_t>(k)];
}

Range support(const Distribution& d) { return {d.a(), d.b()}; }

MomentTable::MomentTable(const Distribution& d, Range r, int kmax) {
  if (kmax < 0) kmax = 0;
  if (!(r.lo < r.hi)) throw Error(ErrorKind::Validation, "moment range is empty");
  orig_.assign(kmax + 1, 0.0);
  pos_.assign(kmax + 1, 0.0);
  neg_.assign(kmax + 1, 0.0);
  std::vector<double> P, N;
  if (r.lo >= 0) {
    P = kernel_integrals(d, r.lo, r.hi, kmax);
    N.assign(kmax + 1, 0.0);
  } else if (r.hi <= 0) {
    P.assign(kmax + 1, 0.0);
    N = kernel_integrals(d, -r.hi, -r.lo, kmax);
  } else {
    P = kernel_integrals(d, 0, r.hi, kmax);
    N = kernel_integrals(d, 0, -r.lo, kmax);
  }
  double z = P[0] + N[0];
  if (!(z > 0) || !std::isfinite(z))
    throw Error(ErrorKind::NonFinite, "DZ: range [" + std::to_string(r.lo) + ", " + std::to_string(r.hi) +
                                          "] has no representable probability mass");
  for (int k = 0; k <= kmax; ++k) {
    pos_[k] = P[k] / z;
    neg_[k] = N[k] / z;
    orig_[k] = (k % 2 == 0) ? pos_[k] + neg_[k] : pos_[k] - neg_[k];
  }
  orig_[0] = 1;
  // unnormalized kernel -> probability under the pre-truncation law
  switch (d.family) {
    case Family::Uniform:
      mass_ = (r.hi - r.lo) / (d.b() - d.a());
      break;
    case Family::Normal:
    case Family::Laplace:
      mass_ = z;
      break;
  }
}

double MomentTable::moment(Component c, int k) const {
  if (k < 0 || k > kmax()) throw Error(ErrorKind::Validation, "moment order " + std::to_string(k) + " beyond table");
  switch (c) {
    case Component::Orig:
      return orig_[k];
    case Component::Pos:
      return pos_[k];
    case Component::Neg:
      return neg_[k];
  }
  return 0;
}

double MomentTable::abs_moment(Component c, int k) const {
  if (c == Component::Orig) return k == 0 ? 1.0 : pos_[k] + neg_[k];
  return moment(c, k);
}

double raw_moment(const Distribution& d, Range r, Component c, int k, int max_order) {
  if (k < 0 || k > max_order)
    throw Error(ErrorKind::Validation, "moment order " + std::to_string(k) + " exceeds the maximum " +
                                           std::to_string(max_order));
  if (r.lo < d.a() || r.hi > d.b()) throw Error(ErrorKind::Validation, "moment range outside the support");
  return MomentTable(d, r, k).moment(c, k);
}

double subrange_weight(const Distribution& d, Range r) {
  if (r.lo < d.a() || r.hi > d.b()) throw Error(ErrorKind::Validation, "sub-range outside the support");
  if (r.lo >= r.hi) return 0;
  double full = MomentTable(d, support(d), 0).mass();
  double part = MomentTable(d, r, 0).mass();
  return std::clamp(part / full, 0.0, 1.0);
}

// ---- partition ----------------------------------------------------------

Partition::Partition(const std::vector<Distribution>& dists, std::vector<std::uint32_t> vars, unsigned b,
                     std::size_t region_cap)
    : vars_(std::move(vars)), b_(b) {
  if (b == 0) throw Error(ErrorKind::Validation, "partitions per variable must be at least 1");
  for (std::size_t s = 0; s < vars_.size(); ++s) {
    if (count_ > region_cap / b)
      throw Error(ErrorKind::Resource, std::to_string(b) + "^" + std::to_string(vars_.size()) +
                                           " regions exceed the region cap of " + std::to_string(region_cap) +
                                           "; disable range partitioning (--no-partition) or lower --partitions");
    count_ *= b;
  }
  pieces_.resize(vars_.size());
  for (std::size_t s = 0; s < vars_.size(); ++s) {
    const Distribution& d = dists.at(vars_[s]);
    double a = d.a(), hi = d.b();
    double width = (hi - a) / b;
    double full = MomentTable(d, support(d), 0).mass();
    for (unsigned j = 0; j < b; ++j) {
      Range r{j == 0 ? a : a + j * width, j + 1 == b ? hi : a + (j + 1) * width};
      double w = b == 1 ? 1.0 : std::clamp(MomentTable(d, r, 0).mass() / full, 0.0, 1.0);
      pieces_[s].push_back({vars_[s], r, w});
    }
  }
}

void Partition::decode(std::size_t i, std::vector<std::uint32_t>& idx) const {
  idx.assign(vars_.size(), 0);
  for (std::size_t s = vars_.size(); s-- > 0;) {
    idx[s] = static_cast<std::uint32_t>(i % b_);
    i /= b_;
  }
}

SubRegion Partition::region(std::size_t i) const {
  SubRegion reg;
  decode(i, reg.index);
  reg.weight = 1;
  for (std::size_t s = 0; s < vars_.size(); ++s) {
    reg.ranges.push_back(pieces_[s][reg.index[s]]);
    reg.weight *= reg.ranges.back().weight;
  }
  return reg;
}

// ---- expectations -------------------------------------------------------

namespace {

struct Grouped {
  double sign = 1;
  bool zero = false;
  std::vector<CompiledPoly::Item> items;
};

Grouped group_factors(const Monomial& m) {
  Grouped g;
  std::size_t i = 0;
  while (i < m.size()) {
    const Symbol s = m[i].sym;
    if (s.is_error()) throw Error(ErrorKind::Internal, "error symbols must be eliminated before taking expectations");
    std::uint32_t v = s.base();
    std::uint32_t a = 0, p = 0, n = 0;
    for (; i < m.size() && m[i].sym.is_var() && m[i].sym.base() == v; ++i) {
      switch (m[i].sym.tag()) {
        case Tag::Orig: a += m[i].exp; break;
        case Tag::Pos: p += m[i].exp; break;
        case Tag::Neg: n += m[i].exp; break;
      }
    }
    if (p > 0 && n > 0) {
      g.zero = true;
      return g;
    }
    if (p > 0) {
      g.items.push_back({v, Component::Pos, static_cast<std::uint16_t>(a + p)});
    } else if (n > 0) {
      if (a % 2 == 1) g.sign = -g.sign;
      g.items.push_back({v, Component::Neg, static_cast<std::uint16_t>(a + n)});
    } else {
      g.items.push_back({v, Component::Orig, static_cast<std::uint16_t>(a)});
    }
  }
  return g;
}

// Neumaier compensated accumulator
struct Accumulator {
  double sum = 0, comp = 0;
  void add(double x) {
    double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x)) comp += (sum - t) + x;
    else comp += (x - t) + sum;
    sum = t;
  }
  [[nodiscard]] double value() const { return sum + comp; }
};

Range region_range(const std::vector<Distribution>& dists, std::uint32_t v, const SubRegion* region) {
  if (region)
    for (const SubRange& s : region->ranges)
      if (s.var == v) return s.range;
  return support(dists.at(v));
}

}  // namespace

double term_expectation(const Term& t, const std::vector<Distribution>& dists, const SubRegion* region) {
  Grouped g = group_factors(t.mono);
  if (g.zero) return 0;
  double prod = to_double(t.coef) * g.sign;
  for (const auto& it : g.items)
    prod *= MomentTable(dists.at(it.var), region_range(dists, it.var, region), it.k).moment(it.comp, it.k);
  return prod;
}

Expectation poly_expectation(const Polynomial& p, const std::vector<Distribution>& dists, const SubRegion* region) {
  CompiledPoly cp(p);
  std::vector<MomentTable> owned;
  owned.reserve(cp.vars().size());
  std::vector<const MomentTable*> tables(dists.size(), nullptr);
  for (std::uint32_t v : cp.vars()) {
    if (v >= dists.size()) throw Error(ErrorKind::Validation, "polynomial uses an undeclared variable");
    owned.emplace_back(dists[v], region_range(dists, v, region), cp.max_order());
    tables[v] = &owned.back();
  }
  return cp.expect(tables);
}

CompiledPoly::CompiledPoly(const Polynomial& p) {
  std::vector<bool> seen;
  for (const Term& t : p.terms()) {
    Grouped g = group_factors(t.mono);
    if (g.zero) continue;
    coef_.push_back(to_double(t.coef) * g.sign);
    start_.push_back(static_cast<std::uint32_t>(items_.size()));
    for (const auto& it : g.items) {
      items_.push_back(it);
      max_k_ = std::max<int>(max_k_, it.k);
      if (it.var >= seen.size()) seen.resize(it.var + 1, false);
      if (!seen[it.var]) {
        seen[it.var] = true;
        vars_.push_back(it.var);
      }
    }
  }
  start_.push_back(static_cast<std::uint32_t>(items_.size()));
  std::sort(vars_.begin(), vars_.end());
}

Expectation CompiledPoly::expect(const std::vector<const MomentTable*>& tables) const {
  Accumulator val, mag;
  for (std::size_t t = 0; t < coef_.size(); ++t) {
    double v = coef_[t], m = std::fabs(coef_[t]);
    for (std::uint32_t i = start_[t]; i < start_[t + 1]; ++i) {
      const Item& it = items_[i];
      const MomentTable* tab = tables[it.var];
      v *= tab->moment(it.comp, it.k);
      m *= tab->abs_moment(it.comp, it.k);
    }
    val.add(v);
    mag.add(m);
  }
  Expectation e{val.value(), mag.value()};
  if (!std::isfinite(e.value) || !std::isfinite(e.magnitude))
    throw Error(ErrorKind::NonFinite, "DZ: non-finite expectation");
  return e;
}

RegionMoments::RegionMoments(const std::vector<Distribution>& dists, const Partition& part, int kmax)
    : part_(part), nvars_(dists.size()) {
  tables_.resize(part.vars().size());
  for (std::size_t s = 0; s < part.vars().size(); ++s) {
    const Distribution& d = dists.at(part.vars()[s]);
    for (unsigned j = 0; j < part.pieces(); ++j) tables_[s].emplace_back(d, part.piece(s, j).range, kmax);
  }
}

void RegionMoments::tables_for(std::size_t i, std::vector<const MomentTable*>& out) const {
  out.assign(nvars_, nullptr);
  std::vector<std::uint32_t> idx;
  part_.decode(i, idx);
  for (std::size_t s = 0; s < idx.size(); ++s) out[part_.vars()[s]] = &tables_[s][idx[s]];
}

}  // namespace probfp
