#include "probfp/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <limits>

namespace probfp {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::NM: return "nm";
    case Mode::CMB: return "cmb";
    case Mode::Div: return "div";
    case Mode::Auto: return "auto";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  if (s == "nm") return Mode::NM;
  if (s == "cmb") return Mode::CMB;
  if (s == "div") return Mode::Div;
  if (s == "auto") return Mode::Auto;
  throw Error(ErrorKind::Validation, "unknown mode '" + s + "' (expected nm, cmb, div or auto)");
}

namespace {

std::vector<double> binomial_row(unsigned n) {
  std::vector<double> row(n + 1, 1.0);
  for (unsigned k = 1; k < n; ++k) row[k] = row[k - 1] * (n - k + 1) / k;
  return row;
}

std::vector<std::uint32_t> used_vars(const std::vector<const Polynomial*>& polys) {
  std::vector<bool> seen;
  for (const Polynomial* p : polys)
    for (const Term& t : p->terms())
      for (const Factor& f : t.mono)
        if (f.sym.is_var()) {
          if (f.sym.base() >= seen.size()) seen.resize(f.sym.base() + 1, false);
          seen[f.sym.base()] = true;
        }
  std::vector<std::uint32_t> out;
  for (std::uint32_t v = 0; v < seen.size(); ++v)
    if (seen[v]) out.push_back(v);
  return out;
}

constexpr double kRound = 4.0 * std::numeric_limits<double>::epsilon();

}  // namespace

FlagEvaluator::FlagEvaluator(const FlagContext& ctx, unsigned partitions, std::size_t region_cap,
                             const PolyLimits& limits)
    : n_(ctx.n), division_free_(ctx.power == 0) {
  if (n_ == 0 || n_ % 2 != 0) throw Error(ErrorKind::Validation, "flag computation needs an even order");
  const unsigned n = n_;
  const unsigned cmax = division_free_ ? 0 : n;

  // raw[a][c] = p^a q^c compiled, a + c <= n
  std::vector<Polynomial> ppow{Polynomial::constant(1)}, qpow{Polynomial::constant(1)};
  for (unsigned a = 1; a <= n; ++a) ppow.push_back(multiply(ppow.back(), ctx.p, limits));
  for (unsigned c = 1; c <= cmax; ++c) qpow.push_back(multiply(qpow.back(), ctx.qpoly, limits));
  std::vector<std::vector<CompiledPoly>> raw(n + 1);
  int kmax = 0;
  for (unsigned a = 0; a <= n; ++a)
    for (unsigned c = 0; c <= std::min(cmax, n - a); ++c) {
      if (limits.deadline) limits.deadline->check();
      raw[a].emplace_back(c == 0 ? ppow[a] : multiply(ppow[a], qpow[c], limits));
      kmax = std::max(kmax, raw[a].back().max_order());
    }

  std::vector<const Polynomial*> all{&ctx.p, &ctx.qpoly};
  Partition part(ctx.dists, used_vars(all), partitions, region_cap);
  RegionMoments moments(ctx.dists, part, kmax);
  std::vector<const MomentTable*> tables;

  // whole-support means (for the search bracket)
  {
    Partition whole(ctx.dists, part.vars(), 1, 1);
    RegionMoments wm(ctx.dists, whole, std::max(raw[1][0].max_order(), division_free_ ? 0 : raw[0][1].max_order()));
    wm.tables_for(0, tables);
    mean_p_ = raw[1][0].expect(tables).value;
    mean_q_ = division_free_ ? 1.0 : raw[0][1].expect(tables).value;
  }

  std::vector<std::vector<Expectation>> R(n + 1);
  for (std::size_t i = 0; i < part.size(); ++i) {
    if (limits.deadline && (i & 63) == 0) limits.deadline->check();
    RegionData rd;
    SubRegion reg = part.region(i);
    rd.weight = reg.weight;
    if (rd.weight <= 0) {
      regions_.push_back(std::move(rd));
      continue;
    }
    moments.tables_for(i, tables);
    for (unsigned a = 0; a <= n; ++a) {
      R[a].clear();
      for (const CompiledPoly& cp : raw[a]) R[a].push_back(cp.expect(tables));
    }
    rd.mp = R[1][0].value;
    rd.mq = division_free_ ? 1.0 : R[0][1].value;
    rd.central.assign(n + 1, 0.0);
    rd.err.assign(n + 1, 0.0);
    for (unsigned j = division_free_ ? n : 0; j <= n; ++j) {
      // E[(p-mp)^j (q-mq)^(n-j)] by binomial expansion of the raw mixed moments
      auto bj = binomial_row(j), bk = binomial_row(n - j);
      double val = 0, err = 0, scale = 0;
      for (unsigned a = 0; a <= j; ++a)
        for (unsigned c = 0; c <= n - j; ++c) {
          double coef = bj[a] * bk[c] * std::pow(-rd.mp, static_cast<int>(j - a)) *
                        std::pow(-rd.mq, static_cast<int>(n - j - c));
          const Expectation& e = R[a][c];
          val += coef * e.value;
          err += std::fabs(coef) * Expectation::inflation * e.magnitude;
          scale += std::fabs(coef * e.value);
        }
      rd.central[j] = val;
      rd.err[j] = err + kRound * (n + 2) * (n + 2) * scale;
      if (!std::isfinite(rd.central[j]) || !std::isfinite(rd.err[j]))
        throw Error(ErrorKind::NonFinite, "DZ: non-finite central moment");
    }
    regions_.push_back(std::move(rd));
  }
}

double FlagEvaluator::local_flag_scaled(double v, std::size_t region) const {
  const RegionData& rd = regions_.at(region);
  const unsigned n = n_;
  double mu = rd.mp - v * rd.mq;
  // |mu| lower bound, allowing for rounding in its own evaluation
  double mag = -mu - kRound * (std::fabs(rd.mp) + std::fabs(v * rd.mq));
  if (!(mu < 0) || !(mag > 0)) return 1.0;
  double num = 0, bound = 0;
  if (division_free_) {
    num = rd.central[n];
    bound = rd.err[n] + kRound * std::fabs(num);
  } else {
    auto bn = binomial_row(n);
    double scale = 0;
    for (unsigned j = 0; j <= n; ++j) {
      double w = bn[j] * std::pow(v, static_cast<int>(n - j));
      double term = ((n - j) % 2 ? -w : w) * rd.central[j];
      num += term;
      scale += std::fabs(term);
      bound += w * rd.err[j];
    }
    bound += kRound * (n + 2) * scale;
  }
  double up = num + bound;
  if (!std::isfinite(up)) throw Error(ErrorKind::NonFinite, "DZ: non-finite flag numerator");
  if (up <= 0) return 0.0;
  double f = std::exp(std::log(up) - n * std::log(mag));
  if (std::isnan(f)) throw Error(ErrorKind::NonFinite, "DZ: non-finite flag value");
  return std::clamp(f * (1 + kRound * (n + 2)), 0.0, 1.0);
}

double FlagEvaluator::flag_scaled(double v) const {
  double total = 0;
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    if (regions_[i].weight <= 0) continue;
    total += regions_[i].weight * local_flag_scaled(v, i);
  }
  return std::clamp(total, 0.0, 1.0);
}

double flag(double u, const FlagContext& ctx, const Rational& eps, const SubRegion* region) {
  if (!region) return FlagEvaluator(ctx, 1, 1, {}).flag_scaled(u / to_double(eps));
  // restrict the laws to the region and evaluate as a single cell
  FlagContext local = ctx;
  for (const SubRange& s : region->ranges) {
    Distribution& d = local.dists.at(s.var);
    Distribution r = d;
    r.lower = from_double(s.range.lo);
    r.upper = from_double(s.range.hi);
    d = r;
  }
  return FlagEvaluator(local, 1, 1, {}).flag_scaled(u / to_double(eps));
}

double partitioned_flag(double u, const FlagContext& ctx, const Rational& eps, unsigned b, std::size_t region_cap) {
  return FlagEvaluator(ctx, b, region_cap, {}).flag_scaled(u / to_double(eps));
}

double nm_threshold(const Polynomial& p, const std::vector<Distribution>& dists, unsigned n, double confidence,
                    const Rational& eps, const PolyLimits& limits) {
  if (n == 0) throw Error(ErrorKind::Validation, "analysis order must be positive");
  if (!(confidence > 0 && confidence < 1)) throw Error(ErrorKind::Validation, "confidence must lie in (0,1)");
  if (p.is_zero()) return 0;
  Expectation e = poly_expectation(poly_pow(p, n, limits), dists);
  double m = e.upper();
  if (!std::isfinite(m)) throw Error(ErrorKind::NonFinite, "DZ: non-finite moment E[p^n]");
  if (m <= 0) return 0;
  double v = std::exp((std::log(m) - std::log1p(-confidence)) / n) * (1 + kRound);
  if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "DZ: non-finite threshold");
  return mul_up(v, eps);
}

namespace {

// shrink (lo, hi] with lo infeasible and hi feasible
SearchResult bisect(const FlagEvaluator& fe, double lo, double hi, const AnalysisConfig& cfg, SearchResult r) {
  const double target = 1 - cfg.confidence;
  while (r.iterations < cfg.max_iterations && (hi - lo) > cfg.search_tolerance * hi) {
    double mid = 0.5 * (lo + hi);
    if (fe.flag_scaled(mid) <= target) hi = mid;
    else lo = mid;
    ++r.iterations;
  }
  r.flag = fe.flag_scaled(hi);
  r.u = hi;
  return r;
}

void finish(SearchResult& r, const FlagEvaluator& fe, const Rational& eps) {
  double v = r.u;
  r.u = mul_up(v, eps);
  r.mu = to_double(eps) * (fe.mean_p() - v * fe.mean_q());
  r.ell = to_double(eps) * r.ell;
  r.r = to_double(eps) * r.r;
}

}  // namespace

SearchResult cmb_threshold(const FlagEvaluator& fe, double nm_u, const AnalysisConfig& cfg) {
  SearchResult r;
  const double eps = to_double(cfg.eps);
  double lo = fe.mean_p();
  double hi = nm_u / eps;
  r.ell = lo;
  r.r = hi;
  double fr = fe.flag_scaled(hi);
  if (fr >= 1 - cfg.confidence || !(hi > lo)) {
    // the naive bound stands
    r.u = hi;
    r.flag = fr;
    r.note = "flag(r) >= 1-c; returned the naive-Markov bound";
    finish(r, fe, cfg.eps);
    r.u = std::max(r.u, nm_u);
    return r;
  }
  r = bisect(fe, lo, hi, cfg, r);
  finish(r, fe, cfg.eps);
  r.u = std::min(r.u, nm_u);
  return r;
}

SearchResult frac_threshold(const FlagEvaluator& fe, const AnalysisConfig& cfg) {
  SearchResult r;
  const double target = 1 - cfg.confidence;
  if (!(fe.mean_q() > 0)) throw Error(ErrorKind::NonFinite, "DZ: denominator moment is not positive");
  double lo = fe.mean_p() / fe.mean_q();
  double hi = lo * cfg.frac_multiplier;
  r.ell = lo;
  r.r = hi;
  if (!(lo > 0)) {
    // p vanishes: every positive threshold works
    r.u = std::numeric_limits<double>::denorm_min();
    r.flag = 0;
    r.note = "first-order term is identically zero";
    r.ell = r.r = 0;
    return r;
  }
  if (fe.flag_scaled(hi) <= target) {
    r = bisect(fe, lo, hi, cfg, r);
  } else {
    // magnitude scan, 10 probes per decade
    const int decades = static_cast<int>(std::ceil(std::log10(cfg.frac_multiplier)));
    double prev = lo;
    bool found = false;
    for (int j = 1; j <= 10 * decades; ++j) {
      double v = lo * std::pow(10.0, j / 10.0);
      ++r.iterations;
      if (fe.flag_scaled(v) <= target) {
        r.note = "bracket not feasible at r; used magnitude scan";
        r = bisect(fe, prev, v, cfg, r);
        found = true;
        break;
      }
      prev = v;
    }
    if (!found) {
      std::ostringstream os;
      os << std::setprecision(6) << "no feasible threshold in (l, r) = (" << lo * to_double(cfg.eps) << ", "
         << hi * to_double(cfg.eps) << "); try a higher order or more partitions";
      throw Error(ErrorKind::Infeasible, os.str());
    }
  }
  finish(r, fe, cfg.eps);
  return r;
}

}  // namespace probfp
