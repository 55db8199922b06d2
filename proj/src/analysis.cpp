#include "probfp/analysis.hpp"

#include "probfp/det_bound.hpp"
#include "probfp/fp_model.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace probfp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t used_variable_count(const Expr& e, std::size_t nvars) {
  std::vector<bool> used(nvars, false);
  collect_variables(e, used);
  std::size_t n = 0;
  for (bool b : used) n += b;
  return n;
}

Mode resolve_mode(Mode requested, StructuralForm::Kind kind, unsigned order) {
  bool frac = kind == StructuralForm::Kind::TopFraction;
  if (requested == Mode::Auto) {
    if (frac) return Mode::Div;
    return order % 2 == 0 ? Mode::CMB : Mode::NM;
  }
  if (frac && requested != Mode::Div)
    throw Error(ErrorKind::Unsupported, "mode " + to_string(requested) + " needs a division-free expression; use div");
  if (!frac && requested == Mode::Div)
    throw Error(ErrorKind::Unsupported, "mode div needs a top-level fraction; use nm or cmb");
  return requested;
}

}  // namespace

AnalysisConfig config_from_problem(const ProblemSpec& spec) {
  AnalysisConfig cfg;
  if (spec.precision) {
    cfg.eps = spec.precision->eps;
    cfg.delta = spec.precision->delta;
  }
  if (spec.confidence) cfg.confidence = to_double(*spec.confidence);
  return cfg;
}

FirstOrderForm first_order_form(const ProblemSpec& spec, const AnalysisConfig& cfg, const Deadline* deadline) {
  FirstOrderForm out;
  out.form = classify(spec.expr);
  if (out.form.kind == StructuralForm::Kind::Unsupported) throw Error(ErrorKind::Unsupported, out.form.reason);
  out.model = fp_transform(spec.expr);
  out.ops = out.model.ops;
  out.derivatives = first_order_derivatives(out.model);

  auto dists = spec.distributions();
  std::vector<SignClass> signs;
  for (const Distribution& d : dists) signs.push_back(d.sign());
  PolyLimits limits{cfg.term_cap, deadline};

  FlagContext& ctx = out.ctx;
  ctx.dists = dists;
  ctx.n = cfg.order;
  if (out.form.kind == StructuralForm::Kind::DivisionFree) {
    std::vector<Polynomial> hs;
    for (const Expr& h : out.derivatives) hs.push_back(expand(h, limits));
    ctx.p = pn_decompose(hs, signs);
    ctx.power = 0;
    ctx.qpoly = Polynomial::constant(1);
    return out;
  }

  SignCertificate sc = check_denominator_sign(out.form.denominator, dists);
  if (sc == SignCertificate::Indeterminate)
    throw Error(ErrorKind::Unsupported, "denominator sign cannot be certified over the input ranges");
  auto gs = scaled_derivatives(out.model, out.form.denominator, limits);
  Polynomial q = expand(out.form.denominator, limits);
  ReducedDerivatives red;
  if (cfg.force_q2) {
    red.hs = std::move(gs);
    red.power = 2;
  } else {
    red = reduce_common_factor(gs, q);
  }
  ctx.p = pn_decompose(red.hs, signs);
  ctx.power = red.power;
  if (red.power == 1) ctx.qpoly = sc == SignCertificate::Negative ? -q : q;
  else ctx.qpoly = multiply(q, q, limits);
  return out;
}

ThresholdReport analyze(const ProblemSpec& spec, const AnalysisConfig& cfg) {
  const auto t_start = Clock::now();
  if (!(cfg.confidence > 0 && cfg.confidence < 1)) throw Error(ErrorKind::Validation, "confidence must lie in (0,1)");
  if (cfg.eps <= 0 || cfg.delta <= 0) throw Error(ErrorKind::Validation, "eps and delta must be positive");
  if (cfg.order == 0) throw Error(ErrorKind::Validation, "analysis order must be positive");
  if (cfg.sweep && cfg.sweep_orders.empty()) throw Error(ErrorKind::Validation, "empty sweep list");

  ThresholdReport rep;
  rep.confidence = cfg.confidence;
  rep.eps = cfg.eps;
  rep.delta = cfg.delta;
  Diagnostics& dg = rep.diagnostics;

  auto t0 = Clock::now();
  FirstOrderForm fo = first_order_form(spec, cfg);
  double t_setup = seconds_since(t0);
  const bool frac = fo.form.kind == StructuralForm::Kind::TopFraction;
  rep.mode = resolve_mode(cfg.mode, fo.form.kind, cfg.sweep ? 2 : cfg.order);
  dg.classification = frac ? "fraction" : "division-free";
  dg.ops = fo.ops;
  dg.denominator_power = fo.ctx.power;
  dg.p_terms = fo.ctx.p.size();

  auto dists = spec.distributions();
  unsigned b = 1;
  if (rep.mode != Mode::NM && !cfg.no_partition) {
    if (cfg.partitions) b = *cfg.partitions;
    else if (used_variable_count(spec.expr, dists.size()) < 4 && fo.ops < 10) b = 8;
  }
  if (b == 0) throw Error(ErrorKind::Validation, "partition count must be at least 1");
  rep.partitions = b;

  if (cfg.delta > cfg.eps * cfg.eps)
    dg.notes.push_back("delta exceeds eps^2; d-terms are still bounded in the second-order term");

  // second-order term, independent of n
  t0 = Clock::now();
  RemainderOptions ropts;
  ropts.exact_term_cap = cfg.remainder_term_cap;
  ropts.force_q2 = cfg.force_q2;
  RemainderForm rf = remainder(fo.model, fo.derivatives, ropts);
  rep.second_order = second_order_bound(rf, Box::from_supports(dists, cfg.eps, cfg.delta));
  rep.seconds_second_order = seconds_since(t0);
  dg.remainder_method = rf.exact ? "exact" : "lagrange";

  if (cfg.debug) {
    auto names = spec.names();
    dg.tilde = to_string(fo.model.tilde, names);
    dg.p = to_string(fo.ctx.p, names);
    for (const Expr& h : fo.derivatives) dg.derivatives.push_back(to_string(h, names));
    dg.remainder = rf.exact ? to_string(rf.numerator, names) : std::to_string(rf.pieces.size()) + " Lagrange pieces";
  }

  auto run_order = [&](unsigned n, const Deadline* dl, SearchResult& sr) -> double {
    if (dl) dl->check();
    PolyLimits limits{cfg.term_cap, dl};
    FlagContext ctx = fo.ctx;
    ctx.n = n;
    if (rep.mode == Mode::NM) {
      sr = {};
      return nm_threshold(ctx.p, ctx.dists, n, cfg.confidence, cfg.eps, limits);
    }
    if (n % 2 != 0) throw Error(ErrorKind::Validation, "mode " + to_string(rep.mode) + " needs an even order");
    FlagEvaluator fe(ctx, b, cfg.region_cap, limits);
    if (rep.mode == Mode::CMB) {
      double nm = nm_threshold(ctx.p, ctx.dists, n, cfg.confidence, cfg.eps, limits);
      sr = cmb_threshold(fe, nm, cfg);
    } else {
      sr = frac_threshold(fe, cfg);
    }
    if (dl) dl->check();
    return sr.u;
  };

  auto total_of = [&](double u1) {
    // round the sum upward, then one more ulp so that P[err < U] > c holds strictly
    double t = std::nextafter(u1 + rep.second_order, std::numeric_limits<double>::infinity());
    return std::nextafter(t, std::numeric_limits<double>::infinity());
  };

  std::vector<unsigned> orders = cfg.sweep ? cfg.sweep_orders : std::vector<unsigned>{cfg.order};
  bool have = false;
  double first_seconds = t_setup;
  for (unsigned n : orders) {
    SweepEntry entry;
    entry.order = n;
    auto ts = Clock::now();
    SearchResult sr;
    try {
      if (cfg.sweep) {
        if (rep.mode != Mode::NM && n % 2 != 0) {
          entry.message = "skipped: odd order";
          dg.sweep.push_back(entry);
          continue;
        }
        Deadline dl(cfg.timeout_per_order);
        entry.u1 = run_order(n, &dl, sr);
      } else {
        entry.u1 = run_order(n, nullptr, sr);
      }
      entry.ok = true;
      entry.total = total_of(entry.u1);
    } catch (const Error& e) {
      if (!cfg.sweep) throw;
      entry.timed_out = e.kind() == ErrorKind::Timeout;
      entry.message = e.what();
    }
    entry.seconds = seconds_since(ts);
    first_seconds += entry.seconds;
    if (entry.ok && (!have || entry.total < rep.total)) {
      have = true;
      rep.total = entry.total;
      rep.first_order = entry.u1;
      rep.order = n;
      dg.ell = sr.ell;
      dg.r = sr.r;
      dg.mu = sr.mu;
      dg.flag_at_u = sr.flag;
      dg.iterations = sr.iterations;
      if (!sr.note.empty()) dg.notes.push_back("n=" + std::to_string(n) + ": " + sr.note);
    }
    dg.sweep.push_back(entry);
  }
  rep.seconds_first_order = first_seconds;
  rep.seconds_total = seconds_since(t_start);
  if (!have) {
    std::string msg = "no analysis order produced a threshold:";
    for (const SweepEntry& e : dg.sweep) msg += " n=" + std::to_string(e.order) + " (" + e.message + ")";
    throw Error(ErrorKind::SweepExhausted, msg);
  }
  return rep;
}

}  // namespace probfp
