#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

#include "probfp/analysis.hpp"
#include "probfp/mc_oracle.hpp"

using namespace probfp;

namespace {

const char* kEx1 = "prec single\nconf 0.99\nvar x1 uniform(-1,1)\nvar x2 uniform(-1,1)\nvar x3 uniform(-1,1)\n"
                   "expr x1*x2 + x3\n";
const char* kEx2 = "prec single\nconf 0.99\nvar x1 uniform(-1,1)\nvar x2 uniform(-1,1)\nvar x3 uniform(-1,1)\n"
                   "expr (x1*x2)/(x3 + 5)\n";

const Rational kEps = pow(Rational(1, 2), 24);

FlagContext context(const char* text, unsigned n) {
  ProblemSpec s = parse_problem(text);
  AnalysisConfig cfg = config_from_problem(s);
  cfg.order = n;
  return first_order_form(s, cfg).ctx;
}

AnalysisConfig cfg_for(const char* text) { return config_from_problem(parse_problem(text)); }

}  // namespace

TEST_CASE("naive Markov threshold for x1*x2 + x3") {
  FlagContext ctx = context(kEx1, 2);
  // E[p^2] = 23/18 by hand; U = eps * sqrt(E / (1 - c))
  double oracle = std::ldexp(1.0, -24) * std::sqrt((23.0 / 18) / 0.01);
  double u = nm_threshold(ctx.p, ctx.dists, 2, 0.99, kEps);
  CHECK(u >= oracle);
  CHECK(u == doctest::Approx(oracle).epsilon(1e-8));
  CHECK(u == doctest::Approx(6.74e-7).epsilon(0.01));
}

TEST_CASE("naive Markov threshold grows with confidence") {
  FlagContext ctx = context(kEx1, 2);
  double prev = 0;
  for (double c : {0.9, 0.99, 0.999}) {
    double u = nm_threshold(ctx.p, ctx.dists, 2, c, kEps);
    CHECK(u >= prev);
    prev = u;
  }
  CHECK_THROWS_AS((void)nm_threshold(ctx.p, ctx.dists, 2, 1.0, kEps), Error);
}

TEST_CASE("flag is a sound tail bound (sampling check)") {
  // P[p*eps - q*u >= 0] estimated by sampling must not exceed the computed flag
  for (const char* text : {kEx1, kEx2}) {
    FlagContext ctx = context(text, 4);
    FlagEvaluator fe(ctx, 1, 1, {});
    ProblemSpec s = parse_problem(text);
    auto dists = s.distributions();
    Rng rng(5);
    std::vector<std::vector<double>> xs(200000);
    for (auto& x : xs)
      for (const Distribution& d : dists) x.push_back(sample(d, rng));
    double lo = fe.mean_p() / fe.mean_q();
    for (double mult : {1.2, 1.5, 2.0, 3.0, 5.0}) {
      double v = lo * mult;
      std::size_t hits = 0;
      for (const auto& x : xs)
        if (testsupport::eval_poly(ctx.p, x) - v * testsupport::eval_poly(ctx.qpoly, x) >= 0) ++hits;
      double freq = static_cast<double>(hits) / xs.size();
      double f = fe.flag_scaled(v);
      CHECK(f >= 0);
      CHECK(f <= 1);
      CHECK(freq <= f + 3 * std::sqrt(f * (1 - f) / xs.size()) + 1e-4);
    }
  }
}

TEST_CASE("flag is 1 below the mean and clipped everywhere") {
  FlagContext ctx = context(kEx1, 2);
  FlagEvaluator fe(ctx, 2, 1000, {});
  CHECK(fe.flag_scaled(0.5 * fe.mean_p()) == 1.0);
  CHECK(fe.flag_scaled(fe.mean_p()) == 1.0);
  for (double v = fe.mean_p(); v < 40 * fe.mean_p(); v *= 1.1) {
    double f = fe.flag_scaled(v);
    CHECK(f >= 0);
    CHECK(f <= 1);
  }
}

TEST_CASE("central-moment threshold never exceeds the naive one") {
  std::mt19937_64 g(31);
  for (int k = 0; k < 6; ++k) {
    ProblemSpec s = testsupport::random_problem(g, 3, 6);
    for (unsigned n : {2u, 4u}) {
      AnalysisConfig cfg;
      cfg.order = n;
      FirstOrderForm fo = first_order_form(s, cfg);
      if (fo.ctx.p.is_zero()) continue;
      double nm = nm_threshold(fo.ctx.p, fo.ctx.dists, n, cfg.confidence, cfg.eps);
      FlagEvaluator fe(fo.ctx, 1, 1, {});
      SearchResult r = cmb_threshold(fe, nm, cfg);
      CHECK(r.u <= nm);
      CHECK(r.u > 0);
    }
  }
}

TEST_CASE("binary search ends near the smallest feasible point") {
  FlagContext ctx = context(kEx1, 4);
  AnalysisConfig cfg = cfg_for(kEx1);
  FlagEvaluator fe(ctx, 1, 1, {});
  double nm = nm_threshold(ctx.p, ctx.dists, 4, 0.99, kEps);
  SearchResult r = cmb_threshold(fe, nm, cfg);
  double v = r.u / std::ldexp(1.0, -24);
  CHECK(fe.flag_scaled(v) <= 0.01);
  CHECK(fe.flag_scaled(v * (1 - 2e-3)) > 0.01);
  CHECK(r.iterations <= cfg.max_iterations);
}

TEST_CASE("flag does not increase along the search interval") {
  for (unsigned n : {2u, 4u, 6u}) {
    FlagContext ctx = context(kEx1, n);
    FlagEvaluator fe(ctx, 1, 1, {});
    double lo = fe.mean_p(), hi = nm_threshold(ctx.p, ctx.dists, n, 0.99, kEps) / std::ldexp(1.0, -24);
    double prev = 2;
    for (int i = 1; i <= 200; ++i) {
      double f = fe.flag_scaled(lo + (hi - lo) * i / 200);
      CHECK(f <= prev + 1e-12);
      prev = f;
    }
  }
}

TEST_CASE("one partition equals the plain flag") {
  for (const char* text : {kEx1, kEx2}) {
    FlagContext ctx = context(text, 4);
    FlagEvaluator fe(ctx, 1, 1, {});
    for (double m : {1.5, 3.0, 10.0}) {
      double u = fe.mean_p() / fe.mean_q() * m * std::ldexp(1.0, -24);
      double a = flag(u, ctx, kEps), b = partitioned_flag(u, ctx, kEps, 1);
      CHECK(std::fabs(a - b) <= 1e-12 * std::max(a, 1e-300));
    }
  }
}

TEST_CASE("local flag of a region matches the single-region evaluation") {
  FlagContext ctx = context(kEx1, 2);
  FlagEvaluator fe(ctx, 2, 1000, {});
  Partition part(ctx.dists, {0, 1, 2}, 2, 1000);
  double v = 5 * fe.mean_p();
  double total = 0;
  for (std::size_t i = 0; i < part.size(); ++i) {
    SubRegion r = part.region(i);
    double local = flag(v * std::ldexp(1.0, -24), ctx, kEps, &r);
    CHECK(local == doctest::Approx(fe.local_flag_scaled(v, i)).epsilon(1e-9));
    total += r.weight * local;
  }
  CHECK(total == doctest::Approx(fe.flag_scaled(v)).epsilon(1e-9));
}

TEST_CASE("partitioning tightens the flag at the naive threshold") {
  FlagContext ctx = context(kEx1, 2);
  double u = nm_threshold(ctx.p, ctx.dists, 2, 0.99, kEps);
  CHECK(partitioned_flag(u, ctx, kEps, 2) <= flag(u, ctx, kEps));
}

TEST_CASE("fraction: feasibility depends on order") {
  AnalysisConfig cfg = cfg_for(kEx2);
  {
    FlagContext ctx = context(kEx2, 2);
    CHECK(ctx.power == 1);
    FlagEvaluator fe(ctx, 1, 1, {});
    try {
      (void)frac_threshold(fe, cfg);
      FAIL("expected infeasible");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Infeasible);
    }
  }
  FlagContext ctx = context(kEx2, 4);
  FlagEvaluator fe(ctx, 1, 1, {});
  SearchResult r = frac_threshold(fe, cfg);
  CHECK(r.flag <= 0.01);
  CHECK(r.u > r.ell);
  CHECK(r.u < r.r);
  CHECK(r.mu < 0);
}

TEST_CASE("analysis driver: modes, sweep and strict rounding") {
  ProblemSpec s = parse_problem(kEx1);
  AnalysisConfig cfg = config_from_problem(s);
  cfg.mode = Mode::NM;
  ThresholdReport r2 = analyze(s, cfg);
  CHECK(r2.total > r2.first_order + r2.second_order);
  CHECK(r2.partitions == 1);
  cfg.order = 4;
  ThresholdReport r4 = analyze(s, cfg);
  cfg.sweep = true;
  cfg.sweep_orders = {2};
  ThresholdReport one = analyze(s, cfg);
  CHECK(one.total == r2.total);
  cfg.sweep_orders = {2, 4};
  ThresholdReport two = analyze(s, cfg);
  CHECK(two.total == std::min(r2.total, r4.total));
  CHECK(two.order == (r4.total < r2.total ? 4u : 2u));
  cfg.timeout_per_order = 0;
  try {
    (void)analyze(s, cfg);
    FAIL("expected sweep exhaustion");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SweepExhausted);
  }

  AnalysisConfig a = config_from_problem(s);
  a.order = 4;
  ThresholdReport auto_r = analyze(s, a);
  CHECK(auto_r.mode == Mode::CMB);
  CHECK(auto_r.partitions == 8);
  a.order = 3;
  CHECK(analyze(s, a).mode == Mode::NM);
  a.mode = Mode::Div;
  CHECK_THROWS_AS((void)analyze(s, a), Error);

  ProblemSpec f = parse_problem(kEx2);
  AnalysisConfig fc = config_from_problem(f);
  CHECK(analyze(f, fc).mode == Mode::Div);
  fc.mode = Mode::NM;
  try {
    (void)analyze(f, fc);
    FAIL("expected unsupported");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Unsupported);
  }
}

TEST_CASE("uncertified denominators are refused") {
  ProblemSpec s = parse_problem("var x uniform(-1,1)\nvar y uniform(-1,1)\nexpr x/(y + 1/2)\n");
  try {
    (void)analyze(s, config_from_problem(s));
    FAIL("expected unsupported");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Unsupported);
  }
}
