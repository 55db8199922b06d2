#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace probfp;
using testsupport::quadrature_moment;

namespace {

Polynomial var(std::uint32_t i, Tag t = Tag::Orig) { return Polynomial::symbol(Symbol::var(i, t)); }

// |got - ref| within rel of the reference, measured against E|x|^k when the signed value cancels
bool close(double got, double ref, double scale, double rel) {
  return std::fabs(got - ref) <= rel * std::max(std::fabs(ref), scale) + 1e-300;
}

}  // namespace

TEST_CASE("moments agree with quadrature") {
  std::mt19937_64 g(99);
  std::uniform_real_distribution<double> lo_d(-5, 5), w_d(0.05, 6), s_d(0.3, 3);
  int failures = 0;
  for (int fam = 0; fam < 3; ++fam)
    for (int t = 0; t < 12; ++t) {
      double lo = lo_d(g), hi = lo + w_d(g);
      Rational a = from_double(lo), b = from_double(hi);
      Distribution d = fam == 0 ? make_uniform(a, b) : fam == 1 ? make_normal(a, b)
                                                               : make_laplace(a, b, from_double(s_d(g)));
      MomentTable tab(d, {d.a(), d.b()}, 36);
      for (int k = 0; k <= 36; ++k) {
        double scale = tab.abs_moment(Component::Orig, k);
        for (Component c : {Component::Orig, Component::Pos, Component::Neg}) {
          double ref = quadrature_moment(d, {d.a(), d.b()}, c, k);
          double got = tab.moment(c, k);
          if (!close(got, ref, c == Component::Orig ? scale : 0, 1e-9)) {
            ++failures;
            INFO(describe(d), " k=", k, " comp=", static_cast<int>(c), " got=", got, " ref=", ref);
            CHECK(false);
          }
          CHECK(raw_moment(d, {d.a(), d.b()}, c, k) == doctest::Approx(got).epsilon(1e-12));
        }
      }
    }
  CHECK(failures == 0);
}

TEST_CASE("normalization and side masses") {
  for (Distribution d : {make_uniform(-1, 2), make_normal(-3, 1), make_laplace(-1, 4, 2), make_normal(2, 5)}) {
    MomentTable t(d, support(d), 4);
    CHECK(t.moment(Component::Orig, 0) == doctest::Approx(1).epsilon(1e-15));
    CHECK(t.moment(Component::Pos, 0) + t.moment(Component::Neg, 0) == doctest::Approx(1).epsilon(1e-14));
    // mass is the probability of the range under the untruncated law
    double m = d.family == Family::Uniform ? 1.0 : testsupport::integrate(d, d.a(), d.b(), [](double) { return 1.0; });
    CHECK(t.mass() == doctest::Approx(m).epsilon(1e-12));
    // E[x] = E[x+] - E[x-]
    CHECK(t.moment(Component::Orig, 1) ==
          doctest::Approx(t.moment(Component::Pos, 1) - t.moment(Component::Neg, 1)).epsilon(1e-13));
  }
}

TEST_CASE("moments outside the support or above the order limit are rejected") {
  Distribution d = make_uniform(0, 1);
  CHECK_THROWS_AS((void)raw_moment(d, {-1, 1}, Component::Orig, 2), Error);
  CHECK_THROWS_AS((void)raw_moment(d, {0, 1}, Component::Orig, 65), Error);
}

TEST_CASE("vanishing mass is diagnosed as DZ") {
  Distribution d = make_normal(40, 41);
  try {
    (void)raw_moment(d, support(d), Component::Orig, 2);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFinite);
    CHECK(std::string(e.what()).find("DZ") != std::string::npos);
  }
}

TEST_CASE("far tails stay accurate") {
  Distribution d = make_normal(8, 9);
  double ref = quadrature_moment(d, {8, 9}, Component::Orig, 10);
  CHECK(raw_moment(d, {8, 9}, Component::Orig, 10) == doctest::Approx(ref).epsilon(1e-10));
  Distribution l = make_laplace(30, 31, 1);
  CHECK(raw_moment(l, {30, 31}, Component::Orig, 6) ==
        doctest::Approx(quadrature_moment(l, {30, 31}, Component::Orig, 6)).epsilon(1e-10));
}

TEST_CASE("grouping rules for mixed factors of one variable") {
  std::vector<Distribution> d{make_laplace(-2, 3, 1)};
  MomentTable t(d[0], support(d[0]), 8);
  auto e = [&](const Polynomial& p) { return poly_expectation(p, d).value; };
  // x^a (x+)^b = (x+)^(a+b), x^a (x-)^c = (-1)^a (x-)^(a+c)
  CHECK(e(var(0) * var(0) * var(0, Tag::Pos)) == doctest::Approx(t.moment(Component::Pos, 3)));
  CHECK(e(var(0) * var(0, Tag::Neg)) == doctest::Approx(-t.moment(Component::Neg, 2)));
  CHECK(e(var(0) * var(0) * var(0, Tag::Neg)) == doctest::Approx(t.moment(Component::Neg, 3)));
  CHECK(e(var(0, Tag::Pos) * var(0, Tag::Neg)) == 0.0);
  // quadrature of x * max(-x, 0)^2
  double q = testsupport::integrate(d[0], -2, 0, [](double x) { return x * x * x; }) /
             testsupport::integrate(d[0], -2, 3, [](double) { return 1.0; });
  CHECK(e(var(0) * var(0, Tag::Neg) * var(0, Tag::Neg)) == doctest::Approx(q).epsilon(1e-12));
}

TEST_CASE("expectation of the x1*x2 + x3 PN polynomial squared") {
  std::vector<Distribution> d(3, make_uniform(-1, 1));
  Polynomial xy = (var(0, Tag::Pos) + var(0, Tag::Neg)) * (var(1, Tag::Pos) + var(1, Tag::Neg));
  Polynomial p = xy.scaled(2) + var(2, Tag::Pos) + var(2, Tag::Neg);
  // E[(2|x1 x2| + |x3|)^2] = 4 E[x^2]^2 + 4 E|x|^2 E|x| ... written with E[x^2] = 1/3, E|x| = 1/2
  double expect = 4.0 / 9 + 4 * 0.25 * 0.5 + 1.0 / 3;
  Expectation ex = poly_expectation(p * p, d);
  CHECK(ex.value == doctest::Approx(expect).epsilon(1e-15));
  CHECK(ex.upper() >= ex.value);
  CHECK(ex.lower() <= ex.value);
}

TEST_CASE("partition weights") {
  std::vector<Distribution> d{make_normal(-1, 2), make_laplace(-3, 1, 1), make_uniform(0, 4)};
  Partition p(d, {0, 1, 2}, 5, 1000);
  CHECK(p.size() == 125);
  double total = 0;
  std::vector<std::uint32_t> idx;
  for (std::size_t i = 0; i < p.size(); ++i) {
    SubRegion r = p.region(i);
    CHECK(r.weight >= 0);
    CHECK(r.weight <= 1);
    total += r.weight;
    p.decode(i, idx);
    CHECK(idx == r.index);
  }
  CHECK(total == doctest::Approx(1).epsilon(1e-12));
  // last variable varies fastest
  CHECK(p.region(1).index == std::vector<std::uint32_t>{0, 0, 1});
  CHECK(p.region(5).index == std::vector<std::uint32_t>{0, 1, 0});
  // equal widths
  CHECK(p.piece(2, 1).range.lo == doctest::Approx(0.8));
  CHECK(p.piece(2, 1).range.hi == doctest::Approx(1.6));
  // one piece: whole box, weight 1
  Partition one(d, {0, 1, 2}, 1, 1);
  CHECK(one.size() == 1);
  CHECK(one.region(0).weight == doctest::Approx(1).epsilon(1e-15));
  CHECK_THROWS_AS(Partition(d, {0, 1, 2}, 11, 1000), Error);
}

TEST_CASE("conditional law on a sub-range is the re-truncated law") {
  Distribution d = make_laplace(-2, 5, 1.5);
  Range r{0.5, 2.0};
  for (int k = 0; k <= 8; ++k)
    CHECK(raw_moment(d, r, Component::Orig, k) ==
          doctest::Approx(quadrature_moment(d, r, Component::Orig, k)).epsilon(1e-11));
  CHECK(subrange_weight(d, r) == doctest::Approx(testsupport::integrate(d, 0.5, 2.0, [](double) { return 1.0; }) /
                                                  testsupport::integrate(d, -2, 5, [](double) { return 1.0; }))
                                     .epsilon(1e-12));
}
