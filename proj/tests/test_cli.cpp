#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "probfp/cli.hpp"
#include "probfp/expr.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "probfp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = probfp::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string write_temp(const std::string& name, const std::string& text) {
  std::string path = "/tmp/probfp_test_" + name;
  std::ofstream(path) << text;
  return path;
}

const std::string kEx1 = write_temp("ex1.prob",
                                    "prec single\nconf 0.99\nvar x1 uniform(-1,1)\nvar x2 uniform(-1,1)\n"
                                    "var x3 uniform(-1,1)\nexpr x1*x2 + x3\n");
const std::string kEx2 = write_temp("ex2.prob",
                                    "prec single\nconf 0.99\nvar x1 uniform(-1,1)\nvar x2 uniform(-1,1)\n"
                                    "var x3 uniform(-1,1)\nexpr (x1*x2)/(x3 + 5)\n");

}  // namespace

TEST_CASE("analyze prints the three thresholds") {
  Result r = run({"analyze", kEx1, "--mode", "nm", "--order", "2"});
  CHECK(r.code == 0);
  CHECK(r.out.find("first order") != std::string::npos);
  CHECK(r.out.find("second order") != std::string::npos);
  CHECK(r.out.find("total") != std::string::npos);
}

TEST_CASE("JSON report schema and exact round trip") {
  Result r = run({"analyze", kEx1, "--mode", "nm", "--order", "2", "--json"});
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  for (const char* k : {"threshold_total", "threshold_first_order", "threshold_second_order", "mode", "order",
                        "partitions", "confidence", "eps", "delta", "timings", "diagnostics"})
    CHECK(j.contains(k));
  double u = j["threshold_first_order"].get<double>();
  CHECK(u == doctest::Approx(6.74e-7).epsilon(0.01));
  CHECK(j["threshold_second_order"].get<double>() == doctest::Approx(3.553e-15).epsilon(1e-3));
  CHECK(j["mode"] == "nm");
  // every number re-serializes to the same text, so it re-parses to the same double
  json again = json::parse(j.dump());
  CHECK(again["threshold_total"].get<double>() == j["threshold_total"].get<double>());
  std::ostringstream s17;
  s17.precision(17);
  s17 << j["threshold_total"].get<double>();
  CHECK(std::stod(s17.str()) == j["threshold_total"].get<double>());
}

TEST_CASE("fraction in div mode reports search diagnostics") {
  Result r = run({"analyze", kEx2, "--mode", "div", "--order", "2", "--json"});
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  CHECK(std::isfinite(j["threshold_total"].get<double>()));
  CHECK(j["diagnostics"]["ell"].get<double>() > 0);
  CHECK(j["diagnostics"]["r"].get<double>() > j["diagnostics"]["ell"].get<double>());
  CHECK(j["diagnostics"]["mu"].get<double>() < 0);
  CHECK(j["diagnostics"]["denominator_power"] == 1);
}

TEST_CASE("flags override file directives") {
  Result r = run({"analyze", kEx1, "--mode", "nm", "--prec", "double", "--json"});
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  CHECK(j["eps"].get<double>() == std::ldexp(1.0, -53));
  Result c = run({"analyze", kEx1, "--mode", "nm", "--confidence", "0.9", "--json"});
  CHECK(json::parse(c.out)["confidence"].get<double>() == 0.9);
  Result e = run({"analyze", kEx1, "--mode", "nm", "--eps", "0x1p-11", "--delta", "0x1p-25", "--json"});
  CHECK(json::parse(e.out)["eps"].get<double>() == std::ldexp(1.0, -11));
}

TEST_CASE("sweep reports the best order") {
  Result a = run({"analyze", kEx1, "--mode", "nm", "--order", "2", "--json"});
  Result b = run({"analyze", kEx1, "--mode", "nm", "--order", "4", "--json"});
  Result s = run({"analyze", kEx1, "--mode", "nm", "--sweep=2,4", "--json"});
  REQUIRE(s.code == 0);
  double ta = json::parse(a.out)["threshold_total"], tb = json::parse(b.out)["threshold_total"];
  json js = json::parse(s.out);
  CHECK(js["threshold_total"].get<double>() == std::min(ta, tb));
  CHECK(js["diagnostics"]["sweep"].size() == 2);
  Result full = run({"analyze", kEx1, "--mode", "nm", "--sweep", "--json"});
  REQUIRE(full.code == 0);
  CHECK(json::parse(full.out)["threshold_total"].get<double>() <= ta);
}

TEST_CASE("exit codes") {
  CHECK(run({"analyze", "/nonexistent.prob"}).code == 2);
  CHECK(run({"analyze", write_temp("bad.prob", "var x uniform(0,1)\nexpr x + y\n")}).code == 2);
  CHECK(run({"analyze", kEx1, "--order", "abc"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"analyze", kEx1, "--confidence", "1.5"}).code == 2);
  CHECK(run({"analyze", kEx1, "--mode", "div"}).code == 3);
  CHECK(run({"analyze", write_temp("nest.prob", "var x uniform(1,2)\nexpr 1/(1/x + 1)\n")}).code == 3);
  CHECK(run({"analyze", write_temp("zero.prob", "var x uniform(-1,1)\nvar y uniform(-1,1)\nexpr x/y\n")}).code == 3);
  CHECK(run({"analyze", kEx1, "--mode", "cmb", "--order", "2", "--partitions", "1000"}).code == 4);
  Result dz = run({"analyze", write_temp("dz.prob", "var x normal(40, 41)\nexpr x*x\n"), "--mode", "nm"});
  CHECK(dz.code == 5);
  CHECK(dz.err.find("DZ") != std::string::npos);
  CHECK(run({"analyze", kEx1, "--sweep", "--timeout-per-order", "0"}).code == 6);
  CHECK(run({"analyze", kEx2, "--mode", "div", "--partitions", "1"}).code == 1);
}

TEST_CASE("stdout carries only the report") {
  Result r = run({"analyze", write_temp("dz2.prob", "var x normal(40, 41)\nexpr x*x\n")});
  CHECK(r.out.empty());
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("validate") {
  Result a = run({"analyze", kEx1, "--mode", "nm", "--json"});
  std::string rep = write_temp("rep.json", a.out);
  Result v = run({"validate", kEx1, "--report", rep, "--samples", "100000", "--json"});
  CHECK(v.code == 0);
  json j = json::parse(v.out);
  CHECK(j["pass"] == true);
  CHECK(j["frequency"].get<double>() <= 0.01);
  Result z = run({"validate", kEx1, "--threshold", "0", "--samples", "20000"});
  CHECK(z.code == 1);
  CHECK(z.out.find("FAIL") != std::string::npos);
  CHECK(run({"validate", kEx1, "--threshold", "1e-6", "--samples", "100"}).code == 2);
  CHECK(run({"validate", kEx1}).code == 2);
  CHECK(run({"validate", kEx1, "--threshold", "1e-6", "--eps", "0x1p-11"}).code == 2);
}

TEST_CASE("bound") {
  Result r = run({"bound", kEx1, "--expr", "x1 - x2", "--json"});
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  CHECK(j["struct_bound"].get<double>() == 2.0);
  Result i = run({"bound", kEx1, "--expr", "x3 + 5", "--json"});
  CHECK(json::parse(i.out)["interval"][0].get<double>() == 4.0);
  CHECK(run({"bound", kEx1, "--expr", "1/x1"}).code == 3);
}

TEST_CASE("gen-dot") {
  Result one = run({"gen-dot", "1"});
  REQUIRE(one.code == 0);
  probfp::ProblemSpec s = probfp::parse_problem(one.out);
  CHECK(s.variables.size() == 2);
  CHECK(probfp::count_rounded_ops(s.expr) == 1);
  CHECK(run({"gen-dot", "3"}).out == probfp::gen_dot(3));
  CHECK(run({"gen-dot", "0"}).code == 2);
  std::string f = write_temp("dot25.prob", probfp::gen_dot(25));
  Result a = run({"analyze", f, "--mode", "nm", "--order", "2", "--json"});
  Result b = run({"analyze", f, "--mode", "nm", "--order", "2", "--json"});
  REQUIRE(a.code == 0);
  double ua = json::parse(a.out)["threshold_first_order"], ub = json::parse(b.out)["threshold_first_order"];
  CHECK(ua == ub);
  CHECK(ua == doctest::Approx(5.30e-5).epsilon(0.02));
}
