#include "probfp/cli.hpp"

#include "probfp/analysis.hpp"
#include "probfp/det_bound.hpp"
#include "probfp/error.hpp"
#include "probfp/expr.hpp"
#include "probfp/mc_oracle.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>

namespace probfp {

using nlohmann::json;

std::string gen_dot(unsigned length) {
  if (length == 0) throw Error(ErrorKind::Validation, "dot-product length must be at least 1");
  std::ostringstream os;
  os << "# dot product of two length-" << length << " vectors, entries uniform on (0,1)\n";
  os << "prec single\nconf 0.99\n";
  for (unsigned i = 1; i <= length; ++i) os << "var a" << i << " uniform(0, 1)\n";
  for (unsigned i = 1; i <= length; ++i) os << "var b" << i << " uniform(0, 1)\n";
  os << "expr ";
  for (unsigned i = 1; i <= length; ++i) os << (i > 1 ? " + " : "") << "a" << i << "*b" << i;
  os << "\n";
  return os.str();
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Validation, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

// shared analysis flags
struct Overrides {
  std::string mode = "auto";
  std::optional<unsigned> order;
  std::string sweep;
  bool sweep_set = false;
  std::optional<unsigned> partitions;
  bool no_partition = false;
  std::optional<double> confidence;
  std::string prec;
  std::string eps, delta;
  std::optional<double> timeout;
  bool force_q2 = false;
  bool json = false;
  bool debug = false;
};

void add_precision_flags(CLI::App* sub, Overrides& o) {
  sub->add_option("--confidence", o.confidence, "confidence level c in (0,1)");
  sub->add_option("--prec", o.prec, "single or double")->check(CLI::IsMember({"single", "double"}));
  sub->add_option("--eps", o.eps, "unit round-off (decimal or hex float)");
  sub->add_option("--delta", o.delta, "absolute error floor");
}

AnalysisConfig make_config(const ProblemSpec& spec, const Overrides& o) {
  AnalysisConfig cfg = config_from_problem(spec);
  if (o.prec == "single") {
    cfg.eps = single_precision().eps;
    cfg.delta = single_precision().delta;
  } else if (o.prec == "double") {
    cfg.eps = double_precision().eps;
    cfg.delta = double_precision().delta;
  }
  if (!o.eps.empty()) cfg.eps = parse_rational(o.eps);
  if (!o.delta.empty()) cfg.delta = parse_rational(o.delta);
  if (cfg.eps <= 0 || cfg.delta <= 0) throw Error(ErrorKind::Validation, "eps and delta must be positive");
  if (o.confidence) cfg.confidence = *o.confidence;
  if (!(cfg.confidence > 0 && cfg.confidence < 1)) throw Error(ErrorKind::Validation, "confidence must lie in (0,1)");
  cfg.mode = parse_mode(o.mode);
  if (o.order) cfg.order = *o.order;
  cfg.partitions = o.partitions;
  cfg.no_partition = o.no_partition;
  if (o.timeout) cfg.timeout_per_order = *o.timeout;
  cfg.force_q2 = o.force_q2;
  cfg.debug = o.debug;
  if (o.sweep_set) {
    cfg.sweep = true;
    if (!o.sweep.empty()) {
      cfg.sweep_orders.clear();
      std::stringstream ss(o.sweep);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          std::size_t used = 0;
          int v = std::stoi(item, &used);
          if (used != item.size() || v <= 0) throw std::invalid_argument(item);
          cfg.sweep_orders.push_back(static_cast<unsigned>(v));
        } catch (const std::exception&) {
          throw Error(ErrorKind::Validation, "bad sweep order '" + item + "'");
        }
      }
    }
  }
  return cfg;
}

json report_json(const ThresholdReport& r) {
  const Diagnostics& d = r.diagnostics;
  json sweep = json::array();
  for (const SweepEntry& e : d.sweep)
    sweep.push_back({{"order", e.order}, {"ok", e.ok}, {"timed_out", e.timed_out}, {"threshold_first_order", e.u1},
                     {"threshold_total", e.total}, {"seconds", e.seconds}, {"message", e.message}});
  json diag = {{"classification", d.classification},
               {"operations", d.ops},
               {"denominator_power", d.denominator_power},
               {"p_terms", d.p_terms},
               {"ell", d.ell},
               {"r", d.r},
               {"mu", d.mu},
               {"flag_at_threshold", d.flag_at_u},
               {"iterations", d.iterations},
               {"remainder_method", d.remainder_method},
               {"eps_exact", to_string(r.eps)},
               {"delta_exact", to_string(r.delta)},
               {"notes", d.notes},
               {"sweep", sweep}};
  if (!d.tilde.empty()) {
    diag["fp_model"] = d.tilde;
    diag["derivatives"] = d.derivatives;
    diag["p"] = d.p;
    diag["remainder"] = d.remainder;
  }
  return {{"threshold_total", r.total},
          {"threshold_first_order", r.first_order},
          {"threshold_second_order", r.second_order},
          {"mode", to_string(r.mode)},
          {"order", r.order},
          {"partitions", r.partitions},
          {"confidence", r.confidence},
          {"eps", to_double_up(r.eps)},
          {"delta", to_double_up(r.delta)},
          {"timings", {{"first_order", r.seconds_first_order}, {"second_order", r.seconds_second_order},
                       {"total", r.seconds_total}}},
          {"diagnostics", diag}};
}

void print_report(const ThresholdReport& r, std::ostream& out) {
  const Diagnostics& d = r.diagnostics;
  out << "mode          " << to_string(r.mode) << " (" << d.classification;
  if (d.classification == "fraction") out << ", |Q|^" << d.denominator_power;
  out << ")\n";
  out << "order         " << r.order << "\n";
  out << "partitions    " << r.partitions << "\n";
  out << "confidence    " << r.confidence << "\n";
  out << "eps, delta    " << fmt(to_double_up(r.eps)) << ", " << fmt(to_double_up(r.delta)) << "\n";
  out << "first order   " << std::setprecision(17) << r.first_order << "\n";
  out << "second order  " << r.second_order << " (" << d.remainder_method << ")\n";
  out << "total         " << r.total << std::setprecision(6) << "\n";
  if (r.mode != Mode::NM)
    out << "search        l=" << fmt(d.ell) << " r=" << fmt(d.r) << " mu=" << fmt(d.mu) << " flag=" << fmt(d.flag_at_u)
        << " iterations=" << d.iterations << "\n";
  out << "time          first " << fmt(r.seconds_first_order) << " s, second " << fmt(r.seconds_second_order)
      << " s, total " << fmt(r.seconds_total) << " s\n";
  if (d.sweep.size() > 1) {
    out << "sweep (optimal n = " << r.order << ")\n";
    for (const SweepEntry& e : d.sweep) {
      out << "  n=" << e.order << "  ";
      if (e.ok) out << std::setprecision(17) << e.total << std::setprecision(6);
      else out << (e.timed_out ? "timeout" : e.message);
      out << "  (" << fmt(e.seconds) << " s)\n";
    }
  }
}

int fail(const Error& e, std::ostream& err) {
  std::string msg = e.what();
  if (e.kind() == ErrorKind::NonFinite && msg.rfind("DZ", 0) != 0) msg = "DZ: " + msg;
  err << "error: " << msg << "\n";
  return exit_code(e.kind());
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"probabilistic round-off error thresholds"};
  app.require_subcommand(1);

  Overrides ao;
  std::string file;
  auto* an = app.add_subcommand("analyze", "compute a threshold U with P[|err| >= U] <= 1-c");
  an->add_option("file", file, "problem file")->required();
  an->add_option("--mode", ao.mode, "nm, cmb, div or auto")->check(CLI::IsMember({"nm", "cmb", "div", "auto"}));
  an->add_option("--order", ao.order, "analysis order n");
  an->add_option("--sweep", ao.sweep, "sweep analysis orders (optional comma list, use --sweep=2,4)")
      ->expected(0, 1);
  an->add_option("--partitions", ao.partitions, "sub-ranges per variable");
  an->add_flag("--no-partition", ao.no_partition, "disable range partitioning");
  an->add_option("--timeout-per-order", ao.timeout, "seconds per order in a sweep");
  an->add_flag("--force-q2", ao.force_q2, "keep Q^2 in the fractional case");
  an->add_flag("--json", ao.json, "JSON report on stdout");
  an->add_flag("--debug", ao.debug, "dump intermediate forms");
  add_precision_flags(an, ao);

  Overrides vo;
  std::string vfile, report_file;
  std::optional<double> threshold;
  std::uint64_t samples = 1'000'000, seed = 1;
  auto* va = app.add_subcommand("validate", "Monte Carlo check of a threshold");
  va->add_option("file", vfile, "problem file")->required();
  va->add_option("--threshold", threshold, "threshold to test");
  va->add_option("--report", report_file, "analyze --json output supplying threshold_total");
  va->add_option("--samples", samples, "sample count (>= 10000)");
  va->add_option("--seed", seed, "RNG seed");
  va->add_flag("--json", vo.json, "JSON output");
  add_precision_flags(va, vo);

  Overrides bo;
  std::string bfile, bexpr;
  auto* bd = app.add_subcommand("bound", "deterministic bounds over the input ranges");
  bd->add_option("file", bfile, "problem file")->required();
  bd->add_option("--expr", bexpr, "bound this expression instead of the file's");
  bd->add_flag("--json", bo.json, "JSON output");
  add_precision_flags(bd, bo);

  unsigned dot_len = 0;
  auto* gd = app.add_subcommand("gen-dot", "print the dot-product problem of length L");
  gd->add_option("length", dot_len, "vector length")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return exit_code(ErrorKind::Parse);
  }

  try {
    if (*an) {
      ao.sweep_set = an->count("--sweep") > 0;
      ProblemSpec spec = parse_problem(read_file(file));
      AnalysisConfig cfg = make_config(spec, ao);
      ThresholdReport rep = analyze(spec, cfg);
      if (ao.debug) {
        const Diagnostics& d = rep.diagnostics;
        err << "fp model: " << d.tilde << "\n";
        for (std::size_t i = 0; i < d.derivatives.size(); ++i) err << "h" << i + 1 << ": " << d.derivatives[i] << "\n";
        err << "p: " << d.p << "\n";
        err << "R2: " << d.remainder << "\n";
      }
      for (const std::string& n : rep.diagnostics.notes) err << "note: " << n << "\n";
      if (ao.json) out << report_json(rep).dump(2) << "\n";
      else print_report(rep, out);
      return 0;
    }
    if (*va) {
      ProblemSpec spec = parse_problem(read_file(vfile));
      AnalysisConfig cfg = make_config(spec, vo);
      double u = 0;
      if (threshold) {
        u = *threshold;
      } else if (!report_file.empty()) {
        json j;
        try {
          j = json::parse(read_file(report_file));
          u = j.at("threshold_total").get<double>();
        } catch (const json::exception& e) {
          throw Error(ErrorKind::Validation, std::string("bad report file: ") + e.what());
        }
      } else {
        throw Error(ErrorKind::Validation, "validate needs --threshold or --report");
      }
      SampleRun run = violation_rate(spec, u, samples, seed, format_for(cfg.eps));
      double p0 = 1 - cfg.confidence;
      double limit = p0 + 3 * std::sqrt(p0 * (1 - p0) / static_cast<double>(std::max<std::uint64_t>(run.valid, 1)));
      bool pass = run.valid > 0 && run.frequency() <= limit;
      if (vo.json) {
        json j = {{"threshold", u},         {"samples", run.valid},          {"excluded", run.excluded},
                  {"violations", run.violations}, {"frequency", run.frequency()}, {"half_width", run.half_width()},
                  {"limit", limit},         {"max_error", run.max_error},    {"seed", seed},
                  {"pass", pass}};
        out << j.dump(2) << "\n";
      } else {
        out << "threshold     " << std::setprecision(17) << u << std::setprecision(6) << "\n";
        out << "samples       " << run.valid << " (" << run.excluded << " excluded)\n";
        out << "violations    " << run.violations << "\n";
        out << "frequency     " << run.frequency() << " +- " << run.half_width() << " (3 sigma)\n";
        out << "limit         " << limit << "\n";
        out << "max error     " << run.max_error << "\n";
        out << (pass ? "PASS" : "FAIL") << "\n";
      }
      if (run.excluded) err << "note: " << run.excluded << " samples overflowed and were excluded\n";
      return pass ? 0 : 1;
    }
    if (*bd) {
      ProblemSpec spec = parse_problem(read_file(bfile));
      AnalysisConfig cfg = make_config(spec, bo);
      Expr e = bexpr.empty() ? spec.expr : parse_expression(bexpr, spec.names());
      Box box = Box::from_supports(spec.distributions(), cfg.eps, cfg.delta);
      auto [lo, hi] = interval_eval(e, box);
      std::optional<double> sb;
      if (division_free(e)) sb = struct_bound(e, box);
      json j = {{"interval", {lo, hi}}};
      if (sb) j["struct_bound"] = *sb;
      if (bo.json) {
        out << j.dump(2) << "\n";
      } else {
        out << "interval      [" << std::setprecision(17) << lo << ", " << hi << "]\n";
        if (sb) out << "struct bound  " << *sb << "\n";
      }
      return 0;
    }
    if (*gd) {
      out << gen_dot(dot_len);
      return 0;
    }
  } catch (const Error& e) {
    return fail(e, err);
  } catch (const std::bad_alloc&) {
    err << "error: out of memory; try a lower analysis order\n";
    return exit_code(ErrorKind::Resource);
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return exit_code(ErrorKind::Internal);
  }
  return 1;
}

}  // namespace probfp
