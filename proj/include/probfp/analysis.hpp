#pragma once

#include "probfp/expr.hpp"
#include "probfp/fp_model.hpp"
#include "probfp/threshold.hpp"

#include <string>
#include <vector>

namespace probfp {

struct SweepEntry {
  unsigned order = 0;
  bool ok = false;
  bool timed_out = false;
  double u1 = 0;
  double total = 0;
  double seconds = 0;
  std::string message;
};

struct Diagnostics {
  std::string classification;  // "division-free" or "fraction"
  unsigned ops = 0;
  unsigned denominator_power = 0;
  std::size_t p_terms = 0;
  double ell = 0, r = 0, mu = 0;
  double flag_at_u = 0;
  unsigned iterations = 0;
  std::string remainder_method;  // "exact" or "lagrange"
  std::vector<std::string> notes;
  std::vector<SweepEntry> sweep;
  // filled with --debug
  std::string tilde, p, remainder;
  std::vector<std::string> derivatives;
};

struct ThresholdReport {
  double total = 0;
  double first_order = 0;
  double second_order = 0;
  Mode mode = Mode::Auto;
  unsigned order = 0;
  unsigned partitions = 1;
  double confidence = 0.99;
  Rational eps, delta;
  double seconds_first_order = 0, seconds_second_order = 0, seconds_total = 0;
  Diagnostics diagnostics;
};

// problem-level precision / confidence override the config defaults unless overridden again by the caller
[[nodiscard]] AnalysisConfig config_from_problem(const ProblemSpec& spec);

[[nodiscard]] ThresholdReport analyze(const ProblemSpec& spec, const AnalysisConfig& cfg);

// p of the first-order term, exposed for tests and tools; power is 0 for division-free input
struct FirstOrderForm {
  FlagContext ctx;
  StructuralForm form;
  unsigned ops = 0;
  std::vector<Expr> derivatives;
  FpModel model;
};
[[nodiscard]] FirstOrderForm first_order_form(const ProblemSpec& spec, const AnalysisConfig& cfg,
                                              const Deadline* deadline = nullptr);

}  // namespace probfp
