#pragma once

#include "probfp/error.hpp"
#include "probfp/expr.hpp"
#include "probfp/moments.hpp"
#include "probfp/polynomial.hpp"

#include <optional>
#include <string>
#include <vector>

namespace probfp {

enum class Mode : std::uint8_t { NM, CMB, Div, Auto };

[[nodiscard]] std::string to_string(Mode m);
[[nodiscard]] Mode parse_mode(const std::string& s);

struct AnalysisConfig {
  Rational eps = pow(Rational(1, 2), 24);
  Rational delta = pow(Rational(1, 2), 150);
  double confidence = 0.99;
  unsigned order = 2;
  std::optional<unsigned> partitions;  // unset: size-based default
  bool no_partition = false;
  Mode mode = Mode::Auto;
  double search_tolerance = 1e-3;
  unsigned max_iterations = 60;
  double frac_multiplier = 1e5;
  double timeout_per_order = 90;  // seconds, sweep only
  std::size_t region_cap = 1'000'000;
  std::size_t term_cap = 5'000'000;
  std::size_t remainder_term_cap = 200'000;
  bool force_q2 = false;
  bool sweep = false;
  std::vector<unsigned> sweep_orders = {2, 4, 6, 8, 10, 12, 18, 24, 30, 36};
  bool debug = false;
};

// K_u = p*eps - qpoly*u, where qpoly is |Q|^power written as a polynomial (1 when power is 0)
struct FlagContext {
  Polynomial p;
  Polynomial qpoly = Polynomial::constant(1);
  unsigned power = 0;
  unsigned n = 2;
  std::vector<Distribution> dists;
};

// Per-region central moments prepared once; flag evaluations afterwards are cheap.
// Works in scaled units v = u / eps.
class FlagEvaluator {
 public:
  FlagEvaluator(const FlagContext& ctx, unsigned partitions, std::size_t region_cap, const PolyLimits& limits);

  [[nodiscard]] double flag_scaled(double v) const;                     // partitioned aggregate
  [[nodiscard]] double local_flag_scaled(double v, std::size_t region) const;
  [[nodiscard]] std::size_t regions() const noexcept { return regions_.size(); }
  [[nodiscard]] double region_weight(std::size_t i) const { return regions_[i].weight; }
  [[nodiscard]] double mean_p() const noexcept { return mean_p_; }  // over the whole support
  [[nodiscard]] double mean_q() const noexcept { return mean_q_; }
  [[nodiscard]] unsigned order() const noexcept { return n_; }

 private:
  struct RegionData {
    double weight = 1;
    double mp = 0, mq = 1;
    std::vector<double> central, err;  // index j: E[(p-mp)^j (q-mq)^(n-j)] and its error bound
  };
  unsigned n_;
  bool division_free_;
  double mean_p_ = 0, mean_q_ = 1;
  std::vector<RegionData> regions_;
};

// flag of the plain (unpartitioned) or single-region form at threshold u
[[nodiscard]] double flag(double u, const FlagContext& ctx, const Rational& eps, const SubRegion* region = nullptr);
[[nodiscard]] double partitioned_flag(double u, const FlagContext& ctx, const Rational& eps, unsigned b,
                                      std::size_t region_cap = 1'000'000);

struct SearchResult {
  double u = 0;           // threshold, rounded upward
  double ell = 0, r = 0;  // bracket ends (u units)
  double mu = 0;          // E[K_u] at the returned u (u units)
  double flag = 1;
  unsigned iterations = 0;
  std::string note;
};

[[nodiscard]] double nm_threshold(const Polynomial& p, const std::vector<Distribution>& dists, unsigned n,
                                  double confidence, const Rational& eps, const PolyLimits& limits = {});
[[nodiscard]] SearchResult cmb_threshold(const FlagEvaluator& fe, double nm_u, const AnalysisConfig& cfg);
[[nodiscard]] SearchResult frac_threshold(const FlagEvaluator& fe, const AnalysisConfig& cfg);

}  // namespace probfp
