#pragma once

#include "probfp/expr.hpp"
#include "probfp/polynomial.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace probfp {

enum class Component : std::uint8_t { Orig, Pos, Neg };

struct Range {
  double lo;
  double hi;
};

inline constexpr int kDefaultMaxMomentOrder = 64;

[[nodiscard]] double normal_pdf(double x);
[[nodiscard]] double normal_cdf(double x);
[[nodiscard]] double laplace_cdf(double x, double sigma);
// pre-truncation CDF of the family
[[nodiscard]] double cdf(const Distribution& d, double x);
// I(c,k) = integral of x^k e^{-x} over [0,c], c >= 0
[[nodiscard]] double laplace_partial(double c, int k);

// Moments 0..kmax of one law re-truncated to a range, for all three components.
// The k = 0 entries of Pos/Neg hold the probability of the positive/negative side.
class MomentTable {
 public:
  MomentTable() = default;
  MomentTable(const Distribution& d, Range r, int kmax);

  [[nodiscard]] double moment(Component c, int k) const;
  // magnitude of the same quantity: E|x|^k for Orig, identical to moment() otherwise
  [[nodiscard]] double abs_moment(Component c, int k) const;
  [[nodiscard]] double mass() const noexcept { return mass_; }  // pre-truncation probability of the range
  [[nodiscard]] int kmax() const noexcept { return static_cast<int>(orig_.size()) - 1; }

 private:
  std::vector<double> orig_, pos_, neg_;
  double mass_ = 0;
};

[[nodiscard]] double raw_moment(const Distribution& d, Range r, Component c, int k,
                                int max_order = kDefaultMaxMomentOrder);
[[nodiscard]] double subrange_weight(const Distribution& d, Range r);
[[nodiscard]] Range support(const Distribution& d);

struct SubRange {
  std::uint32_t var = 0;
  Range range{};
  double weight = 1;
};

struct SubRegion {
  std::vector<std::uint32_t> index;  // 0-based multi-index
  std::vector<SubRange> ranges;
  double weight = 1;
};

// Equal-width tiling of the listed variables' supports, b pieces each, lexicographic order.
class Partition {
 public:
  Partition(const std::vector<Distribution>& dists, std::vector<std::uint32_t> vars, unsigned b,
            std::size_t region_cap);

  [[nodiscard]] std::size_t size() const noexcept { return count_; }
  [[nodiscard]] unsigned pieces() const noexcept { return b_; }
  [[nodiscard]] const std::vector<std::uint32_t>& vars() const noexcept { return vars_; }
  [[nodiscard]] SubRegion region(std::size_t i) const;
  // piece j of the s-th listed variable
  [[nodiscard]] const SubRange& piece(std::size_t s, unsigned j) const { return pieces_[s][j]; }
  void decode(std::size_t i, std::vector<std::uint32_t>& idx) const;

 private:
  std::vector<std::uint32_t> vars_;
  unsigned b_;
  std::size_t count_ = 1;
  std::vector<std::vector<SubRange>> pieces_;
};

struct Expectation {
  double value = 0;
  double magnitude = 0;  // sum of |c_t| E|t|; scales the floating error
  static constexpr double inflation = 1e-9;
  [[nodiscard]] double upper() const { return value + inflation * magnitude; }
  [[nodiscard]] double lower() const { return value - inflation * magnitude; }
};

[[nodiscard]] double term_expectation(const Term& t, const std::vector<Distribution>& dists,
                                      const SubRegion* region = nullptr);
[[nodiscard]] Expectation poly_expectation(const Polynomial& p, const std::vector<Distribution>& dists,
                                           const SubRegion* region = nullptr);

// Polynomial in a form ready for repeated expectation over many regions.
class CompiledPoly {
 public:
  struct Item {
    std::uint32_t var;
    Component comp;
    std::uint16_t k;
  };
  explicit CompiledPoly(const Polynomial& p);

  [[nodiscard]] std::size_t terms() const noexcept { return coef_.size(); }
  [[nodiscard]] int max_order() const noexcept { return max_k_; }
  [[nodiscard]] const std::vector<std::uint32_t>& vars() const noexcept { return vars_; }

  // tables[v] must hold the moment table of variable v for the region
  [[nodiscard]] Expectation expect(const std::vector<const MomentTable*>& tables) const;

 private:
  std::vector<double> coef_;
  std::vector<std::uint32_t> start_;
  std::vector<Item> items_;
  std::vector<std::uint32_t> vars_;
  int max_k_ = 0;
};

// Moment tables for every piece of a partition, shared by all polynomials evaluated on it.
class RegionMoments {
 public:
  RegionMoments(const std::vector<Distribution>& dists, const Partition& part, int kmax);

  [[nodiscard]] const Partition& partition() const noexcept { return part_; }
  // tables indexed by variable id for region i (unlisted variables point at nullptr)
  void tables_for(std::size_t i, std::vector<const MomentTable*>& out) const;

 private:
  const Partition& part_;
  std::size_t nvars_;
  std::vector<std::vector<MomentTable>> tables_;  // [slot][piece]
};

}  // namespace probfp
