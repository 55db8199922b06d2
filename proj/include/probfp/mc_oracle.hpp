#pragma once

#include "probfp/expr.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace probfp {

enum class Format : std::uint8_t { Binary32, Binary64 };

// binary32 for eps = 2^-24, binary64 for eps = 2^-53; anything else cannot be simulated
[[nodiscard]] Format format_for(const Rational& eps);

using Rng = std::mt19937_64;

// uniform in (0,1), 53 random bits, never 0 or 1
[[nodiscard]] double uniform_open01(Rng& rng);
// inverse-CDF draw from the truncated law
[[nodiscard]] double sample(const Distribution& d, Rng& rng);

// Straight-line program for repeated evaluation.
class Program {
 public:
  explicit Program(const Expr& e);
  // x are already representable in the target format
  [[nodiscard]] double eval_rounded(const std::vector<double>& x, Format f) const;
  // reference value: double for a binary32 target, double-double for binary64
  [[nodiscard]] double eval_reference(const std::vector<double>& x, Format f) const;

 private:
  enum class Op : std::uint8_t { Var, Const, Add, Sub, Mul, Div, Neg };
  struct Instr {
    Op op;
    std::uint32_t var;
    double c32, c64;  // constant rounded to each format
  };
  std::vector<Instr> code_;
};

[[nodiscard]] double eval_rounded(const Expr& e, const std::vector<double>& x, Format f);

struct SampleRun {
  std::uint64_t requested = 0;
  std::uint64_t valid = 0;
  std::uint64_t excluded = 0;  // overflow / NaN in either evaluation
  std::uint64_t violations = 0;
  double threshold = 0;
  double max_error = 0;
  std::uint64_t seed = 0;
  [[nodiscard]] double frequency() const { return valid ? static_cast<double>(violations) / valid : 0.0; }
  // 3-sigma binomial half width at the observed frequency
  [[nodiscard]] double half_width() const;
};

inline constexpr std::uint64_t kMinSamples = 10'000;

// fraction of samples with |f~(x) - f(x)| >= u
[[nodiscard]] SampleRun violation_rate(const ProblemSpec& spec, double u, std::uint64_t samples,
                                       std::uint64_t seed, Format f);

}  // namespace probfp
