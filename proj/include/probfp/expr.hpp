#pragma once

#include "probfp/rational.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace probfp {

enum class NodeKind : std::uint8_t { Const, Var, RelErr, AbsErr, Neg, Add, Sub, Mul, Div };

struct ExprNode;

// Immutable expression handle. Shared subtrees are fine; nothing is ever mutated.
class Expr {
 public:
  Expr() = default;

  static Expr constant(Rational v);
  static Expr variable(std::uint32_t id);
  static Expr rel_err(std::uint32_t op);  // e_op, op counted from 1
  static Expr abs_err(std::uint32_t op);  // d_op
  static Expr neg(Expr child);
  static Expr binary(NodeKind op, Expr lhs, Expr rhs);

  [[nodiscard]] bool null() const noexcept { return !node_; }
  [[nodiscard]] NodeKind kind() const noexcept;
  [[nodiscard]] bool is_binary() const noexcept { return kind() >= NodeKind::Add; }
  [[nodiscard]] bool is_const() const noexcept { return kind() == NodeKind::Const; }
  [[nodiscard]] bool is_error_symbol() const noexcept {
    return kind() == NodeKind::RelErr || kind() == NodeKind::AbsErr;
  }
  [[nodiscard]] const Rational& value() const noexcept;
  [[nodiscard]] std::uint32_t index() const noexcept;
  [[nodiscard]] const Expr& lhs() const noexcept;
  [[nodiscard]] const Expr& rhs() const noexcept;
  [[nodiscard]] const Expr& child() const noexcept { return lhs(); }

  // Div whose denominator is a literal constant
  [[nodiscard]] bool const_denominator() const noexcept {
    return kind() == NodeKind::Div && rhs().is_const();
  }
  [[nodiscard]] bool has_variables() const noexcept;

  // error symbols inside this subtree have keys in [sym_lo, sym_hi] (key = 2*op + is_abs)
  [[nodiscard]] std::uint32_t sym_lo() const noexcept;
  [[nodiscard]] std::uint32_t sym_hi() const noexcept;
  [[nodiscard]] std::size_t size() const noexcept;

  [[nodiscard]] const void* identity() const noexcept { return node_.get(); }

 private:
  explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
  static Expr make(ExprNode n);

  std::shared_ptr<const ExprNode> node_;
};

struct ExprNode {
  NodeKind kind{};
  std::uint32_t index = 0;
  Rational value;
  bool has_vars = false;
  std::uint32_t sym_lo = UINT32_MAX;
  std::uint32_t sym_hi = 0;
  std::size_t size = 1;
  Expr lhs;
  Expr rhs;
};

inline NodeKind Expr::kind() const noexcept { return node_->kind; }
inline const Rational& Expr::value() const noexcept { return node_->value; }
inline std::uint32_t Expr::index() const noexcept { return node_->index; }
inline const Expr& Expr::lhs() const noexcept { return node_->lhs; }
inline const Expr& Expr::rhs() const noexcept { return node_->rhs; }
inline bool Expr::has_variables() const noexcept { return node_->has_vars; }
inline std::uint32_t Expr::sym_lo() const noexcept { return node_->sym_lo; }
inline std::uint32_t Expr::sym_hi() const noexcept { return node_->sym_hi; }
inline std::size_t Expr::size() const noexcept { return node_->size; }

[[nodiscard]] std::uint32_t symbol_key(const Expr& sym);  // for RelErr/AbsErr leaves
[[nodiscard]] bool structurally_equal(const Expr& a, const Expr& b);
[[nodiscard]] std::size_t count_rounded_ops(const Expr& e);
[[nodiscard]] bool contains_symbol(const Expr& e, std::uint32_t key);
[[nodiscard]] bool contains_variable(const Expr& e, std::uint32_t id);
void collect_variables(const Expr& e, std::vector<bool>& used);

enum class Family : std::uint8_t { Uniform, Normal, Laplace };
enum class SignClass : std::uint8_t { Spans, NonNeg, NonPos };

struct Distribution {
  Family family = Family::Uniform;
  Rational lower;
  Rational upper;
  Rational scale = 1;  // Laplace only

  [[nodiscard]] double a() const { return to_double(lower); }
  [[nodiscard]] double b() const { return to_double(upper); }
  [[nodiscard]] double sigma() const { return to_double(scale); }
  [[nodiscard]] SignClass sign() const;
};

[[nodiscard]] Distribution make_uniform(Rational a, Rational b);
[[nodiscard]] Distribution make_normal(Rational a, Rational b);
[[nodiscard]] Distribution make_laplace(Rational a, Rational b, Rational sigma);
[[nodiscard]] std::string describe(const Distribution& d);

struct Variable {
  std::string name;
  Distribution dist;
};

struct Precision {
  std::string name;  // "single", "double" or "custom"
  Rational eps;
  Rational delta;
};

[[nodiscard]] Precision single_precision();
[[nodiscard]] Precision double_precision();

struct ProblemSpec {
  std::vector<Variable> variables;
  Expr expr;
  std::optional<Precision> precision;
  std::optional<Rational> confidence;

  [[nodiscard]] std::vector<std::string> names() const;
  [[nodiscard]] std::vector<Distribution> distributions() const;
};

[[nodiscard]] ProblemSpec parse_problem(std::string_view text);
// expression over already-declared names; line is only used in messages
[[nodiscard]] Expr parse_expression(std::string_view text, const std::vector<std::string>& names,
                                    int line = 1, int column_offset = 0);

// minimal parentheses; reparses to a structurally identical tree
[[nodiscard]] std::string to_string(const Expr& e, const std::vector<std::string>& names);

struct StructuralForm {
  enum class Kind : std::uint8_t { DivisionFree, TopFraction, Unsupported };
  Kind kind = Kind::DivisionFree;
  Expr numerator;
  Expr denominator;
  std::string reason;
};

[[nodiscard]] StructuralForm classify(const Expr& e);
[[nodiscard]] bool division_free(const Expr& e);

enum class SignCertificate : std::uint8_t { Positive, Negative, Indeterminate };
[[nodiscard]] SignCertificate check_denominator_sign(const Expr& q, const std::vector<Distribution>& dists);

}  // namespace probfp
