#include "probfp/expr.hpp"

#include "probfp/det_bound.hpp"
#include "probfp/error.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_map>

namespace probfp {

// ---- construction -------------------------------------------------------

Expr Expr::make(ExprNode n) { return Expr(std::make_shared<const ExprNode>(std::move(n))); }

Expr Expr::constant(Rational v) {
  ExprNode n;
  n.kind = NodeKind::Const;
  n.value = std::move(v);
  return make(std::move(n));
}

Expr Expr::variable(std::uint32_t id) {
  ExprNode n;
  n.kind = NodeKind::Var;
  n.index = id;
  n.has_vars = true;
  return make(std::move(n));
}

Expr Expr::rel_err(std::uint32_t op) {
  ExprNode n;
  n.kind = NodeKind::RelErr;
  n.index = op;
  n.sym_lo = n.sym_hi = 2 * op;
  return make(std::move(n));
}

Expr Expr::abs_err(std::uint32_t op) {
  ExprNode n;
  n.kind = NodeKind::AbsErr;
  n.index = op;
  n.sym_lo = n.sym_hi = 2 * op + 1;
  return make(std::move(n));
}

Expr Expr::neg(Expr child) {
  ExprNode n;
  n.kind = NodeKind::Neg;
  n.has_vars = child.has_variables();
  n.sym_lo = child.sym_lo();
  n.sym_hi = child.sym_hi();
  n.size = child.size() + 1;
  n.lhs = std::move(child);
  return make(std::move(n));
}

Expr Expr::binary(NodeKind op, Expr lhs, Expr rhs) {
  ExprNode n;
  n.kind = op;
  n.has_vars = lhs.has_variables() || rhs.has_variables();
  n.sym_lo = std::min(lhs.sym_lo(), rhs.sym_lo());
  n.sym_hi = std::max(lhs.sym_hi(), rhs.sym_hi());
  n.size = lhs.size() + rhs.size() + 1;
  n.lhs = std::move(lhs);
  n.rhs = std::move(rhs);
  return make(std::move(n));
}

std::uint32_t symbol_key(const Expr& sym) {
  return 2 * sym.index() + (sym.kind() == NodeKind::AbsErr ? 1 : 0);
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.null() || b.null()) return a.null() == b.null();
  if (a.identity() == b.identity()) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case NodeKind::Const:
      return a.value() == b.value();
    case NodeKind::Var:
    case NodeKind::RelErr:
    case NodeKind::AbsErr:
      return a.index() == b.index();
    case NodeKind::Neg:
      return structurally_equal(a.child(), b.child());
    default:
      return structurally_equal(a.lhs(), b.lhs()) && structurally_equal(a.rhs(), b.rhs());
  }
}

std::size_t count_rounded_ops(const Expr& e) {
  if (e.is_binary()) return 1 + count_rounded_ops(e.lhs()) + count_rounded_ops(e.rhs());
  if (e.kind() == NodeKind::Neg) return count_rounded_ops(e.child());
  return 0;
}

bool contains_symbol(const Expr& e, std::uint32_t key) {
  if (key < e.sym_lo() || key > e.sym_hi()) return false;
  if (e.is_error_symbol()) return symbol_key(e) == key;
  if (e.kind() == NodeKind::Neg) return contains_symbol(e.child(), key);
  if (e.is_binary()) return contains_symbol(e.lhs(), key) || contains_symbol(e.rhs(), key);
  return false;
}

bool contains_variable(const Expr& e, std::uint32_t id) {
  if (!e.has_variables()) return false;
  if (e.kind() == NodeKind::Var) return e.index() == id;
  if (e.kind() == NodeKind::Neg) return contains_variable(e.child(), id);
  return contains_variable(e.lhs(), id) || contains_variable(e.rhs(), id);
}

void collect_variables(const Expr& e, std::vector<bool>& used) {
  if (!e.has_variables()) return;
  if (e.kind() == NodeKind::Var) {
    if (e.index() >= used.size()) used.resize(e.index() + 1, false);
    used[e.index()] = true;
  } else if (e.kind() == NodeKind::Neg) {
    collect_variables(e.child(), used);
  } else if (e.is_binary()) {
    collect_variables(e.lhs(), used);
    collect_variables(e.rhs(), used);
  }
}

// ---- distributions ------------------------------------------------------

SignClass Distribution::sign() const {
  if (lower >= 0) return SignClass::NonNeg;
  if (upper <= 0) return SignClass::NonPos;
  return SignClass::Spans;
}

static void check_bounds(const Rational& a, const Rational& b) {
  if (!(a < b))
    throw Error(ErrorKind::Validation,
                "inverted bounds: lower " + to_string(a) + " is not below upper " + to_string(b));
}

Distribution make_uniform(Rational a, Rational b) {
  check_bounds(a, b);
  return Distribution{Family::Uniform, std::move(a), std::move(b), 1};
}

Distribution make_normal(Rational a, Rational b) {
  check_bounds(a, b);
  return Distribution{Family::Normal, std::move(a), std::move(b), 1};
}

Distribution make_laplace(Rational a, Rational b, Rational sigma) {
  check_bounds(a, b);
  if (sigma <= 0) throw Error(ErrorKind::Validation, "laplace scale must be positive, got " + to_string(sigma));
  return Distribution{Family::Laplace, std::move(a), std::move(b), std::move(sigma)};
}

std::string describe(const Distribution& d) {
  std::string range = to_string(d.lower) + ", " + to_string(d.upper);
  switch (d.family) {
    case Family::Uniform:
      return "uniform(" + range + ")";
    case Family::Normal:
      return "normal(" + range + ")";
    case Family::Laplace:
      return "laplace(" + range + ", " + to_string(d.scale) + ")";
  }
  return {};
}

Precision single_precision() { return {"single", pow(Rational(1, 2), 24), pow(Rational(1, 2), 150)}; }
Precision double_precision() { return {"double", pow(Rational(1, 2), 53), pow(Rational(1, 2), 1075)}; }

std::vector<std::string> ProblemSpec::names() const {
  std::vector<std::string> out;
  out.reserve(variables.size());
  for (const auto& v : variables) out.push_back(v.name);
  return out;
}

std::vector<Distribution> ProblemSpec::distributions() const {
  std::vector<Distribution> out;
  out.reserve(variables.size());
  for (const auto& v : variables) out.push_back(v.dist);
  return out;
}

// ---- lexer / parser -----------------------------------------------------

namespace {

[[noreturn]] void fail_at(int line, int col, const std::string& msg) {
  throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg);
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// length of the numeric literal starting at s[i], or 0
std::size_t scan_number(std::string_view s, std::size_t i) {
  std::size_t j = i;
  auto digit = [&](std::size_t k, bool hex) {
    if (k >= s.size()) return false;
    char c = s[k];
    return hex ? std::isxdigit(static_cast<unsigned char>(c)) != 0 : std::isdigit(static_cast<unsigned char>(c)) != 0;
  };
  bool hex = j + 1 < s.size() && s[j] == '0' && (s[j + 1] == 'x' || s[j + 1] == 'X');
  if (hex) j += 2;
  bool any = false;
  while (digit(j, hex)) { ++j; any = true; }
  if (j < s.size() && s[j] == '.') {
    ++j;
    while (digit(j, hex)) { ++j; any = true; }
  }
  if (!any) return 0;
  char ex = hex ? 'p' : 'e';
  if (j < s.size() && std::tolower(static_cast<unsigned char>(s[j])) == ex) {
    std::size_t k = j + 1;
    if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
    if (digit(k, false)) {
      while (digit(k, false)) ++k;
      j = k;
    }
  }
  return j - i;
}

class ExprParser {
 public:
  ExprParser(std::string_view text, const std::vector<std::string>& names, int line, int col0)
      : s_(text), line_(line), col0_(col0) {
    for (std::size_t i = 0; i < names.size(); ++i) ids_.emplace(names[i], static_cast<std::uint32_t>(i));
  }

  Expr parse() {
    skip_ws();
    if (pos_ >= s_.size()) fail("empty expression");
    Expr e = parse_sum();
    skip_ws();
    if (pos_ < s_.size()) fail(std::string("unexpected '") + s_[pos_] + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { fail_at(line_, col0_ + static_cast<int>(pos_) + 1, msg); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_sum() {
    Expr e = parse_product();
    for (;;) {
      if (accept('+')) e = Expr::binary(NodeKind::Add, e, parse_product());
      else if (accept('-')) e = Expr::binary(NodeKind::Sub, e, parse_product());
      else return e;
    }
  }

  Expr parse_product() {
    Expr e = parse_unary();
    for (;;) {
      if (accept('*')) e = Expr::binary(NodeKind::Mul, e, parse_unary());
      else if (accept('/')) e = Expr::binary(NodeKind::Div, e, parse_unary());
      else return e;
    }
  }

  Expr parse_unary() {
    if (accept('-')) {
      skip_ws();
      // a minus glued to a literal is part of the number; -(3) stays a negation
      if (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
        Expr c = parse_primary();
        return Expr::constant(-c.value());
      }
      return Expr::neg(parse_unary());
    }
    if (accept('+')) return parse_unary();
    return parse_primary();
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t n = scan_number(s_, pos_);
      if (n == 0) fail("malformed number");
      std::string_view lit = s_.substr(pos_, n);
      Rational v;
      try {
        v = parse_rational(lit);
      } catch (const Error& err) {
        fail(err.what());
      }
      pos_ += n;
      return Expr::constant(std::move(v));
    }
    if (ident_start(c)) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
      std::string name(s_.substr(start, pos_ - start));
      auto it = ids_.find(name);
      if (it == ids_.end()) {
        pos_ = start;
        fail("undeclared variable " + name);
      }
      return Expr::variable(it->second);
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_;
  int col0_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Rational literal with optional sign inside a directive
Rational directive_number(std::string_view tok, int line, int col) {
  tok = trim(tok);
  if (tok.empty()) fail_at(line, col, "missing number");
  try {
    return parse_rational(tok);
  } catch (const Error& e) {
    fail_at(line, col, e.what());
  }
}

}  // namespace

Expr parse_expression(std::string_view text, const std::vector<std::string>& names, int line, int column_offset) {
  return ExprParser(text, names, line, column_offset).parse();
}

ProblemSpec parse_problem(std::string_view text) {
  ProblemSpec spec;
  std::optional<std::pair<std::string, std::pair<int, int>>> expr_text;
  std::unordered_map<std::string, int> declared;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    std::size_t lead = 0;
    while (lead < raw.size() && std::isspace(static_cast<unsigned char>(raw[lead]))) ++lead;
    std::string_view body = trim(raw);
    if (body.empty()) {
      if (end == text.size()) break;
      continue;
    }
    std::size_t kw_end = 0;
    while (kw_end < body.size() && !std::isspace(static_cast<unsigned char>(body[kw_end]))) ++kw_end;
    std::string_view kw = body.substr(0, kw_end);
    std::string_view rest = trim(body.substr(kw_end));
    int rest_col = static_cast<int>(lead + (rest.empty() ? body.size() : rest.data() - body.data())) + 1;

    if (kw == "expr") {
      if (expr_text) fail_at(line_no, static_cast<int>(lead) + 1, "more than one expr line");
      expr_text = {std::string(rest), {line_no, rest_col - 1}};
    } else if (kw == "conf") {
      Rational c = directive_number(rest, line_no, rest_col);
      if (!(c > 0 && c < 1)) fail_at(line_no, rest_col, "confidence must lie in (0,1)");
      spec.confidence = c;
    } else if (kw == "prec") {
      if (rest == "single") {
        spec.precision = single_precision();
      } else if (rest == "double") {
        spec.precision = double_precision();
      } else {
        Precision p{"custom", 0, 0};
        bool have_eps = false, have_delta = false;
        std::istringstream in{std::string(rest)};
        std::string item;
        while (in >> item) {
          auto eq = item.find('=');
          if (eq == std::string::npos) fail_at(line_no, rest_col, "expected single, double or eps=<r> delta=<r>");
          std::string key = item.substr(0, eq);
          Rational v = directive_number(std::string_view(item).substr(eq + 1), line_no, rest_col);
          if (key == "eps") {
            p.eps = v;
            have_eps = true;
          } else if (key == "delta") {
            p.delta = v;
            have_delta = true;
          } else {
            fail_at(line_no, rest_col, "unknown precision key '" + key + "'");
          }
        }
        if (!have_eps || !have_delta) fail_at(line_no, rest_col, "prec needs both eps= and delta=");
        if (p.eps <= 0) fail_at(line_no, rest_col, "eps must be positive");
        if (p.delta < 0) fail_at(line_no, rest_col, "delta must be nonnegative");
        spec.precision = p;
      }
    } else if (kw == "var") {
      std::size_t i = 0;
      while (i < rest.size() && ident_char(rest[i])) ++i;
      if (i == 0 || !ident_start(rest[0])) fail_at(line_no, rest_col, "expected variable name");
      std::string name(rest.substr(0, i));
      if (declared.count(name)) fail_at(line_no, rest_col, "duplicate variable declaration " + name);
      std::string_view dist = trim(rest.substr(i));
      int dist_col = rest_col + static_cast<int>(dist.data() - rest.data());
      auto open = dist.find('(');
      if (open == std::string_view::npos || dist.back() != ')')
        fail_at(line_no, dist_col, "expected family(args) after variable name");
      std::string family(trim(dist.substr(0, open)));
      std::string_view args = dist.substr(open + 1, dist.size() - open - 2);
      std::vector<Rational> vals;
      std::size_t a0 = 0;
      while (a0 <= args.size()) {
        std::size_t comma = args.find(',', a0);
        if (comma == std::string_view::npos) comma = args.size();
        vals.push_back(directive_number(args.substr(a0, comma - a0), line_no,
                                        dist_col + static_cast<int>(open + 1 + a0)));
        a0 = comma + 1;
      }
      Distribution d;
      try {
        if (family == "uniform" && vals.size() == 2) d = make_uniform(vals[0], vals[1]);
        else if (family == "normal" && vals.size() == 2) d = make_normal(vals[0], vals[1]);
        else if (family == "laplace" && vals.size() == 3) d = make_laplace(vals[0], vals[1], vals[2]);
        else if (family == "uniform" || family == "normal" || family == "laplace")
          fail_at(line_no, dist_col, "wrong number of arguments for " + family);
        else
          fail_at(line_no, dist_col, "unknown distribution family '" + family + "'");
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Parse) throw;
        fail_at(line_no, dist_col, e.what());
      }
      declared.emplace(name, static_cast<int>(spec.variables.size()));
      spec.variables.push_back({name, d});
    } else {
      fail_at(line_no, static_cast<int>(lead) + 1, "unknown directive '" + std::string(kw) + "'");
    }
    if (end == text.size()) break;
  }
  if (!expr_text) throw Error(ErrorKind::Parse, "missing expr line");
  spec.expr = parse_expression(expr_text->first, spec.names(), expr_text->second.first, expr_text->second.second);
  return spec;
}

// ---- printing -----------------------------------------------------------

namespace {

int precedence(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::Add:
    case NodeKind::Sub:
      return 1;
    case NodeKind::Mul:
    case NodeKind::Div:
      return 2;
    case NodeKind::Neg:
      return 3;
    default:
      return 4;
  }
}

void print(const Expr& e, const std::vector<std::string>& names, std::string& out) {
  switch (e.kind()) {
    case NodeKind::Const: {
      std::string s = to_string(e.value());
      if (e.value() < 0 || !is_terminating(e.value())) out += "(" + s + ")";
      else out += s;
      return;
    }
    case NodeKind::Var:
      out += e.index() < names.size() ? names[e.index()] : "x" + std::to_string(e.index());
      return;
    case NodeKind::RelErr:
      out += "e" + std::to_string(e.index());
      return;
    case NodeKind::AbsErr:
      out += "d" + std::to_string(e.index());
      return;
    case NodeKind::Neg:
      out += "-";
      if (precedence(e.child()) < 3 || (e.child().is_const() && e.child().value() >= 0)) {
        out += "(";
        print(e.child(), names, out);
        out += ")";
      } else {
        print(e.child(), names, out);
      }
      return;
    default:
      break;
  }
  int p = precedence(e);
  bool lp = precedence(e.lhs()) < p;
  bool rp = precedence(e.rhs()) <= p;
  if (lp) out += "(";
  print(e.lhs(), names, out);
  if (lp) out += ")";
  switch (e.kind()) {
    case NodeKind::Add: out += " + "; break;
    case NodeKind::Sub: out += " - "; break;
    case NodeKind::Mul: out += "*"; break;
    default: out += "/"; break;
  }
  if (rp) out += "(";
  print(e.rhs(), names, out);
  if (rp) out += ")";
}

}  // namespace

std::string to_string(const Expr& e, const std::vector<std::string>& names) {
  std::string out;
  print(e, names, out);
  return out;
}

// ---- classification -----------------------------------------------------

bool division_free(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::Neg:
      return division_free(e.child());
    case NodeKind::Div:
      return e.const_denominator() && division_free(e.lhs());
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
      return division_free(e.lhs()) && division_free(e.rhs());
    default:
      return true;
  }
}

StructuralForm classify(const Expr& e) {
  StructuralForm f;
  if (division_free(e)) {
    f.kind = StructuralForm::Kind::DivisionFree;
    return f;
  }
  if (e.kind() == NodeKind::Div && !e.const_denominator() && division_free(e.lhs()) && division_free(e.rhs())) {
    f.kind = StructuralForm::Kind::TopFraction;
    f.numerator = e.lhs();
    f.denominator = e.rhs();
    return f;
  }
  f.kind = StructuralForm::Kind::Unsupported;
  f.reason = "nested non-constant division";
  return f;
}

SignCertificate check_denominator_sign(const Expr& q, const std::vector<Distribution>& dists) {
  Box box = Box::from_supports(dists, 0, 0);
  try {
    Interval iv = interval_eval_exact(q, box);
    if (iv.lo > 0) return SignCertificate::Positive;
    if (iv.hi < 0) return SignCertificate::Negative;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Unsupported) throw;
  }
  return SignCertificate::Indeterminate;
}

}  // namespace probfp
