#pragma once

// Closed-form scalar expressions over chart coordinates: parsing, evaluation,
// exact symbolic differentiation and printing.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace curvcert {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t position)
      : std::runtime_error(msg + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class UndeclaredSymbolError : public ParseError {
 public:
  UndeclaredSymbolError(const std::string& name, std::size_t position)
      : ParseError("undeclared symbol '" + name + "'", position), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// Raised when evaluation leaves the domain of an operation. `subexpression()`
/// is the printed form of the offending node.
class EvalError : public std::domain_error {
 public:
  EvalError(const std::string& what, std::string subexpr)
      : std::domain_error(what + " in '" + subexpr + "'"), subexpr_(std::move(subexpr)) {}
  const std::string& subexpression() const noexcept { return subexpr_; }

 private:
  std::string subexpr_;
};

class UnboundConstantError : public std::out_of_range {
 public:
  explicit UnboundConstantError(const std::string& name)
      : std::out_of_range("unbound constant '" + name + "'"), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// Named constant values. Lookup of an unbound name throws; there are no defaults.
class Bindings {
 public:
  Bindings() = default;
  Bindings(std::initializer_list<std::pair<const std::string, double>> init) : values_(init) {}

  Bindings& set(const std::string& name, double value) {
    values_[name] = value;
    return *this;
  }
  double at(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw UnboundConstantError(name);
    return it->second;
  }
  bool contains(const std::string& name) const { return values_.count(name) != 0; }
  std::set<std::string> names() const {
    std::set<std::string> out;
    for (const auto& [k, v] : values_) out.insert(k);
    return out;
  }
  const std::map<std::string, double>& values() const noexcept { return values_; }

  /// Union of two binding sets; a name bound to two different values is an error.
  static Bindings merge(const Bindings& a, const Bindings& b) {
    Bindings out = a;
    for (const auto& [k, v] : b.values_) {
      auto it = out.values_.find(k);
      if (it != out.values_.end() && it->second != v)
        throw std::invalid_argument("conflicting values for constant '" + k + "'");
      out.values_[k] = v;
    }
    return out;
  }

 private:
  std::map<std::string, double> values_;
};

enum class UnaryOp { neg, sin, cos, tan, exp, log, sqrt, abs };
enum class BinaryOp { add, sub, mul, div, pow };

namespace detail {

struct Node {
  enum class Kind { number, constant, variable, unary, binary, int_power };
  Kind kind = Kind::number;
  double value = 0.0;      // number
  std::string name;        // constant / variable
  int index = -1;          // variable: coordinate slot
  UnaryOp uop = UnaryOp::neg;
  BinaryOp bop = BinaryOp::add;
  int exponent = 0;        // int_power
  std::shared_ptr<const Node> lhs;  // unary operand, binary lhs, int_power base
  std::shared_ptr<const Node> rhs;
};

using NodePtr = std::shared_ptr<const Node>;

inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline const char* unary_name(UnaryOp op) {
  switch (op) {
    case UnaryOp::neg: return "-";
    case UnaryOp::sin: return "sin";
    case UnaryOp::cos: return "cos";
    case UnaryOp::tan: return "tan";
    case UnaryOp::exp: return "exp";
    case UnaryOp::log: return "log";
    case UnaryOp::sqrt: return "sqrt";
    case UnaryOp::abs: return "abs";
  }
  return "?";
}

}  // namespace detail

/// Immutable expression handle. Copies share the underlying tree.
class Expr {
 public:
  using Kind = detail::Node::Kind;

  Expr() : Expr(number(0.0)) {}

  static Expr number(double v) {
    auto n = std::make_shared<detail::Node>();
    n->kind = Kind::number;
    n->value = v;
    return Expr(std::move(n));
  }
  static Expr constant(std::string name) {
    auto n = std::make_shared<detail::Node>();
    n->kind = Kind::constant;
    n->name = std::move(name);
    return Expr(std::move(n));
  }
  static Expr variable(int index, std::string name) {
    auto n = std::make_shared<detail::Node>();
    n->kind = Kind::variable;
    n->index = index;
    n->name = std::move(name);
    return Expr(std::move(n));
  }

  // Constructors below fold trivial cases (numeric operands, 0 and 1).
  static Expr unary(UnaryOp op, const Expr& a) {
    if (a.is_number()) {
      double v = a.value();
      switch (op) {
        case UnaryOp::neg: return number(-v);
        case UnaryOp::abs: return number(std::abs(v));
        default: break;  // keep transcendental calls on literals symbolic
      }
    }
    if (op == UnaryOp::neg && a.kind() == Kind::unary && a.node_->uop == UnaryOp::neg)
      return Expr(a.node_->lhs);
    auto n = std::make_shared<detail::Node>();
    n->kind = Kind::unary;
    n->uop = op;
    n->lhs = a.node_;
    return Expr(std::move(n));
  }

  static Expr binary(BinaryOp op, const Expr& a, const Expr& b) {
    switch (op) {
      case BinaryOp::add:
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        if (a.is_number() && b.is_number()) return number(a.value() + b.value());
        break;
      case BinaryOp::sub:
        if (b.is_zero()) return a;
        if (a.is_zero()) return unary(UnaryOp::neg, b);
        if (a.is_number() && b.is_number()) return number(a.value() - b.value());
        break;
      case BinaryOp::mul:
        if (a.is_zero() || b.is_zero()) return number(0.0);
        if (a.is_one()) return b;
        if (b.is_one()) return a;
        if (a.is_number() && b.is_number()) return number(a.value() * b.value());
        break;
      case BinaryOp::div:
        if (a.is_zero() && !b.is_zero()) return number(0.0);
        if (b.is_one()) return a;
        if (a.is_number() && b.is_number() && b.value() != 0.0)
          return number(a.value() / b.value());
        break;
      case BinaryOp::pow:
        if (b.is_zero()) return number(1.0);
        if (b.is_one()) return a;
        break;
    }
    auto n = std::make_shared<detail::Node>();
    n->kind = Kind::binary;
    n->bop = op;
    n->lhs = a.node_;
    n->rhs = b.node_;
    return Expr(std::move(n));
  }

  static Expr int_power(const Expr& base, int exponent) {
    if (exponent == 0) return number(1.0);
    if (exponent == 1) return base;
    if (base.is_number() && (base.value() != 0.0 || exponent > 0))
      return number(std::pow(base.value(), exponent));
    auto n = std::make_shared<detail::Node>();
    n->kind = Kind::int_power;
    n->exponent = exponent;
    n->lhs = base.node_;
    return Expr(std::move(n));
  }

  Kind kind() const noexcept { return node_->kind; }
  bool is_number() const noexcept { return node_->kind == Kind::number; }
  bool is_zero() const noexcept { return is_number() && node_->value == 0.0; }
  bool is_one() const noexcept { return is_number() && node_->value == 1.0; }
  double value() const noexcept { return node_->value; }
  const std::string& name() const noexcept { return node_->name; }
  int index() const noexcept { return node_->index; }
  UnaryOp unary_op() const noexcept { return node_->uop; }
  BinaryOp binary_op() const noexcept { return node_->bop; }
  int exponent() const noexcept { return node_->exponent; }
  Expr lhs() const { return Expr(node_->lhs); }
  Expr rhs() const { return Expr(node_->rhs); }

  /// Number of nodes in the tree (shared subtrees counted per use).
  std::size_t size() const { return count(node_.get()); }

  const detail::Node* raw() const noexcept { return node_.get(); }

 private:
  explicit Expr(detail::NodePtr n) : node_(std::move(n)) {}
  static std::size_t count(const detail::Node* n) {
    if (!n) return 0;
    return 1 + count(n->lhs.get()) + count(n->rhs.get());
  }

  detail::NodePtr node_;
};

inline Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::add, a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::sub, a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::mul, a, b); }
inline Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::div, a, b); }
inline Expr operator-(const Expr& a) { return Expr::unary(UnaryOp::neg, a); }
inline Expr operator+(double a, const Expr& b) { return Expr::number(a) + b; }
inline Expr operator-(double a, const Expr& b) { return Expr::number(a) - b; }
inline Expr operator*(double a, const Expr& b) { return Expr::number(a) * b; }
inline Expr operator/(double a, const Expr& b) { return Expr::number(a) / b; }
inline Expr operator+(const Expr& a, double b) { return a + Expr::number(b); }
inline Expr operator-(const Expr& a, double b) { return a - Expr::number(b); }
inline Expr operator*(const Expr& a, double b) { return a * Expr::number(b); }
inline Expr operator/(const Expr& a, double b) { return a / Expr::number(b); }

inline Expr pow(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::pow, a, b); }
inline Expr pow(const Expr& a, int n) { return Expr::int_power(a, n); }
inline Expr sin(const Expr& a) { return Expr::unary(UnaryOp::sin, a); }
inline Expr cos(const Expr& a) { return Expr::unary(UnaryOp::cos, a); }
inline Expr tan(const Expr& a) { return Expr::unary(UnaryOp::tan, a); }
inline Expr exp(const Expr& a) { return Expr::unary(UnaryOp::exp, a); }
inline Expr log(const Expr& a) { return Expr::unary(UnaryOp::log, a); }
inline Expr sqrt(const Expr& a) { return Expr::unary(UnaryOp::sqrt, a); }
inline Expr abs(const Expr& a) { return Expr::unary(UnaryOp::abs, a); }

// ---------------------------------------------------------------------------
// Printing

namespace detail {

// Binding strength used for parenthesisation: higher binds tighter.
inline int precedence(const Node* n) {
  switch (n->kind) {
    case Node::Kind::number: return n->value < 0 ? 2 : 5;
    case Node::Kind::constant:
    case Node::Kind::variable: return 5;
    case Node::Kind::unary: return n->uop == UnaryOp::neg ? 2 : 5;
    case Node::Kind::int_power: return 3;
    case Node::Kind::binary:
      switch (n->bop) {
        case BinaryOp::add:
        case BinaryOp::sub: return 0;
        case BinaryOp::mul:
        case BinaryOp::div: return 1;
        case BinaryOp::pow: return 3;
      }
  }
  return 0;
}

inline void print(const Node* n, std::string& out);

inline void print_wrapped(const Node* n, std::string& out, bool wrap) {
  if (wrap) out += '(';
  print(n, out);
  if (wrap) out += ')';
}

inline void print(const Node* n, std::string& out) {
  switch (n->kind) {
    case Node::Kind::number: out += format_number(n->value); return;
    case Node::Kind::constant:
    case Node::Kind::variable: out += n->name; return;
    case Node::Kind::unary:
      if (n->uop == UnaryOp::neg) {
        out += '-';
        print_wrapped(n->lhs.get(), out, precedence(n->lhs.get()) < 3);
      } else {
        out += unary_name(n->uop);
        out += '(';
        print(n->lhs.get(), out);
        out += ')';
      }
      return;
    case Node::Kind::int_power:
      print_wrapped(n->lhs.get(), out, precedence(n->lhs.get()) <= 3);
      out += '^';
      if (n->exponent < 0) {
        out += "(" + std::to_string(n->exponent) + ")";
      } else {
        out += std::to_string(n->exponent);
      }
      return;
    case Node::Kind::binary: {
      const int p = precedence(n);
      const Node* l = n->lhs.get();
      const Node* r = n->rhs.get();
      if (n->bop == BinaryOp::pow) {
        print_wrapped(l, out, precedence(l) <= 3);
        out += '^';
        print_wrapped(r, out, precedence(r) < 5);
        return;
      }
      print_wrapped(l, out, precedence(l) < p);
      switch (n->bop) {
        case BinaryOp::add: out += " + "; break;
        case BinaryOp::sub: out += " - "; break;
        case BinaryOp::mul: out += "*"; break;
        case BinaryOp::div: out += "/"; break;
        default: break;
      }
      // left-associative operators need the right operand wrapped on ties
      print_wrapped(r, out, precedence(r) <= p);
      return;
    }
  }
}

}  // namespace detail

inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print(e.raw(), out);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace detail {

inline double eval_node(const Node* n, std::span<const double> point, const Bindings* consts) {
  switch (n->kind) {
    case Node::Kind::number: return n->value;
    case Node::Kind::constant:
      if (!consts) throw UnboundConstantError(n->name);
      return consts->at(n->name);
    case Node::Kind::variable:
      if (n->index < 0 || static_cast<std::size_t>(n->index) >= point.size())
        throw std::out_of_range("coordinate '" + n->name + "' not supplied");
      return point[static_cast<std::size_t>(n->index)];
    case Node::Kind::unary: {
      const double a = eval_node(n->lhs.get(), point, consts);
      switch (n->uop) {
        case UnaryOp::neg: return -a;
        case UnaryOp::sin: return std::sin(a);
        case UnaryOp::cos: return std::cos(a);
        case UnaryOp::tan: return std::tan(a);
        case UnaryOp::exp: return std::exp(a);
        case UnaryOp::log:
          if (!(a > 0.0)) {
            std::string s;
            print(n, s);
            throw EvalError("log of non-positive value " + format_number(a), s);
          }
          return std::log(a);
        case UnaryOp::sqrt:
          if (a < 0.0) {
            std::string s;
            print(n, s);
            throw EvalError("sqrt of negative value " + format_number(a), s);
          }
          return std::sqrt(a);
        case UnaryOp::abs: return std::abs(a);
      }
      return 0.0;
    }
    case Node::Kind::int_power: {
      const double a = eval_node(n->lhs.get(), point, consts);
      if (a == 0.0 && n->exponent < 0) {
        std::string s;
        print(n, s);
        throw EvalError("division by zero", s);
      }
      // repeated multiplication keeps small integer powers exact
      int e = n->exponent < 0 ? -n->exponent : n->exponent;
      double r = 1.0, b = a;
      while (e) {
        if (e & 1) r *= b;
        b *= b;
        e >>= 1;
      }
      return n->exponent < 0 ? 1.0 / r : r;
    }
    case Node::Kind::binary: {
      const double a = eval_node(n->lhs.get(), point, consts);
      const double b = eval_node(n->rhs.get(), point, consts);
      switch (n->bop) {
        case BinaryOp::add: return a + b;
        case BinaryOp::sub: return a - b;
        case BinaryOp::mul: return a * b;
        case BinaryOp::div:
          if (b == 0.0) {
            std::string s;
            print(n, s);
            throw EvalError("division by zero", s);
          }
          return a / b;
        case BinaryOp::pow:
          if (a < 0.0 && std::floor(b) != b) {
            std::string s;
            print(n, s);
            throw EvalError("non-integer power of negative base", s);
          }
          if (a == 0.0 && b < 0.0) {
            std::string s;
            print(n, s);
            throw EvalError("division by zero", s);
          }
          return std::pow(a, b);
      }
      return 0.0;
    }
  }
  return 0.0;
}

}  // namespace detail

/// Evaluates `e` with coordinate values `point` (indexed by coordinate slot).
inline double eval(const Expr& e, std::span<const double> point, const Bindings& consts) {
  return detail::eval_node(e.raw(), point, &consts);
}

/// Evaluation for expressions without named constants.
inline double eval(const Expr& e, std::span<const double> point) {
  return detail::eval_node(e.raw(), point, nullptr);
}

// ---------------------------------------------------------------------------
// Structural queries and rewriting

inline bool depends_on(const Expr& e, int var) {
  const auto* n = e.raw();
  switch (n->kind) {
    case Expr::Kind::number:
    case Expr::Kind::constant: return false;
    case Expr::Kind::variable: return n->index == var;
    case Expr::Kind::unary:
    case Expr::Kind::int_power: return depends_on(e.lhs(), var);
    case Expr::Kind::binary: return depends_on(e.lhs(), var) || depends_on(e.rhs(), var);
  }
  return false;
}

inline void collect_symbols(const Expr& e, std::set<std::string>& constants, std::set<int>& variables) {
  switch (e.kind()) {
    case Expr::Kind::number: return;
    case Expr::Kind::constant: constants.insert(e.name()); return;
    case Expr::Kind::variable: variables.insert(e.index()); return;
    case Expr::Kind::unary:
    case Expr::Kind::int_power: collect_symbols(e.lhs(), constants, variables); return;
    case Expr::Kind::binary:
      collect_symbols(e.lhs(), constants, variables);
      collect_symbols(e.rhs(), constants, variables);
      return;
  }
}

/// Rebuilds `e` bottom-up, applying `leaf` to constant and variable nodes.
template <class LeafFn>
Expr rewrite_leaves(const Expr& e, const LeafFn& leaf) {
  switch (e.kind()) {
    case Expr::Kind::number: return e;
    case Expr::Kind::constant:
    case Expr::Kind::variable: return leaf(e);
    case Expr::Kind::unary: return Expr::unary(e.unary_op(), rewrite_leaves(e.lhs(), leaf));
    case Expr::Kind::int_power: return Expr::int_power(rewrite_leaves(e.lhs(), leaf), e.exponent());
    case Expr::Kind::binary:
      return Expr::binary(e.binary_op(), rewrite_leaves(e.lhs(), leaf), rewrite_leaves(e.rhs(), leaf));
  }
  return e;
}

/// Replaces every bound constant with its value and folds.
inline Expr bind(const Expr& e, const Bindings& consts) {
  return rewrite_leaves(e, [&](const Expr& leaf) {
    if (leaf.kind() == Expr::Kind::constant) return Expr::number(consts.at(leaf.name()));
    return leaf;
  });
}

/// Moves every coordinate variable from slot i to slot i + offset.
inline Expr shift_variables(const Expr& e, int offset) {
  return rewrite_leaves(e, [&](const Expr& leaf) {
    if (leaf.kind() == Expr::Kind::variable) return Expr::variable(leaf.index() + offset, leaf.name());
    return leaf;
  });
}

/// Substitutes an expression for coordinate slot `var`.
inline Expr substitute(const Expr& e, int var, const Expr& replacement) {
  return rewrite_leaves(e, [&](const Expr& leaf) {
    if (leaf.kind() == Expr::Kind::variable && leaf.index() == var) return replacement;
    return leaf;
  });
}

// ---------------------------------------------------------------------------
// Differentiation

/// Exact partial derivative with respect to coordinate slot `var`.
inline Expr diff(const Expr& e, int var) {
  switch (e.kind()) {
    case Expr::Kind::number:
    case Expr::Kind::constant: return Expr::number(0.0);
    case Expr::Kind::variable: return Expr::number(e.index() == var ? 1.0 : 0.0);
    case Expr::Kind::unary: {
      const Expr u = e.lhs();
      const Expr du = diff(u, var);
      if (du.is_zero()) return Expr::number(0.0);
      switch (e.unary_op()) {
        case UnaryOp::neg: return -du;
        case UnaryOp::sin: return cos(u) * du;
        case UnaryOp::cos: return -(sin(u) * du);
        case UnaryOp::tan: return du / pow(cos(u), 2);
        case UnaryOp::exp: return e * du;
        case UnaryOp::log: return du / u;
        case UnaryOp::sqrt: return du / (2.0 * e);
        case UnaryOp::abs: return du * u / e;  // undefined at u = 0: evaluation raises
      }
      return Expr::number(0.0);
    }
    case Expr::Kind::int_power: {
      const Expr u = e.lhs();
      const Expr du = diff(u, var);
      if (du.is_zero()) return Expr::number(0.0);
      const int n = e.exponent();
      return Expr::number(n) * pow(u, n - 1) * du;
    }
    case Expr::Kind::binary: {
      const Expr a = e.lhs();
      const Expr b = e.rhs();
      const Expr da = diff(a, var);
      const Expr db = diff(b, var);
      switch (e.binary_op()) {
        case BinaryOp::add: return da + db;
        case BinaryOp::sub: return da - db;
        case BinaryOp::mul: return da * b + a * db;
        case BinaryOp::div:
          if (db.is_zero()) return da / b;
          return (da * b - a * db) / pow(b, 2);
        case BinaryOp::pow:
          if (da.is_zero() && db.is_zero()) return Expr::number(0.0);
          if (db.is_zero()) return b * pow(a, b - 1.0) * da;
          if (da.is_zero()) return e * log(a) * db;
          return e * (db * log(a) + b * da / a);
      }
      return Expr::number(0.0);
    }
  }
  return Expr::number(0.0);
}

// ---------------------------------------------------------------------------
// Parsing
//
// Grammar (see docs/expr-grammar.md):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | '+' unary | power
//   power   := primary ('^' unary)?          right associative
//   primary := number | identifier | identifier '(' expr ')' | '(' expr ')'

/// Symbols a formula may reference: coordinates (by slot) and named constants.
struct SymbolTable {
  std::vector<std::string> coordinates;
  std::set<std::string> constants;
};

namespace detail {

class Parser {
 public:
  Parser(std::string_view src, const SymbolTable& symbols) : src_(src), symbols_(symbols) {}

  Expr parse() {
    Expr e = expression();
    skip_ws();
    if (pos_ != src_.size()) throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= src_.size()) throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  Expr expression() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) lhs = lhs + term();
      else if (accept('-')) lhs = lhs - term();
      else return lhs;
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = lhs * unary();
      else if (accept('/')) lhs = lhs / unary();
      else return lhs;
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) {
      Expr exponent = unary();
      if (exponent.is_number() && std::floor(exponent.value()) == exponent.value() &&
          std::abs(exponent.value()) <= 1024.0)
        return Expr::int_power(base, static_cast<int>(exponent.value()));
      return pow(base, exponent);
    }
    return base;
  }

  Expr primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expression();
      expect(')');
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') return number();
    if (is_ident_start(c)) return identifier();
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  Expr number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && ((src_[pos_] >= '0' && src_[pos_] <= '9') || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') {
        while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') ++pos_;
      } else {
        pos_ = save;
      }
    }
    double v = 0.0;
    const char* first = src_.data() + start;
    const char* last = src_.data() + pos_;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw ParseError("malformed number", start);
    return Expr::number(v);
  }

  static bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
  static bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
    const std::string name(src_.substr(start, pos_ - start));
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '(') {
      static const std::map<std::string, UnaryOp> functions = {
          {"sin", UnaryOp::sin}, {"cos", UnaryOp::cos},   {"tan", UnaryOp::tan}, {"exp", UnaryOp::exp},
          {"log", UnaryOp::log}, {"sqrt", UnaryOp::sqrt}, {"abs", UnaryOp::abs}};
      auto it = functions.find(name);
      if (it == functions.end()) throw ParseError("unknown function '" + name + "'", start);
      ++pos_;
      Expr arg = expression();
      expect(')');
      return Expr::unary(it->second, arg);
    }
    for (std::size_t i = 0; i < symbols_.coordinates.size(); ++i)
      if (symbols_.coordinates[i] == name) return Expr::variable(static_cast<int>(i), name);
    if (symbols_.constants.count(name)) return Expr::constant(name);
    if (name == "pi") return Expr::number(3.141592653589793238462643383279502884);
    throw UndeclaredSymbolError(name, start);
  }

  std::string_view src_;
  const SymbolTable& symbols_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses `src`; every identifier must be a declared coordinate, a declared
/// constant, a known function or `pi`.
inline Expr parse(std::string_view src, const SymbolTable& symbols) {
  return detail::Parser(src, symbols).parse();
}

inline Expr parse(std::string_view src, const std::vector<std::string>& coordinates,
                  const std::set<std::string>& constants = {}) {
  return parse(src, SymbolTable{coordinates, constants});
}

}  // namespace curvcert
