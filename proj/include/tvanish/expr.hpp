#pragma once

// Scalar expressions over t, x1..xd, u1..um: parsing, printing, symbolic
// partial derivatives and IEEE evaluation.
//
// Grammar (precedence high to low):
//   primary := number | variable | func '(' expr ')' | '(' expr ')'
//   power   := primary ['^' unary]           right associative
//   unary   := '-' unary | '+' unary | power
//   term    := unary (('*' | '/') unary)*
//   expr    := term (('+' | '-') term)*
// with func one of exp, log, sin, cos, sqrt, abs.

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "tvanish/errors.hpp"

namespace tvanish {

enum class VarKind { Time, State, Control };

/// A variable reference. `index` is 0-based; the printed name is 1-based
/// ("x1" is {State, 0}). Time has index 0.
struct Variable {
  VarKind kind = VarKind::Time;
  int index = 0;

  std::string name() const;
  bool operator==(const Variable&) const = default;
};

enum class UnaryOp { Neg, Exp, Log, Sin, Cos, Sqrt, Abs };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

/// Immutable expression tree with shared structure.
class Expr {
 public:
  struct Unary;
  struct Binary;
  struct Node;

  Expr();  // the constant 0

  static Expr constant(double value);
  static Expr variable(Variable v);
  static Expr unary(UnaryOp op, Expr arg);
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs);

  bool is_constant() const;
  bool is_constant(double value) const;
  double constant_value() const;  // precondition: is_constant()

  const Node& node() const { return *node_; }

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct Expr::Unary {
  UnaryOp op;
  Expr arg;
};

struct Expr::Binary {
  BinaryOp op;
  Expr lhs;
  Expr rhs;
};

struct Expr::Node {
  std::variant<double, Variable, Unary, Binary> data;
};

/// Structural equality (constants compared bitwise-exactly).
bool operator==(const Expr& a, const Expr& b);

/// Parses infix text. Throws ParseError on syntax errors and unknown
/// identifiers.
Expr parse(std::string_view text);

/// Prints with the minimum parentheses needed so that parsing the output
/// and folding constants reproduces the folded input.
std::string to_string(const Expr& e);

/// Folds constant subtrees and applies the 0/1 identities
/// (a+0, a*1, a*0, a^1, a^0, --a, ...). Never folds to a non-finite value.
Expr simplify(const Expr& e);

/// Symbolic partial derivative, simplified. Throws DiffError if an `abs`
/// node lies on a path that depends on `var`.
Expr differentiate(const Expr& e, Variable var);

bool depends_on(const Expr& e, Variable var);
bool depends_on(const Expr& e, VarKind kind);

/// Largest 1-based index of the given kind occurring in `e` (0 if none).
int max_index(const Expr& e, VarKind kind);

/// Numeric binding used on hot paths.
struct Point {
  double t = 0.0;
  std::span<const double> x;
  std::span<const double> u;
};

/// Evaluates `e`. Throws EvalError if a variable is out of range of the
/// bound spans or any intermediate value is non-finite.
double evaluate(const Expr& e, const Point& at);

/// Evaluates with a name-keyed environment ("t", "x1", "u2", ...).
double evaluate(const Expr& e, const std::map<std::string, double>& env);

}  // namespace tvanish
