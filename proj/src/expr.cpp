#include "tvanish/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <utility>

#include "tvanish/format.hpp"

namespace tvanish {

std::string Variable::name() const {
  switch (kind) {
    case VarKind::Time:
      return "t";
    case VarKind::State:
      return "x" + std::to_string(index + 1);
    case VarKind::Control:
      return "u" + std::to_string(index + 1);
  }
  return "?";
}

Expr::Expr() : node_(std::make_shared<const Node>(Node{0.0})) {}

Expr Expr::constant(double value) { return Expr(std::make_shared<const Node>(Node{value})); }

Expr Expr::variable(Variable v) { return Expr(std::make_shared<const Node>(Node{v})); }

Expr Expr::unary(UnaryOp op, Expr arg) {
  return Expr(std::make_shared<const Node>(Node{Unary{op, std::move(arg)}}));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
  return Expr(std::make_shared<const Node>(Node{Binary{op, std::move(lhs), std::move(rhs)}}));
}

bool Expr::is_constant() const { return std::holds_alternative<double>(node_->data); }

bool Expr::is_constant(double value) const {
  const auto* c = std::get_if<double>(&node_->data);
  return c != nullptr && *c == value;
}

double Expr::constant_value() const { return std::get<double>(node_->data); }

bool operator==(const Expr& a, const Expr& b) {
  if (&a.node() == &b.node()) return true;
  const auto& da = a.node().data;
  const auto& db = b.node().data;
  if (da.index() != db.index()) return false;
  if (const auto* ca = std::get_if<double>(&da)) {
    const double cb = std::get<double>(db);
    return std::memcmp(ca, &cb, sizeof(double)) == 0;
  }
  if (const auto* va = std::get_if<Variable>(&da)) return *va == std::get<Variable>(db);
  if (const auto* ua = std::get_if<Expr::Unary>(&da)) {
    const auto& ub = std::get<Expr::Unary>(db);
    return ua->op == ub.op && ua->arg == ub.arg;
  }
  const auto& ba = std::get<Expr::Binary>(da);
  const auto& bb = std::get<Expr::Binary>(db);
  return ba.op == bb.op && ba.lhs == bb.lhs && ba.rhs == bb.rhs;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct FunctionName {
  const char* name;
  UnaryOp op;
};

constexpr FunctionName kFunctions[] = {
    {"exp", UnaryOp::Exp}, {"log", UnaryOp::Log},   {"sin", UnaryOp::Sin},
    {"cos", UnaryOp::Cos}, {"sqrt", UnaryOp::Sqrt}, {"abs", UnaryOp::Abs},
};

const char* function_name(UnaryOp op) {
  for (const auto& f : kFunctions)
    if (f.op == op) return f.name;
  return "?";
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr parse_all() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ < text_.size()) fail(std::string("unexpected character '") + text_[pos_] + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::binary(BinaryOp::Add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = Expr::binary(BinaryOp::Sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_term() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::binary(BinaryOp::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = Expr::binary(BinaryOp::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) return Expr::unary(UnaryOp::Neg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (accept('^')) return Expr::binary(BinaryOp::Pow, base, parse_unary());
    return base;
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (is_digit(c) || c == '.') return parse_number();
    if (is_ident_start(c)) return parse_identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (is_digit(text_[pos_]) || text_[pos_] == '.')) ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && is_digit(text_[p])) {
        while (p < text_.size() && is_digit(text_[p])) ++p;
        pos_ = p;
      }
    }
    double value = 0.0;
    const char* first = text_.data() + start;
    const char* last = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
      pos_ = start;
      fail("malformed number");
    }
    return Expr::constant(value);
  }

  Expr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    const std::string_view ident = text_.substr(start, pos_ - start);

    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      for (const auto& f : kFunctions) {
        if (ident == f.name) {
          ++pos_;
          Expr arg = parse_expr();
          if (!accept(')')) fail("expected ')'");
          return Expr::unary(f.op, std::move(arg));
        }
      }
      pos_ = start;
      fail("unknown identifier '" + std::string(ident) + "'");
    }

    if (ident == "t") return Expr::variable({VarKind::Time, 0});
    if (ident.size() >= 2 && (ident[0] == 'x' || ident[0] == 'u') && ident[1] != '0') {
      int index = 0;
      auto [ptr, ec] = std::from_chars(ident.data() + 1, ident.data() + ident.size(), index);
      if (ec == std::errc{} && ptr == ident.data() + ident.size() && index >= 1) {
        const VarKind kind = ident[0] == 'x' ? VarKind::State : VarKind::Control;
        return Expr::variable({kind, index - 1});
      }
    }
    pos_ = start;
    fail("unknown identifier '" + std::string(ident) + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text) { return Parser(text).parse_all(); }

// ---------------------------------------------------------------------------
// Printing

namespace {

int level(const Expr& e) {
  const auto& d = e.node().data;
  if (const auto* c = std::get_if<double>(&d)) return std::signbit(*c) ? 3 : 5;
  if (std::holds_alternative<Variable>(d)) return 5;
  if (const auto* u = std::get_if<Expr::Unary>(&d)) return u->op == UnaryOp::Neg ? 3 : 5;
  switch (std::get<Expr::Binary>(d).op) {
    case BinaryOp::Add:
    case BinaryOp::Sub:
      return 1;
    case BinaryOp::Mul:
    case BinaryOp::Div:
      return 2;
    case BinaryOp::Pow:
      return 4;
  }
  return 0;
}

void print(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, bool parens, std::string& out) {
  if (parens) out += '(';
  print(e, out);
  if (parens) out += ')';
}

void print(const Expr& e, std::string& out) {
  const auto& d = e.node().data;
  if (const auto* c = std::get_if<double>(&d)) {
    if (std::signbit(*c)) {
      out += '-';
      out += format_double(-*c);
    } else {
      out += format_double(*c);
    }
    return;
  }
  if (const auto* v = std::get_if<Variable>(&d)) {
    out += v->name();
    return;
  }
  if (const auto* u = std::get_if<Expr::Unary>(&d)) {
    if (u->op == UnaryOp::Neg) {
      out += '-';
      print_wrapped(u->arg, level(u->arg) < 3, out);
    } else {
      out += function_name(u->op);
      out += '(';
      print(u->arg, out);
      out += ')';
    }
    return;
  }
  const auto& b = std::get<Expr::Binary>(d);
  if (b.op == BinaryOp::Pow) {
    print_wrapped(b.lhs, level(b.lhs) <= 4, out);
    out += '^';
    print_wrapped(b.rhs, level(b.rhs) < 3, out);
    return;
  }
  const int p = level(e);
  print_wrapped(b.lhs, level(b.lhs) < p, out);
  switch (b.op) {
    case BinaryOp::Add:
      out += '+';
      break;
    case BinaryOp::Sub:
      out += '-';
      break;
    case BinaryOp::Mul:
      out += '*';
      break;
    case BinaryOp::Div:
      out += '/';
      break;
    case BinaryOp::Pow:
      break;
  }
  print_wrapped(b.rhs, level(b.rhs) <= p, out);
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

// ---------------------------------------------------------------------------
// Simplification

namespace {

double apply(UnaryOp op, double a) {
  switch (op) {
    case UnaryOp::Neg:
      return -a;
    case UnaryOp::Exp:
      return std::exp(a);
    case UnaryOp::Log:
      return std::log(a);
    case UnaryOp::Sin:
      return std::sin(a);
    case UnaryOp::Cos:
      return std::cos(a);
    case UnaryOp::Sqrt:
      return std::sqrt(a);
    case UnaryOp::Abs:
      return std::fabs(a);
  }
  return std::nan("");
}

double apply(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::Add:
      return a + b;
    case BinaryOp::Sub:
      return a - b;
    case BinaryOp::Mul:
      return a * b;
    case BinaryOp::Div:
      return a / b;
    case BinaryOp::Pow:
      return std::pow(a, b);
  }
  return std::nan("");
}

// Builders that apply the local simplification rules; operands are assumed
// already simplified.
Expr make_unary(UnaryOp op, const Expr& a) {
  if (a.is_constant()) {
    const double v = apply(op, a.constant_value());
    if (std::isfinite(v)) return Expr::constant(v);
  }
  if (op == UnaryOp::Neg) {
    if (const auto* inner = std::get_if<Expr::Unary>(&a.node().data); inner && inner->op == UnaryOp::Neg)
      return inner->arg;
  }
  return Expr::unary(op, a);
}

Expr make_binary(BinaryOp op, const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) {
    const double v = apply(op, a.constant_value(), b.constant_value());
    if (std::isfinite(v)) return Expr::constant(v);
  }
  switch (op) {
    case BinaryOp::Add:
      if (a.is_constant(0.0)) return b;
      if (b.is_constant(0.0)) return a;
      break;
    case BinaryOp::Sub:
      if (b.is_constant(0.0)) return a;
      if (a.is_constant(0.0)) return make_unary(UnaryOp::Neg, b);
      break;
    case BinaryOp::Mul:
      if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
      if (a.is_constant(1.0)) return b;
      if (b.is_constant(1.0)) return a;
      break;
    case BinaryOp::Div:
      if (b.is_constant(1.0)) return a;
      if (a.is_constant(0.0)) return Expr::constant(0.0);
      break;
    case BinaryOp::Pow:
      if (b.is_constant(1.0)) return a;
      if (b.is_constant(0.0) || a.is_constant(1.0)) return Expr::constant(1.0);
      break;
  }
  return Expr::binary(op, a, b);
}

Expr add(const Expr& a, const Expr& b) { return make_binary(BinaryOp::Add, a, b); }
Expr sub(const Expr& a, const Expr& b) { return make_binary(BinaryOp::Sub, a, b); }
Expr mul(const Expr& a, const Expr& b) { return make_binary(BinaryOp::Mul, a, b); }
Expr div(const Expr& a, const Expr& b) { return make_binary(BinaryOp::Div, a, b); }
Expr pow(const Expr& a, const Expr& b) { return make_binary(BinaryOp::Pow, a, b); }
Expr neg(const Expr& a) { return make_unary(UnaryOp::Neg, a); }
Expr fn(UnaryOp op, const Expr& a) { return make_unary(op, a); }
Expr num(double v) { return Expr::constant(v); }

}  // namespace

Expr simplify(const Expr& e) {
  const auto& d = e.node().data;
  if (const auto* u = std::get_if<Expr::Unary>(&d)) return make_unary(u->op, simplify(u->arg));
  if (const auto* b = std::get_if<Expr::Binary>(&d))
    return make_binary(b->op, simplify(b->lhs), simplify(b->rhs));
  return e;
}

// ---------------------------------------------------------------------------
// Dependency queries

bool depends_on(const Expr& e, Variable var) {
  const auto& d = e.node().data;
  if (const auto* v = std::get_if<Variable>(&d)) return *v == var;
  if (const auto* u = std::get_if<Expr::Unary>(&d)) return depends_on(u->arg, var);
  if (const auto* b = std::get_if<Expr::Binary>(&d)) return depends_on(b->lhs, var) || depends_on(b->rhs, var);
  return false;
}

bool depends_on(const Expr& e, VarKind kind) {
  const auto& d = e.node().data;
  if (const auto* v = std::get_if<Variable>(&d)) return v->kind == kind;
  if (const auto* u = std::get_if<Expr::Unary>(&d)) return depends_on(u->arg, kind);
  if (const auto* b = std::get_if<Expr::Binary>(&d)) return depends_on(b->lhs, kind) || depends_on(b->rhs, kind);
  return false;
}

int max_index(const Expr& e, VarKind kind) {
  const auto& d = e.node().data;
  if (const auto* v = std::get_if<Variable>(&d)) return v->kind == kind ? v->index + 1 : 0;
  if (const auto* u = std::get_if<Expr::Unary>(&d)) return max_index(u->arg, kind);
  if (const auto* b = std::get_if<Expr::Binary>(&d))
    return std::max(max_index(b->lhs, kind), max_index(b->rhs, kind));
  return 0;
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

Expr derive(const Expr& e, Variable var) {
  if (!depends_on(e, var)) return num(0.0);
  const auto& d = e.node().data;
  if (std::holds_alternative<Variable>(d)) return num(1.0);

  if (const auto* u = std::get_if<Expr::Unary>(&d)) {
    const Expr& a = u->arg;
    const Expr da = derive(a, var);
    switch (u->op) {
      case UnaryOp::Neg:
        return neg(da);
      case UnaryOp::Exp:
        return mul(fn(UnaryOp::Exp, a), da);
      case UnaryOp::Log:
        return div(da, a);
      case UnaryOp::Sin:
        return mul(fn(UnaryOp::Cos, a), da);
      case UnaryOp::Cos:
        return neg(mul(fn(UnaryOp::Sin, a), da));
      case UnaryOp::Sqrt:
        return div(da, mul(num(2.0), fn(UnaryOp::Sqrt, a)));
      case UnaryOp::Abs:
        throw DiffError("abs(" + to_string(a) + ") is not differentiable with respect to " + var.name());
    }
  }

  const auto& b = std::get<Expr::Binary>(d);
  const Expr& l = b.lhs;
  const Expr& r = b.rhs;
  switch (b.op) {
    case BinaryOp::Add:
      return add(derive(l, var), derive(r, var));
    case BinaryOp::Sub:
      return sub(derive(l, var), derive(r, var));
    case BinaryOp::Mul:
      return add(mul(derive(l, var), r), mul(l, derive(r, var)));
    case BinaryOp::Div:
      return div(sub(mul(derive(l, var), r), mul(l, derive(r, var))), pow(r, num(2.0)));
    case BinaryOp::Pow: {
      if (!depends_on(r, var)) return mul(mul(r, pow(l, sub(r, num(1.0)))), derive(l, var));
      // l^r = exp(r*log(l))
      const Expr log_l = fn(UnaryOp::Log, l);
      const Expr rewritten = fn(UnaryOp::Exp, mul(r, log_l));
      return mul(rewritten, add(mul(derive(r, var), log_l), mul(r, div(derive(l, var), l))));
    }
  }
  return num(0.0);
}

}  // namespace

Expr differentiate(const Expr& e, Variable var) { return simplify(derive(simplify(e), var)); }

// ---------------------------------------------------------------------------
// Evaluation

namespace {

template <class Resolve>
double eval(const Expr& e, const Resolve& resolve, const Expr& root) {
  const auto& d = e.node().data;
  double v = 0.0;
  if (const auto* c = std::get_if<double>(&d)) {
    v = *c;
  } else if (const auto* var = std::get_if<Variable>(&d)) {
    v = resolve(*var);
  } else if (const auto* u = std::get_if<Expr::Unary>(&d)) {
    v = apply(u->op, eval(u->arg, resolve, root));
  } else {
    const auto& b = std::get<Expr::Binary>(d);
    const double l = eval(b.lhs, resolve, root);
    const double r = eval(b.rhs, resolve, root);
    v = apply(b.op, l, r);
  }
  if (!std::isfinite(v)) throw EvalError("non-finite result evaluating '" + to_string(root) + "'");
  return v;
}

}  // namespace

double evaluate(const Expr& e, const Point& at) {
  auto resolve = [&](const Variable& v) -> double {
    switch (v.kind) {
      case VarKind::Time:
        return at.t;
      case VarKind::State:
        if (static_cast<std::size_t>(v.index) < at.x.size()) return at.x[v.index];
        break;
      case VarKind::Control:
        if (static_cast<std::size_t>(v.index) < at.u.size()) return at.u[v.index];
        break;
    }
    throw EvalError("unbound variable " + v.name());
  };
  return eval(e, resolve, e);
}

double evaluate(const Expr& e, const std::map<std::string, double>& env) {
  auto resolve = [&](const Variable& v) -> double {
    auto it = env.find(v.name());
    if (it == env.end()) throw EvalError("unbound variable " + v.name());
    return it->second;
  };
  return eval(e, resolve, e);
}

}  // namespace tvanish
