#include "ncr/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "ncr/errors.hpp"

namespace ncr {

struct Expr::Node {
  Op op;
  double value = 0.0;  // Const value, PowReal exponent
  int index = 0;       // Var index, Pow exponent
  // Children start empty; only operator nodes populate them.
  Expr a{std::shared_ptr<const Node>()};
  Expr b{std::shared_ptr<const Node>()};
};

namespace {

int precedence(Expr::Op op) {
  switch (op) {
    case Expr::Op::Add:
    case Expr::Op::Sub:
      return 1;
    case Expr::Op::Mul:
    case Expr::Op::Div:
      return 2;
    case Expr::Op::Neg:
      return 3;
    case Expr::Op::Pow:
    case Expr::Op::PowReal:
      return 4;
    default:
      return 5;
  }
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
T ipow(T base, int n) {
  T acc(1);
  for (int i = 0; i < n; ++i) acc *= base;
  return acc;
}

}  // namespace

Expr::Expr() : Expr(constant(0.0)) {}

Expr::Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expr Expr::constant(double value) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::var(int index) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->index = index;
  return Expr(std::move(n));
}

Expr Expr::raw(Op op, Expr a, Expr b) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return Expr(std::move(n));
}

Expr::Op Expr::op() const { return node_->op; }
double Expr::value() const { return node_->value; }
int Expr::index() const { return node_->index; }
int Expr::exponent() const { return node_->index; }
double Expr::real_exponent() const { return node_->value; }
const Expr& Expr::lhs() const { return node_->a; }
const Expr& Expr::rhs() const { return node_->b; }

bool Expr::is_constant() const { return max_var() < 0; }
bool Expr::is_zero() const { return op() == Op::Const && value() == 0.0; }
bool Expr::is_one() const { return op() == Op::Const && value() == 1.0; }

bool Expr::is_polynomial() const {
  switch (op()) {
    case Op::Const:
    case Op::Var:
      return true;
    case Op::Div:
    case Op::PowReal:
      return false;
    case Op::Neg:
    case Op::Pow:
      return lhs().is_polynomial();
    default:
      return lhs().is_polynomial() && rhs().is_polynomial();
  }
}

int Expr::max_var() const {
  switch (op()) {
    case Op::Const:
      return -1;
    case Op::Var:
      return index();
    case Op::Neg:
    case Op::Pow:
    case Op::PowReal:
      return lhs().max_var();
    default:
      return std::max(lhs().max_var(), rhs().max_var());
  }
}

namespace {

template <class T>
T eval_node(const Expr& e, std::span<const T> x) {
  using Op = Expr::Op;
  switch (e.op()) {
    case Op::Const:
      return T(e.value());
    case Op::Var:
      if (e.index() >= static_cast<int>(x.size()))
        throw DomainError("expression uses coordinate " + std::to_string(e.index() + 1) +
                          " beyond point dimension " + std::to_string(x.size()));
      return x[e.index()];
    case Op::Add:
      return eval_node(e.lhs(), x) + eval_node(e.rhs(), x);
    case Op::Sub:
      return eval_node(e.lhs(), x) - eval_node(e.rhs(), x);
    case Op::Mul:
      return eval_node(e.lhs(), x) * eval_node(e.rhs(), x);
    case Op::Div:
      return eval_node(e.lhs(), x) / eval_node(e.rhs(), x);
    case Op::Neg:
      return -eval_node(e.lhs(), x);
    case Op::Pow:
      return ipow(eval_node(e.lhs(), x), e.exponent());
    case Op::PowReal:
      return std::pow(eval_node(e.lhs(), x), e.real_exponent());
  }
  return T(0);
}

}  // namespace

double Expr::eval(std::span<const double> x) const { return eval_node<double>(*this, x); }

std::complex<double> Expr::eval(std::span<const std::complex<double>> x) const {
  return eval_node<std::complex<double>>(*this, x);
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.op() == Expr::Op::Const && b.op() == Expr::Op::Const)
    return Expr::constant(a.value() + b.value());
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return Expr::raw(Expr::Op::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.op() == Expr::Op::Const && b.op() == Expr::Op::Const)
    return Expr::constant(a.value() - b.value());
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  return Expr::raw(Expr::Op::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.op() == Expr::Op::Const && b.op() == Expr::Op::Const)
    return Expr::constant(a.value() * b.value());
  if (a.is_zero() || b.is_zero()) return Expr::constant(0.0);
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  return Expr::raw(Expr::Op::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (a.op() == Expr::Op::Const && b.op() == Expr::Op::Const && b.value() != 0.0)
    return Expr::constant(a.value() / b.value());
  if (a.is_zero()) return Expr::constant(0.0);
  if (b.is_one()) return a;
  return Expr::raw(Expr::Op::Div, a, b);
}

Expr operator-(const Expr& a) {
  if (a.op() == Expr::Op::Const) return Expr::constant(-a.value());
  if (a.op() == Expr::Op::Neg) return a.lhs();
  return Expr::raw(Expr::Op::Neg, a, Expr::constant(0.0));
}

Expr pow(const Expr& base, int exponent) {
  if (exponent < 0) throw std::invalid_argument("negative integer exponent");
  if (exponent == 0) return Expr::constant(1.0);
  if (exponent == 1) return base;
  if (base.op() == Expr::Op::Const) return Expr::constant(ipow(base.value(), exponent));
  Expr e = Expr::raw(Expr::Op::Pow, base, Expr::constant(0.0));
  const_cast<Expr::Node&>(*e.node_).index = exponent;
  return e;
}

Expr pow_real(const Expr& base, double exponent) {
  if (exponent == 0.0) return Expr::constant(1.0);
  if (exponent == 1.0) return base;
  if (base.op() == Expr::Op::Const) return Expr::constant(std::pow(base.value(), exponent));
  Expr e = Expr::raw(Expr::Op::PowReal, base, Expr::constant(0.0));
  const_cast<Expr::Node&>(*e.node_).value = exponent;
  return e;
}

Expr Expr::diff(int i) const {
  switch (op()) {
    case Op::Const:
      return constant(0.0);
    case Op::Var:
      return constant(index() == i ? 1.0 : 0.0);
    case Op::Add:
      return lhs().diff(i) + rhs().diff(i);
    case Op::Sub:
      return lhs().diff(i) - rhs().diff(i);
    case Op::Mul:
      return lhs().diff(i) * rhs() + lhs() * rhs().diff(i);
    case Op::Div: {
      Expr da = lhs().diff(i), db = rhs().diff(i);
      if (db.is_zero()) return da / rhs();
      return (da * rhs() - lhs() * db) / pow(rhs(), 2);
    }
    case Op::Neg:
      return -lhs().diff(i);
    case Op::Pow:
      return constant(exponent()) * pow(lhs(), exponent() - 1) * lhs().diff(i);
    case Op::PowReal:
      return constant(real_exponent()) * pow_real(lhs(), real_exponent() - 1.0) * lhs().diff(i);
  }
  return constant(0.0);
}

std::vector<Expr> Expr::denominators() const {
  std::vector<Expr> out;
  auto walk = [&](auto&& self, const Expr& e) -> void {
    switch (e.op()) {
      case Op::Const:
      case Op::Var:
        return;
      case Op::Div:
        out.push_back(e.rhs());
        self(self, e.lhs());
        self(self, e.rhs());
        return;
      case Op::PowReal:
        if (e.real_exponent() < 0) out.push_back(e.lhs());
        self(self, e.lhs());
        return;
      case Op::Neg:
      case Op::Pow:
        self(self, e.lhs());
        return;
      default:
        self(self, e.lhs());
        self(self, e.rhs());
    }
  };
  walk(walk, *this);
  return out;
}

namespace {

void print(const Expr& e, char prefix, std::string& out);

void print_wrapped(const Expr& e, char prefix, std::string& out, bool wrap) {
  if (wrap) out += '(';
  print(e, prefix, out);
  if (wrap) out += ')';
}

int effective_precedence(const Expr& e) {
  if (e.op() == Expr::Op::Const && std::signbit(e.value())) return precedence(Expr::Op::Neg);
  return precedence(e.op());
}

void print(const Expr& e, char prefix, std::string& out) {
  using Op = Expr::Op;
  switch (e.op()) {
    case Op::Const:
      out += format_number(e.value());
      return;
    case Op::Var:
      out += prefix;
      out += std::to_string(e.index() + 1);
      return;
    case Op::Add:
    case Op::Sub: {
      print_wrapped(e.lhs(), prefix, out, effective_precedence(e.lhs()) < 1);
      out += e.op() == Op::Add ? '+' : '-';
      print_wrapped(e.rhs(), prefix, out, effective_precedence(e.rhs()) <= 1);
      return;
    }
    case Op::Mul:
    case Op::Div: {
      print_wrapped(e.lhs(), prefix, out, effective_precedence(e.lhs()) < 2);
      out += e.op() == Op::Mul ? '*' : '/';
      print_wrapped(e.rhs(), prefix, out, effective_precedence(e.rhs()) <= 2);
      return;
    }
    case Op::Neg:
      out += '-';
      print_wrapped(e.lhs(), prefix, out, effective_precedence(e.lhs()) < 3);
      return;
    case Op::Pow:
      print_wrapped(e.lhs(), prefix, out, effective_precedence(e.lhs()) < 5);
      out += '^';
      out += std::to_string(e.exponent());
      return;
    case Op::PowReal:
      out += "pow(";
      print(e.lhs(), prefix, out);
      out += ',';
      out += format_number(e.real_exponent());
      out += ')';
      return;
  }
}

}  // namespace

std::string Expr::str(char prefix) const {
  std::string out;
  print(*this, prefix, out);
  return out;
}

// Recursive-descent parser. Builds raw nodes so that printing a parsed
// canonical string reproduces it exactly.
class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text) {}

  Expr parse() {
    skip();
    if (pos_ >= text_.size()) fail("empty expression");
    Expr e = expr();
    skip();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw SchemaError("expression \"" + std::string(text_) + "\": " + msg + " at offset " +
                      std::to_string(pos_));
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = Expr::raw(Expr::Op::Add, lhs, term());
      else if (accept('-'))
        lhs = Expr::raw(Expr::Op::Sub, lhs, term());
      else
        return lhs;
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*'))
        lhs = Expr::raw(Expr::Op::Mul, lhs, unary());
      else if (accept('/'))
        lhs = Expr::raw(Expr::Op::Div, lhs, unary());
      else
        return lhs;
    }
  }

  Expr unary() {
    if (accept('-')) {
      Expr inner = unary();
      if (inner.op() == Expr::Op::Const && !std::signbit(inner.value()))
        return Expr::constant(-inner.value());
      return Expr::raw(Expr::Op::Neg, inner, Expr::constant(0.0));
    }
    return power();
  }

  Expr power() {
    Expr base = atom();
    if (accept('^')) {
      skip();
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("exponent must be a nonnegative integer literal");
      int n = std::atoi(std::string(text_.substr(start, pos_ - start)).c_str());
      Expr e = Expr::raw(Expr::Op::Pow, base, Expr::constant(0.0));
      const_cast<Expr::Node&>(*e.node_).index = n;
      return e;
    }
    return base;
  }

  Expr atom() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      if (!accept(')')) fail("missing ')'");
      return e;
    }
    if (c == 'x' || c == 'z') {
      ++pos_;
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("coordinate name needs an index");
      int idx = std::atoi(std::string(text_.substr(start, pos_ - start)).c_str());
      if (idx < 1) fail("coordinate indices start at 1");
      no_implicit_product();
      return Expr::var(idx - 1);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0;
      auto res = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
      if (res.ec != std::errc()) fail("bad number");
      pos_ = static_cast<std::size_t>(res.ptr - text_.data());
      no_implicit_product();
      return Expr::constant(v);
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  void no_implicit_product() {
    std::size_t p = pos_;
    while (p < text_.size() && std::isspace(static_cast<unsigned char>(text_[p]))) ++p;
    if (p < text_.size() &&
        (std::isalnum(static_cast<unsigned char>(text_[p])) || text_[p] == '(' || text_[p] == '.')) {
      pos_ = p;
      fail("implicit multiplication is not allowed");
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

Expr Expr::parse(std::string_view text) { return ExprParser(text).parse(); }

}  // namespace ncr
