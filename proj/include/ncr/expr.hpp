#pragma once

// Polynomial / rational expressions over chart coordinates.
//
// Text grammar (whitespace ignored):
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' integer)?
//   atom   := number | var | '(' expr ')'
//   var    := ('x' | 'z') digits        -- 1-based coordinate index
// No implicit multiplication. Exponents are nonnegative integer literals.
// Division only appears in transition maps; unit factors are polynomial.

#include <complex>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ncr {

class Expr {
 public:
  enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, PowReal };

  Expr();  // constant zero
  static Expr constant(double value);
  static Expr var(int index);  // 0-based
  static Expr parse(std::string_view text);

  Op op() const;
  double value() const;  // Const only
  int index() const;     // Var only
  int exponent() const;  // Pow only
  double real_exponent() const;  // PowReal only
  const Expr& lhs() const;
  const Expr& rhs() const;

  bool is_constant() const;  // no variables anywhere
  bool is_zero() const;
  bool is_one() const;
  bool is_polynomial() const;  // no Div / PowReal
  int max_var() const;         // -1 when constant

  double eval(std::span<const double> x) const;
  std::complex<double> eval(std::span<const std::complex<double>> x) const;

  // Symbolic partial derivative; the result is simplified.
  Expr diff(int index) const;

  // Canonical text. `prefix` selects the coordinate letter.
  std::string str(char prefix = 'x') const;

  // Every denominator appearing in a Div node, and every base of a PowReal
  // with negative exponent.
  std::vector<Expr> denominators() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr pow(const Expr& base, int exponent);
  friend Expr pow_real(const Expr& base, double exponent);

  struct Node;

 private:
  explicit Expr(std::shared_ptr<const Node> node);
  static Expr raw(Op op, Expr a, Expr b);
  friend class ExprParser;
  std::shared_ptr<const Node> node_;
};

}  // namespace ncr
