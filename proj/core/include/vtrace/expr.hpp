#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace vtrace {

/// Immutable expression tree over the coordinates x1..xN.
///
/// Grammar (infix, `^` binds tightest and is right associative, its
/// exponent must not reference any coordinate):
///
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('-' | '+') unary | power
///   power   := primary ('^' unary)?
///   primary := number | 'x' index | func '(' expr ')' | '(' expr ')'
///   func    := 'exp' | 'log' | 'sqrt'
///
/// Nodes are shared between copies and derivative trees.
class Expr {
 public:
  enum class Kind { Constant, Variable, Add, Sub, Mul, Div, Neg, Pow, Exp, Log, Sqrt };

  struct Node;

  /// The constant 0.
  Expr();

  static Expr constant(double value);
  /// Coordinate x_{index+1}; index is 0-based.
  static Expr variable(int index);

  Kind kind() const;
  /// Value of a Constant node; only meaningful when kind() == Constant.
  double constant_value() const;
  /// 0-based coordinate index of a Variable node.
  int variable_index() const;

  double evaluate(std::span<const double> x) const;

  /// Symbolic partial derivative with respect to coordinate `index`.
  Expr derivative(int index) const;

  /// Largest referenced 0-based coordinate index, or -1 when none.
  int max_variable_index() const;
  bool is_constant() const { return max_variable_index() < 0; }

  /// Text that parses back to a tree with bit-identical evaluation.
  std::string to_string() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr parse_exponent(std::string_view text, int dimension);
  /// a^c with c a coordinate-free expression.
  static Expr pow(const Expr& base, const Expr& exponent);
  static Expr exp(const Expr& a);
  static Expr log(const Expr& a);
  static Expr sqrt(const Expr& a);

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Parses `text` into an expression over x1..x`dimension`.
/// Throws SyntaxError (with position) or DimensionError.
Expr parse_exponent(std::string_view text, int dimension);

}  // namespace vtrace
