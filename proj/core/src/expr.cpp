#include "vtrace/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "vtrace/errors.hpp"

namespace vtrace {

struct Expr::Node {
  Kind kind;
  double value = 0.0;  // Constant
  int index = -1;      // Variable
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
  int max_var = -1;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_node(Expr::Kind kind, NodePtr lhs, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = kind;
  n->max_var = std::max(lhs ? lhs->max_var : -1, rhs ? rhs->max_var : -1);
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

NodePtr make_constant(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = Expr::Kind::Constant;
  n->value = v;
  return n;
}

bool is_const(const NodePtr& n, double v) {
  return n->kind == Expr::Kind::Constant && n->value == v;
}

// Folding used only while building derivative trees, to keep them small.
NodePtr add(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return make_node(Expr::Kind::Add, std::move(a), std::move(b));
}
NodePtr sub(NodePtr a, NodePtr b) {
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return make_node(Expr::Kind::Neg, std::move(b));
  return make_node(Expr::Kind::Sub, std::move(a), std::move(b));
}
NodePtr mul(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0) || is_const(b, 0.0)) return make_constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return make_node(Expr::Kind::Mul, std::move(a), std::move(b));
}
NodePtr div(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0)) return make_constant(0.0);
  if (is_const(b, 1.0)) return a;
  return make_node(Expr::Kind::Div, std::move(a), std::move(b));
}
NodePtr neg(NodePtr a) {
  if (is_const(a, 0.0)) return a;
  return make_node(Expr::Kind::Neg, std::move(a));
}

double eval(const Expr::Node& n, std::span<const double> x) {
  switch (n.kind) {
    case Expr::Kind::Constant: return n.value;
    case Expr::Kind::Variable: return x[static_cast<std::size_t>(n.index)];
    case Expr::Kind::Add: return eval(*n.lhs, x) + eval(*n.rhs, x);
    case Expr::Kind::Sub: return eval(*n.lhs, x) - eval(*n.rhs, x);
    case Expr::Kind::Mul: return eval(*n.lhs, x) * eval(*n.rhs, x);
    case Expr::Kind::Div: return eval(*n.lhs, x) / eval(*n.rhs, x);
    case Expr::Kind::Neg: return -eval(*n.lhs, x);
    case Expr::Kind::Pow: return std::pow(eval(*n.lhs, x), eval(*n.rhs, x));
    case Expr::Kind::Exp: return std::exp(eval(*n.lhs, x));
    case Expr::Kind::Log: return std::log(eval(*n.lhs, x));
    case Expr::Kind::Sqrt: return std::sqrt(eval(*n.lhs, x));
  }
  return 0.0;
}

NodePtr differentiate(const NodePtr& n, int var) {
  if (n->max_var < var) return make_constant(0.0);
  using K = Expr::Kind;
  switch (n->kind) {
    case K::Constant: return make_constant(0.0);
    case K::Variable: return make_constant(n->index == var ? 1.0 : 0.0);
    case K::Add: return add(differentiate(n->lhs, var), differentiate(n->rhs, var));
    case K::Sub: return sub(differentiate(n->lhs, var), differentiate(n->rhs, var));
    case K::Mul:
      return add(mul(differentiate(n->lhs, var), n->rhs),
                 mul(n->lhs, differentiate(n->rhs, var)));
    case K::Div: {
      auto num = sub(mul(differentiate(n->lhs, var), n->rhs),
                     mul(n->lhs, differentiate(n->rhs, var)));
      return div(num, mul(n->rhs, n->rhs));
    }
    case K::Neg: return neg(differentiate(n->lhs, var));
    case K::Pow: {
      // d(a^c) = c a^(c-1) a'
      auto da = differentiate(n->lhs, var);
      if (is_const(da, 0.0)) return da;
      auto lowered = make_node(K::Pow, n->lhs, sub(n->rhs, make_constant(1.0)));
      return mul(mul(n->rhs, lowered), da);
    }
    case K::Exp: return mul(n, differentiate(n->lhs, var));
    case K::Log: return div(differentiate(n->lhs, var), n->lhs);
    case K::Sqrt:
      return div(differentiate(n->lhs, var), mul(make_constant(2.0), n));
  }
  return make_constant(0.0);
}

// Precedence levels used by the printer.
int precedence(Expr::Kind k) {
  switch (k) {
    case Expr::Kind::Add:
    case Expr::Kind::Sub: return 1;
    case Expr::Kind::Mul:
    case Expr::Kind::Div: return 2;
    case Expr::Kind::Neg: return 3;
    case Expr::Kind::Pow: return 4;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (v < 0 || s.find_first_of("ni") != std::string::npos) return "(" + s + ")";
  return s;
}

std::string print(const Expr::Node& n) {
  using K = Expr::Kind;
  auto wrap = [](const std::string& s) { return "(" + s + ")"; };
  switch (n.kind) {
    case K::Constant: return format_number(n.value);
    case K::Variable: return "x" + std::to_string(n.index + 1);
    case K::Add:
    case K::Sub:
    case K::Mul:
    case K::Div: {
      const int prec = precedence(n.kind);
      std::string l = print(*n.lhs);
      std::string r = print(*n.rhs);
      if (precedence(n.lhs->kind) < prec) l = wrap(l);
      // Equal precedence on the right is wrapped to keep the tree shape.
      if (precedence(n.rhs->kind) <= prec) r = wrap(r);
      const char* op = n.kind == K::Add ? " + " : n.kind == K::Sub ? " - "
                     : n.kind == K::Mul ? "*" : "/";
      return l + op + r;
    }
    case K::Neg: {
      std::string a = print(*n.lhs);
      if (precedence(n.lhs->kind) < precedence(K::Neg)) a = wrap(a);
      return "-" + a;
    }
    case K::Pow: {
      std::string b = print(*n.lhs);
      if (precedence(n.lhs->kind) <= precedence(K::Pow)) b = wrap(b);
      std::string e = print(*n.rhs);
      if (n.rhs->kind != K::Constant || n.rhs->value < 0) e = wrap(e);
      return b + "^" + e;
    }
    case K::Exp: return "exp(" + print(*n.lhs) + ")";
    case K::Log: return "log(" + print(*n.lhs) + ")";
    case K::Sqrt: return "sqrt(" + print(*n.lhs) + ")";
  }
  return {};
}

class Parser {
 public:
  Parser(std::string_view text, int dimension) : text_(text), dim_(dimension) {}

  NodePtr parse() {
    auto e = expression();
    skip_space();
    if (pos_ != text_.size()) throw SyntaxError("unexpected character '" + std::string(1, text_[pos_]) + "'", pos_);
    return e;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) {
      skip_space();
      throw SyntaxError(std::string("expected '") + c + "'", pos_);
    }
  }

  NodePtr expression() {
    auto lhs = term();
    for (;;) {
      if (accept('+')) lhs = make_node(Expr::Kind::Add, lhs, term());
      else if (accept('-')) lhs = make_node(Expr::Kind::Sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make_node(Expr::Kind::Mul, lhs, unary());
      else if (accept('/')) lhs = make_node(Expr::Kind::Div, lhs, unary());
      else return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make_node(Expr::Kind::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    auto base = primary();
    skip_space();
    const std::size_t at = pos_;
    if (accept('^')) {
      auto exponent = unary();
      if (exponent->max_var >= 0)
        throw SyntaxError("exponent of '^' must not depend on coordinates", at);
      return make_node(Expr::Kind::Pow, base, exponent);
    }
    return base;
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= text_.size()) throw SyntaxError("unexpected end of input", pos_);
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (accept('(')) {
      auto e = expression();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    throw SyntaxError("unexpected character '" + std::string(1, c) + "'", pos_);
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    const std::string token(text_.substr(start, pos_ - start));
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size()) throw SyntaxError("malformed number '" + token + "'", start);
    return make_constant(v);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string name(text_.substr(start, pos_ - start));
    if (name == "exp" || name == "log" || name == "sqrt") {
      expect('(');
      auto arg = expression();
      expect(')');
      const auto kind = name == "exp" ? Expr::Kind::Exp : name == "log" ? Expr::Kind::Log : Expr::Kind::Sqrt;
      return make_node(kind, arg);
    }
    if (name.size() >= 2 && name[0] == 'x' &&
        name.find_first_not_of("0123456789", 1) == std::string::npos) {
      const long idx = std::strtol(name.c_str() + 1, nullptr, 10);
      if (idx < 1 || idx > dim_)
        throw DimensionError("coordinate '" + name + "' outside x1..x" + std::to_string(dim_) +
                             " at position " + std::to_string(start));
      auto n = std::make_shared<Expr::Node>();
      n->kind = Expr::Kind::Variable;
      n->index = static_cast<int>(idx - 1);
      n->max_var = n->index;
      return n;
    }
    throw SyntaxError("unknown identifier '" + name + "'", start);
  }

  std::string_view text_;
  int dim_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr::Expr() : node_(make_constant(0.0)) {}

Expr Expr::constant(double value) { return Expr(make_constant(value)); }

Expr Expr::variable(int index) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Variable;
  n->index = index;
  n->max_var = index;
  return Expr(n);
}

Expr::Kind Expr::kind() const { return node_->kind; }
double Expr::constant_value() const { return node_->value; }
int Expr::variable_index() const { return node_->index; }

double Expr::evaluate(std::span<const double> x) const { return eval(*node_, x); }

Expr Expr::derivative(int index) const { return Expr(differentiate(node_, index)); }

int Expr::max_variable_index() const { return node_->max_var; }

std::string Expr::to_string() const { return print(*node_); }

Expr operator+(const Expr& a, const Expr& b) { return Expr(make_node(Expr::Kind::Add, a.node_, b.node_)); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(make_node(Expr::Kind::Sub, a.node_, b.node_)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(make_node(Expr::Kind::Mul, a.node_, b.node_)); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(make_node(Expr::Kind::Div, a.node_, b.node_)); }
Expr operator-(const Expr& a) { return Expr(make_node(Expr::Kind::Neg, a.node_)); }

Expr Expr::pow(const Expr& base, const Expr& exponent) {
  if (!exponent.is_constant()) throw SyntaxError("exponent of '^' must not depend on coordinates", 0);
  return Expr(make_node(Kind::Pow, base.node_, exponent.node_));
}
Expr Expr::exp(const Expr& a) { return Expr(make_node(Kind::Exp, a.node_)); }
Expr Expr::log(const Expr& a) { return Expr(make_node(Kind::Log, a.node_)); }
Expr Expr::sqrt(const Expr& a) { return Expr(make_node(Kind::Sqrt, a.node_)); }

Expr parse_exponent(std::string_view text, int dimension) {
  if (dimension < 1) throw DimensionError("dimension must be positive");
  return Expr(Parser(text, dimension).parse());
}

}  // namespace vtrace
