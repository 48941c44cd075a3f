#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "vtrace/errors.hpp"
#include "vtrace/expr.hpp"

namespace vtrace {
namespace {

double eval(const char* text, std::vector<double> x, int dim = 2) {
  return parse_exponent(text, dim).evaluate(x);
}

TEST(Expr, Precedence) {
  EXPECT_DOUBLE_EQ(eval("1 + 2*3", {0, 0}), 7.0);
  EXPECT_DOUBLE_EQ(eval("(1 + 2)*3", {0, 0}), 9.0);
  EXPECT_DOUBLE_EQ(eval("2^3^2", {0, 0}), 512.0);  // right associative
  EXPECT_DOUBLE_EQ(eval("-2^2", {0, 0}), -4.0);
  EXPECT_DOUBLE_EQ(eval("8/4/2", {0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(eval("1.5e-1 + 2E1", {0, 0}), 20.15);
}

TEST(Expr, CoordinatesAndFunctions) {
  EXPECT_DOUBLE_EQ(eval("x1 + 10*x2", {0.5, 2}), 20.5);
  EXPECT_NEAR(eval("exp(log(x1)) + sqrt(x2)", {3, 16}), 7.0, 1e-14);
  EXPECT_DOUBLE_EQ(eval("x3", {1, 2, 3}, 3), 3.0);
}

TEST(Expr, Errors) {
  EXPECT_THROW(parse_exponent("1 +", 2), SyntaxError);
  EXPECT_THROW(parse_exponent("(1", 2), SyntaxError);
  EXPECT_THROW(parse_exponent("foo(1)", 2), SyntaxError);
  EXPECT_THROW(parse_exponent("2^x1", 2), SyntaxError);
  EXPECT_THROW(parse_exponent("1 2", 2), SyntaxError);
  EXPECT_THROW(parse_exponent("x3", 2), DimensionError);
  EXPECT_THROW(parse_exponent("x0", 2), DimensionError);
  try {
    parse_exponent("1 + $", 2);
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.position(), 4u);
  }
}

TEST(Expr, RoundTripIsBitIdentical) {
  const char* cases[] = {"1.5 + 0.1*x1", "-x1*x2/(1 + x2^2)", "exp(-x1) - log(2 + x2)", "sqrt(1 + x1^2)^3",
                         "0.1/3 - -x2", "(x1 - x2)^-1.5"};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.1, 2.0);
  for (const char* c : cases) {
    const Expr e = parse_exponent(c, 2);
    const Expr back = parse_exponent(e.to_string(), 2);
    for (int k = 0; k < 20; ++k) {
      const std::vector<double> x{U(rng), U(rng)};
      const double a = e.evaluate(x), b = back.evaluate(x);
      if (std::isnan(a)) {
        EXPECT_TRUE(std::isnan(b)) << c;
      } else {
        EXPECT_EQ(a, b) << c << " -> " << e.to_string();
      }
    }
  }
}

TEST(Expr, DerivativeMatchesFiniteDifference) {
  const char* cases[] = {"x1^3*x2", "exp(x1*x2)", "log(1 + x1^2)/x2", "sqrt(x1 + x2)", "(x1 - 2*x2)^2.5"};
  for (const char* c : cases) {
    const Expr e = parse_exponent(c, 2);
    const std::vector<double> x{1.3, 0.4};
    for (int i = 0; i < 2; ++i) {
      const double h = 1e-6;
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (e.evaluate(xp) - e.evaluate(xm)) / (2 * h);
      const double d = e.derivative(i).evaluate(x);
      EXPECT_NEAR(d, fd, 1e-6 * (1 + std::abs(fd))) << c << " d/dx" << i + 1;
    }
  }
}

TEST(Expr, ConstantFolding) {
  const Expr e = parse_exponent("2*3 + 1", 2);
  EXPECT_TRUE(e.is_constant());
  EXPECT_EQ(parse_exponent("x2", 2).max_variable_index(), 1);
  EXPECT_TRUE(parse_exponent("x1", 2).derivative(1).is_constant());
}

}  // namespace
}  // namespace vtrace
