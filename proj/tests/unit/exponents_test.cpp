#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "vtrace/errors.hpp"
#include "vtrace/exponents.hpp"

namespace vtrace {
namespace {

TEST(Exponents, CriticalValues) {
  EXPECT_DOUBLE_EQ(trace_critical_value(1.5, 2), 3.0);
  EXPECT_DOUBLE_EQ(sobolev_critical_value(1.5, 2), 6.0);
  EXPECT_DOUBLE_EQ(trace_critical_value(2.0, 3), 4.0);
  EXPECT_THROW(trace_critical_value(2.0, 2), SupercriticalError);
}

TEST(Exponents, GradientAndHessian) {
  const auto p = ExponentField::parse("1.5 + 0.1*x1^2 - 0.2*x1*x2", 2);
  const std::vector<double> x{0.5, -1.0};
  const auto g = p.gradient(x);
  EXPECT_NEAR(g[0], 0.2 * 0.5 + 0.2, 1e-15);
  EXPECT_NEAR(g[1], -0.1, 1e-15);
  const auto H = p.hessian(x);
  EXPECT_NEAR(H[0], 0.2, 1e-15);
  EXPECT_NEAR(H[1], -0.2, 1e-15);
  EXPECT_NEAR(H[2], -0.2, 1e-15);
  EXPECT_NEAR(H[3], 0.0, 1e-15);
  const std::vector<double> dir{0.0, 1.0};
  EXPECT_NEAR(p.directional_derivative(x, dir), -0.1, 1e-15);
}

TEST(Exponents, RegularityIsEnforced) {
  const auto c0 = ExponentField::parse("1.5 + x1", 2, Regularity::C0);
  const auto c1 = ExponentField::parse("1.5 + x1", 2, Regularity::C1);
  const std::vector<double> x{0, 0};
  EXPECT_THROW(c0.gradient(x), RegularityMissing);
  EXPECT_NO_THROW(c1.gradient(x));
  EXPECT_THROW(c1.hessian(x), RegularityMissing);
}

TEST(Exponents, BoundsAndValidation) {
  const auto p = ExponentField::parse("1.2 + 0.5*x1", 2);
  const std::vector<double> pts{0, 0, 1, 0, 0.5, 3};
  const auto b = sample_bounds(p, pts);
  EXPECT_DOUBLE_EQ(b.lower, 1.2);
  EXPECT_DOUBLE_EQ(b.upper, 1.7);
  EXPECT_NO_THROW(validate_bulk_exponent(b, 2));
  EXPECT_THROW(validate_bulk_exponent({1.0, 1.5}, 2), ExponentRangeError);
  EXPECT_THROW(validate_bulk_exponent({1.5, 2.0}, 2), ExponentRangeError);
  EXPECT_THROW(validate_boundary_exponent({0.9, 2.0}), ExponentRangeError);
  EXPECT_NO_THROW(validate_boundary_exponent({1.0, 2.0}));
  EXPECT_THROW(trace_critical(ExponentField::constant(2.5, 2).with_bounds(pts)), SupercriticalError);
  EXPECT_THROW(ExponentField::parse("x3", 2), DimensionError);
}

TEST(Exponents, CriticalSetMargin) {
  const auto p = ExponentField::constant(1.5, 2);
  const auto r = ExponentField::parse("3 - x1^2", 2);
  const std::vector<double> pts{0, 1, 1, 0, 0, -1, -1, 0};
  const auto cs = critical_set(p, r, pts, 1e-9);
  EXPECT_EQ(cs.indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_NEAR(cs.margin, 0.0, 1e-15);
}

TEST(Exponents, ExtremumCheck) {
  const auto bowl = ExponentField::parse("1.5 + (x1 - 1)^2 + x2^2", 2);
  const std::vector<double> x0{1, 0};
  EXPECT_TRUE(local_extremum_check(bowl, x0, 0.3, ExtremumKind::Min).holds);
  const auto max = local_extremum_check(bowl, x0, 0.3, ExtremumKind::Max);
  EXPECT_FALSE(max.holds);
  ASSERT_TRUE(max.witness.has_value());
  EXPECT_GT(max.worst_excess, 0.0);
  const auto tilted = ExponentField::parse("1.5 + 0.1*x2", 2);
  EXPECT_FALSE(local_extremum_check(tilted, x0, 0.3, ExtremumKind::Min).holds);
}

TEST(Exponents, ModulusProbeDecays) {
  const auto lipschitz = ExponentField::parse("1.5 + 0.2*x1", 2);
  const std::vector<double> pts{0, 0, 0.5, 0.5};
  const auto probe = modulus_probe(lipschitz, pts, 0.25, 6);
  ASSERT_EQ(probe.size(), 6u);
  for (std::size_t k = 0; k < probe.size(); ++k) {
    EXPECT_NEAR(probe[k].modulus, 0.2 * probe[k].scale, 1e-12);
    if (k > 0) {
      EXPECT_LT(probe[k].log_product, probe[k - 1].log_product);
    }
  }
}

}  // namespace
}  // namespace vtrace
