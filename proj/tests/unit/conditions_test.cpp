#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "vtrace/conditions.hpp"
#include "vtrace/errors.hpp"
#include "vtrace/halfspace.hpp"

namespace vtrace {
namespace {

constexpr double kPi = std::numbers::pi;

const char* const kRateExponent =
    "3 - 0.5*log(log(30.3/sqrt((x1-1)^2+x2^2)))/log(30.3/sqrt((x1-1)^2+x2^2))";

double detail(const ConditionVerdict& v, const std::string& key) {
  for (const auto& [k, x] : v.details)
    if (k == key) return x;
  ADD_FAILURE() << "missing detail " << key;
  return NAN;
}

TEST(Truth, CompareStrict) {
  EXPECT_EQ(compare_strict({1.0, 0.1}, {1.5, 0.1}), Truth::True);
  EXPECT_EQ(compare_strict({1.5, 0.1}, {1.0, 0.1}), Truth::False);
  EXPECT_EQ(compare_strict({1.0, 0.1}, {1.1, 0.1}), Truth::Indeterminate);
  EXPECT_EQ(compare_strict({1.0, 0.0}, {1.0, 0.0}), Truth::False);
  EXPECT_STREQ(to_string(Truth::Indeterminate), "indeterminate");
}

TEST(Rate, Families) {
  EXPECT_NEAR(RateFunction::log_power(0.5, 2.0)(std::exp(4.0)), 4.0, 1e-13);
  EXPECT_NEAR(RateFunction::iterated_log(1, 3.0)(std::exp(std::exp(2.0))), 6.0, 1e-12);
  EXPECT_THROW(RateFunction::log_power(1.5), DomainError);
  const auto t = RateFunction::custom({{10.0, 1.0}, {1000.0, 3.0}});
  EXPECT_NEAR(t(100.0), 2.0, 1e-13);
  EXPECT_EQ(t(1.0), 1.0);
  EXPECT_EQ(t(1e6), 3.0);
}

TEST(Locus, Distance) {
  const auto sq = Boundary::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  CriticalLocus K;
  K.points = {{0.5, 0}};
  EXPECT_NEAR(K.distance(sq, {0.5, 0.3}), 0.3, 1e-15);
  K.arcs = {1};
  EXPECT_NEAR(K.distance(sq, {0.9, 0.5}), 0.1, 1e-14);
  EXPECT_FALSE(K.empty());
}

TEST(Compactness, RateExponentNearPoint) {
  const auto disk = Boundary::disk({0, 0}, 1);
  const auto p = ExponentField::constant(1.5, 2);
  CriticalLocus K;
  K.points = {{1, 0}};
  const auto v = compactness_rate_check(disk, p, ExponentField::parse(kRateExponent, 2), K, 1.0, 4.0, 0.05,
                                        RateFunction::iterated_log(1, 0.25));
  EXPECT_EQ(v.satisfied, Truth::True);
  EXPECT_GT(v.margin, 0.0);
  EXPECT_NEAR(detail(v, "fitted_s"), 1.0, 0.05);
}

TEST(Compactness, CriticalArcFails) {
  const auto sq = Boundary::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  CriticalLocus K;
  K.arcs = {0};
  const auto v = compactness_rate_check(sq, ExponentField::constant(1.5, 2), ExponentField::constant(3, 2), K, 1.0,
                                        4.0, 0.05, RateFunction::iterated_log(1));
  EXPECT_EQ(v.satisfied, Truth::False);
}

TEST(Compactness, InadmissiblePhi) {
  // ln ln rho is not positive on [1/r0, inf) for r0 = 0.3
  const auto disk = Boundary::disk({0, 0}, 1);
  const auto v = compactness_rate_check(disk, ExponentField::constant(1.5, 2), ExponentField::constant(2.9, 2), {},
                                        1.0, 1.0, 0.3, RateFunction::iterated_log(1));
  EXPECT_EQ(v.satisfied, Truth::False);
  EXPECT_FALSE(v.notes.empty());
}

TEST(Global, ClosedForm) {
  const Measures m{kPi, 2 * kPi};
  EXPECT_NEAR(global_lhs(m, {1.5, 1.5}, {3, 3}), std::pow(kPi, 2.0 / 3) / std::cbrt(2 * kPi), 1e-14);
  const double T_bar = sharp_constant_quadrature(2, 1.5).K_inv;
  const double ts = global_threshold_scale(m, {1.5, 1.5}, {3, 3}, T_bar);
  const Measures at{kPi * ts * ts, 2 * kPi * ts};
  EXPECT_NEAR(global_lhs(at, {1.5, 1.5}, {3, 3}), T_bar, 1e-9);
  auto at_scale = [&](double t) {
    return global_condition_from_measures({kPi * t * t, 2 * kPi * t}, {1.5, 1.5}, {3, 3}, {T_bar, 1e-9}).satisfied;
  };
  EXPECT_EQ(at_scale(ts / 2), Truth::True);
  EXPECT_EQ(at_scale(2 * ts), Truth::False);
  EXPECT_THROW(global_threshold_scale(m, {1.5, 1.5}, {1.2, 1.2}, T_bar), DomainError);
}

TEST(Global, GammaRejected) {
  const auto sq = Boundary::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  const auto dom = PlanarDomain::mesh_domain(sq, 0.5, {0});
  EXPECT_THROW(global_condition(dom, ExponentField::constant(1.5, 2), ExponentField::constant(2, 2), {1, 0}),
               GammaNotEmpty);
}

TEST(Local, Branches) {
  const auto disk = Boundary::disk({0, 0}, 1);
  const auto sq = Boundary::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  const auto p = ExponentField::constant(1.5, 2);
  const auto r3 = ExponentField::constant(3, 2);
  const auto curved = local_condition(disk, p, r3, {1, 0});
  EXPECT_EQ(curved.satisfied, Truth::True);
  EXPECT_NEAR(detail(curved, "H"), 1.0, 1e-12);
  EXPECT_EQ(local_condition(sq, p, r3, {0.5, 0}).satisfied, Truth::False);
  const auto pn = ExponentField::parse("1.5 + 0.2*x2", 2);
  const auto rn = ExponentField::parse("(1.5 + 0.2*x2)/(2 - 1.5 - 0.2*x2)", 2);
  const auto normal = local_condition(sq, pn, rn, {0.5, 0});
  EXPECT_EQ(normal.satisfied, Truth::True);
  EXPECT_NEAR(detail(normal, "dt_p"), 0.2, 1e-12);
}

TEST(Local, Preconditions) {
  const auto disk = Boundary::disk({0, 0}, 1);
  EXPECT_THROW(local_condition(disk, ExponentField::constant(1.5, 2), ExponentField::constant(2, 2), {1, 0}),
               NotCritical);
  const auto c1 = ExponentField::parse("1.5", 2, Regularity::C1);
  EXPECT_THROW(local_condition(disk, c1, ExponentField::constant(3, 2), {1, 0}), RegularityMissing);
}

TEST(Existence, BarTOnCriticalDisk) {
  const auto dom = PlanarDomain::mesh_domain(Boundary::disk({0, 0}, 1), 0.2);
  const DiscreteTraceProblem pb(dom, ExponentField::constant(1.5, 2), ExponentField::constant(3, 2));
  const auto bt = estimate_bar_T(pb, 4);
  EXPECT_NEAR(bt.value.value, std::cbrt(2.0), 1e-6);  // K_inv(2, 3/2) = 2^{1/3}
  EXPECT_EQ(bt.sampled_points, 4);
  EXPECT_EQ(existence_verdict({1.1, 0.01}, bt.value).satisfied, Truth::True);
  EXPECT_EQ(existence_verdict({1.3, 0.01}, bt.value).satisfied, Truth::False);

  const DiscreteTraceProblem sub(dom, ExponentField::constant(1.5, 2), ExponentField::constant(2, 2));
  EXPECT_TRUE(std::isinf(estimate_bar_T(sub).value.value));
}

}  // namespace
}  // namespace vtrace
