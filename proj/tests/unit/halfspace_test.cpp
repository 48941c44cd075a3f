#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "vtrace/errors.hpp"
#include "vtrace/halfspace.hpp"

namespace vtrace {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(Extremal, AlphaAndProfile) {
  EXPECT_DOUBLE_EQ(extremal_alpha(3, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(extremal_alpha(2, 1.5), 1.0);
  const ExtremalProfile V(3, 2.0);
  const std::vector<double> y{0.0, 0.0};
  EXPECT_DOUBLE_EQ(V(y, 0.0), 1.0);
  const std::vector<double> y1{3.0, 4.0};
  EXPECT_NEAR(V(y1, 0.0), 1.0 / std::sqrt(26.0), 1e-15);
}

TEST(Extremal, GradientNormMatchesDifferences) {
  const ExtremalProfile V(3, 1.7, 0.6, {0.2, -0.1});
  const std::vector<double> y{0.5, 0.3};
  const double t = 0.4, h = 1e-6;
  double g2 = 0.0;
  for (int i = 0; i < 2; ++i) {
    auto yp = y, ym = y;
    yp[i] += h;
    ym[i] -= h;
    const double d = (V(yp, t) - V(ym, t)) / (2 * h);
    g2 += d * d;
  }
  const double dt = (V(y, t + h) - V(y, t - h)) / (2 * h);
  g2 += dt * dt;
  EXPECT_NEAR(V.gradient_norm(y, t), std::sqrt(g2), 1e-8);
}

TEST(Quadrature, MatchesBetaReductions) {
  const PowerTerm terms[] = {{1.0, 0, 0.0, 4.0}, {1.0, 1, 0.0, 5.0}, {1.0, 0, 2.0, 6.0}, {2.5, 2, 0.0, 7.0}};
  for (const auto& term : terms) {
    const auto est = integrate_halfspace(3, std::span(&term, 1));
    const double exact = exact_halfspace_integral(3, term);
    EXPECT_NEAR(est.value / exact, 1.0, 1e-6) << term.t_power << " " << term.rho_power << " " << term.r_power;
  }
  for (double kappa : {2.0, 3.0}) {
    const auto est = integrate_boundary(3, 0.0, kappa);
    EXPECT_NEAR(est.value / exact_boundary_integral(3, 0.0, kappa), 1.0, 1e-6);
  }
  EXPECT_NEAR(exact_boundary_integral(3, 0.0, 2.0), kPi, 1e-13);
}

TEST(Quadrature, DivergentTerm) {
  const PowerTerm slow{1.0, 0, 0.0, 2.5};
  EXPECT_THROW(integrate_halfspace(3, std::span(&slow, 1)), DivergentIntegral);
}

TEST(SharpConstant, ThreeTwo) {
  const auto est = sharp_constant_quadrature(3, 2.0);
  EXPECT_NEAR(est.gradient_integral / kPi, 1.0, 5e-3);
  EXPECT_NEAR(est.trace_integral / kPi, 1.0, 5e-3);
  EXPECT_NEAR(est.K_inv / std::pow(kPi, 0.25), 1.0, 1e-2);
  EXPECT_NEAR(est.formula, 1.0 / std::sqrt(kPi), 1e-12);
  EXPECT_LT(est.reconciliation_defect, 1e-2);
  EXPECT_FALSE(est.note.empty());
}

TEST(SharpConstant, PlanarCase) {
  // N = 2: the trace integral is over the line, formula is still the p-th power
  for (double p : {1.2, 1.5, 1.8}) {
    const auto est = sharp_constant_quadrature(2, p);
    EXPECT_LT(est.reconciliation_defect, 1e-3) << p;
  }
}

TEST(SharpConstant, RangeErrors) {
  EXPECT_THROW(sharp_constant_formula(3, 3.0), DomainError);
  EXPECT_THROW(sharp_constant_formula(3, 1.0), DomainError);
}

TEST(SharpConstant, DilationInvariance) {
  const double q1 = dilated_quotient(ExtremalProfile(3, 2.0, 1.0));
  for (double lambda : {0.25, 4.0}) {
    EXPECT_NEAR(dilated_quotient(ExtremalProfile(3, 2.0, lambda, {0.3, -0.2})), q1, 1e-6 * q1);
  }
}

TEST(Expansion, StructuralZerosAndGuards) {
  ExpansionInputs in;
  in.N = 3;
  in.p = 2.0;
  const auto c = expansion_coefficients(in);
  EXPECT_EQ(c.get("D3"), 0.0);
  EXPECT_THROW(c.get("D1"), HypothesisViolation);  // needs p < N^2/(3N-2)
  EXPECT_NEAR(c.get("D0") / kPi, 1.0, 5e-3);
  EXPECT_NEAR(c.get("A0") / kPi, 1.0, 5e-3);
  try {
    c.get("A1");
    FAIL();
  } catch (const HypothesisViolation& e) {
    EXPECT_NE(std::string(e.what()).find("p < (N-1)/2"), std::string::npos);
  }
  try {
    c.get("C0");
    FAIL();
  } catch (const DivergentIntegral& e) {
    EXPECT_NE(std::string(e.what()).find("p < sqrt(N)"), std::string::npos);
  }
  EXPECT_THROW(c.get("Z9"), DomainError);
}

TEST(Expansion, A1VanishesWithoutLaplacian) {
  ExpansionInputs in;
  in.N = 5;
  in.p = 1.5;
  EXPECT_EQ(expansion_coefficients(in).get("A1"), 0.0);
  EXPECT_EQ(expansion_coefficients(in).get("D1"), 0.0);
  in.lap_r0 = 0.7;
  EXPECT_LT(expansion_coefficients(in).get("A1"), 0.0);
  in.dtp0 = 0.3;
  const auto c = expansion_coefficients(in);
  EXPECT_LT(c.get("D1"), 0.0);
  EXPECT_THROW(c.get("D2"), HypothesisViolation);
}

TEST(Expansion, NormFitOnFlatModel) {
  ExpansionModel m;
  m.N = 5;
  m.p0 = 1.5;
  m.ball_radius = std::numeric_limits<double>::infinity();
  const auto c = expansion_coefficients(m.inputs());
  const std::vector<double> eps{0.02, 0.014, 0.01, 0.007, 0.005};
  const auto fit = norm_expansion_check(m, c, eps);
  EXPECT_EQ(fit.sobolev_norm.size(), eps.size());
  EXPECT_NEAR(fit.predicted_eps_log_eps, 0.0, 1e-15);
  EXPECT_LT(std::abs(fit.fitted_eps_log_eps), 0.05);
  EXPECT_NEAR(fit.sobolev_norm.back() / fit.D0_root, 1.0, 0.05);
}

}  // namespace
}  // namespace vtrace
