#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vtrace/exponents.hpp"
#include "vtrace/geometry.hpp"
#include "vtrace/solver.hpp"

namespace vtrace {

enum class Truth { False, True, Indeterminate };

const char* to_string(Truth t);

/// A number with a symmetric error bar.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

struct ConditionVerdict {
  std::string name;
  Truth satisfied = Truth::Indeterminate;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  std::vector<std::string> provenance;
  std::vector<std::pair<std::string, double>> details;
  std::vector<std::string> notes;
  std::string label = "numerical evidence";
};

/// lhs < rhs with error bars on both sides.
Truth compare_strict(Estimate lhs, Estimate rhs);

/// phi on [1/r0, inf): the rate of approach of r to p_* near K.
struct RateFunction {
  enum class Kind { LogPower, IteratedLog, Table };
  Kind kind = Kind::IteratedLog;
  double c = 1.0;
  double a = 0.5;  // LogPower: c (ln rho)^a, 0 < a <= 1
  int depth = 1;   // IteratedLog: c ln(ln(... ln rho)), depth + 1 logarithms
  /// Table: (rho, phi) pairs, piecewise linear in ln rho, clamped outside
  /// the tabulated range.
  std::vector<std::pair<double, double>> table;

  static RateFunction log_power(double a, double c = 1.0);
  static RateFunction iterated_log(int depth, double c = 1.0);
  static RateFunction custom(std::vector<std::pair<double, double>> table);

  double operator()(double rho) const;
  std::string describe() const;
};

/// Compact subset of the boundary: finite point set plus whole arcs.
struct CriticalLocus {
  std::vector<Point2> points;
  std::vector<int> arcs;
  bool empty() const { return points.empty() && arcs.empty(); }
  double distance(const Boundary& boundary, Point2 x) const;
};

struct CompactnessOptions {
  double sample_spacing = 0.0;  // 0: smallest dyadic radius / 32
  int dyadic_levels = 6;
};

/// Evaluates the rate criterion for compactness of the trace embedding on
/// exact boundary samples: subcriticality away from K(r0), the rate bound
/// inside K(r0), and the Minkowski bound H^1(K(rho)) <= C rho^s on dyadic
/// radii (with the fitted C, s reported).
ConditionVerdict compactness_rate_check(const Boundary& boundary, const ExponentField& p, const ExponentField& r,
                                        const CriticalLocus& K, double s, double C, double r0,
                                        const RateFunction& phi, const CompactnessOptions& options = {});

/// max(|Omega|^{1/p+}, |Omega|^{1/p-}) / min(|dOmega|^{1/r+}, |dOmega|^{1/r-}).
double global_lhs(const Measures& m, const ExponentBounds& p, const ExponentBounds& r);

ConditionVerdict global_condition_from_measures(const Measures& m, const ExponentBounds& p, const ExponentBounds& r,
                                                Estimate T_bar);
/// GammaNotEmpty when the domain carries a Dirichlet part.
ConditionVerdict global_condition(const PlanarDomain& domain, const ExponentField& p, const ExponentField& r,
                                  Estimate T_bar);

/// Largest t with global_lhs(t * Omega) <= T_bar (bisection on the closed
/// form, measures scale as t^2 and t). DomainError unless p+ < r-.
double global_threshold_scale(const Measures& m, const ExponentBounds& p, const ExponentBounds& r, double T_bar,
                              double t_max = 1e6);

struct LocalConditionOptions {
  double critical_tol = 1e-9;
  double neighborhood = 0.0;  // 0: half the chart validity radius
  double extremum_tol = kDefaultExtremumTol;
};

/// Local conditions at a critical point x0: p has a local minimum and r a
/// local maximum there, and either the inward normal derivative of p or the
/// boundary curvature is positive.
ConditionVerdict local_condition(const Boundary& boundary, const ExponentField& p, const ExponentField& r, Point2 x0,
                                 const LocalConditionOptions& options = {});

struct BarTEstimate {
  Estimate value;
  std::optional<Point2> argmin;
  int sampled_points = 0;
  std::vector<std::string> notes;
};

/// Sampled infimum over the critical boundary vertices of the localized
/// constant: K_inv(2, p(x)) by quadrature where the local extremum checks
/// pass, otherwise the discrete radius schedule.
BarTEstimate estimate_bar_T(const DiscreteTraceProblem& problem, int max_points = 8,
                            const SolverOptions& solver = {});

/// T < T_bar with error bars; labeled numerical evidence.
ConditionVerdict existence_verdict(Estimate T, Estimate T_bar);

}  // namespace vtrace
