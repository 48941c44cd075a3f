#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vtrace {

/// Decay exponent alpha = (N - p)/(p - 1) of the half-space extremal.
double extremal_alpha(int N, double p);

/// V_{lambda,y0}(y, t) = lambda^-alpha V((y - y0)/lambda, t/lambda) with
/// V = r^-alpha, r = sqrt((1 + t)^2 + |y|^2).
struct ExtremalProfile {
  int N = 3;
  double p = 2.0;
  double lambda = 1.0;
  std::vector<double> y0;  // N - 1 entries; empty means the origin

  ExtremalProfile(int N, double p, double lambda = 1.0, std::vector<double> y0 = {});
  double alpha() const { return alpha_; }
  double operator()(std::span<const double> y, double t) const;
  /// |grad V_{lambda,y0}| = alpha lambda^(-alpha-1) r^(-alpha-1) with r at the
  /// rescaled point.
  double gradient_norm(std::span<const double> y, double t) const;

 private:
  double rescaled_r(std::span<const double> y, double t) const;
  double alpha_;
};

double evaluate_extremal(const ExtremalProfile& profile, std::span<const double> y, double t);

/// The closed-form Gamma expression for the half-space trace constant,
/// returned as printed. DomainError unless 1 < p < N.
double sharp_constant_formula(int N, double p);

struct QuadratureOptions {
  double truncation_R = 100.0;
  int nodes_per_panel = 20;
  int angular_panels = 4;   // per smooth angular sector of the tail
  int angular_nodes = 24;
  int tail_series_terms = 30;
};

/// coef * t^a * |y|^b * r^-k on the half space, r = sqrt((1+t)^2 + |y|^2).
struct PowerTerm {
  double coef = 1.0;
  int t_power = 0;
  double rho_power = 0.0;
  double r_power = 0.0;
};

struct IntegralEstimate {
  double value = 0.0;      // truncated box plus analytic tail
  double truncated = 0.0;  // box only
  double tail_bound() const;
};

/// Sum of the terms integrated over R^N_+ (dy dt). DivergentIntegral when a
/// term is not integrable at infinity.
IntegralEstimate integrate_halfspace(int N, std::span<const PowerTerm> terms, const QuadratureOptions& opt = {});
/// \int_{R^{N-1}} |y|^b (1 + |y|^2)^-kappa dy.
IntegralEstimate integrate_boundary(int N, double rho_power, double kappa, const QuadratureOptions& opt = {});

/// Beta-function reductions of the same integrals (oracles).
double exact_halfspace_integral(int N, const PowerTerm& term);
double exact_boundary_integral(int N, double rho_power, double kappa);

struct SharpConstantEstimate {
  int N = 0;
  double p = 0.0;
  double K_inv = 0.0;              // quotient of the extremal by quadrature
  double tail_bound = 0.0;
  double gradient_integral = 0.0;  // \int |grad V|^p
  double trace_integral = 0.0;     // \int V(y,0)^{p_*}
  double formula = 0.0;            // printed Gamma expression
  double formula_root = 0.0;       // formula^(1/p)
  /// |formula^(1/p) * K_inv - 1|: small when the printed expression is
  /// the p-th power of the constant.
  double reconciliation_defect = 0.0;
  std::string note;
};

SharpConstantEstimate sharp_constant_quadrature(int N, double p, const QuadratureOptions& opt = {});

/// Rayleigh quotient ||grad V||_p / ||V(.,0)||_{p_*} of V_{lambda,y0},
/// evaluated by mapping the reference quadrature nodes through
/// y = y0 + lambda*xi and evaluating the dilated profile directly.
double dilated_quotient(const ExtremalProfile& profile, const QuadratureOptions& opt = {});

struct ExpansionInputs {
  int N = 3;
  double p = 2.0;
  double f0 = 1.0;
  double dtf0 = 0.0;
  double dtp0 = 0.0;
  double dttp0 = 0.0;
  double lap_y_p0 = 0.0;
  double lap_r0 = 0.0;
  double H = 0.0;
  double hbar = 0.0;
};

struct Rejection {
  std::string coefficient;
  std::string inequality;  // the hypothesis that failed
  bool divergent = false;  // integral itself does not exist
};

struct ExpansionCoefficients {
  ExpansionInputs inputs;
  std::optional<double> C0, A0, A1, D0, D1, D2, D3, D4;
  std::vector<Rejection> rejections;
  double tail_bound = 0.0;

  /// Value by name ("C0", "A0", ..., "D4"); throws HypothesisViolation (or
  /// DivergentIntegral) naming the failed inequality.
  double get(const std::string& name) const;
};

ExpansionCoefficients expansion_coefficients(const ExpansionInputs& in, const QuadratureOptions& opt = {});

/// Model domain for the test-function expansion: the ball of radius
/// `ball_radius` in R^N (exact boundary coordinates) or, when the radius is
/// infinite, the flat half space. Exponents near the base point:
/// p = p0 + dtp t + dttp t^2/2 + lap_y_p |y|^2/(2(N-1)),
/// r = p_*(p0) + lap_r |y|^2/(2(N-1)).
struct ExpansionModel {
  int N = 5;
  double p0 = 1.5;
  double dtp = 0.0;
  double dttp = 0.0;
  double lap_y_p = 0.0;
  double lap_r = 0.0;
  double ball_radius = 1.0;  // infinity for the half space
  double delta = 0.25;       // cutoff is 1 below delta, 0 beyond 2 delta

  /// Matching coefficient inputs (f = 1, H = (N-1)/R, hbar = 1/R).
  ExpansionInputs inputs() const;
};

struct NormExpansionFit {
  std::vector<double> epsilons;
  std::vector<double> sobolev_norm;   // ||v_eps||_{1,p(x)}
  std::vector<double> boundary_norm;  // ||v_eps||_{r(x), boundary}
  double D0_root = 0.0;               // D0^(1/p)
  double A0_root = 0.0;               // A0^(1/p_*)
  double fitted_eps_log_eps = 0.0;
  double fitted_eps = 0.0;
  double predicted_eps_log_eps = 0.0;     // D1/(p D0)
  std::optional<double> predicted_eps;    // D2/(p D0) when dtp = 0
  double fitted_boundary = 0.0;           // coefficient of eps^2 ln eps
  std::optional<double> predicted_boundary;  // A1/(p_* A0)
  std::vector<double> defects;  // |measured ratio - predicted ratio|
  double residual = 0.0;
};

/// Evaluates the norms of the cut-off rescaled extremal
/// v_eps = eta * eps^{-(N-p)/p} V(./eps) on the model and fits the first
/// order terms. FitUnstable when the least-squares residual is large.
NormExpansionFit norm_expansion_check(const ExpansionModel& model, const ExpansionCoefficients& coefficients,
                                      std::span<const double> epsilons);

}  // namespace vtrace
