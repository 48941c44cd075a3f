#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vtrace/exponents.hpp"
#include "vtrace/geometry.hpp"

namespace vtrace {

/// Minimization of ||u||_{1,p(x)} / ||u||_{r(x), boundary} over P1
/// functions vanishing on the Dirichlet nodes of a meshed planar domain.
class DiscreteTraceProblem {
 public:
  /// Validates 1.05 <= p- and p+ < 2 on the interior nodes, r- >= 1 and
  /// r <= p_* + critical_tol on the boundary nodes.
  DiscreteTraceProblem(PlanarDomain domain, ExponentField p, ExponentField r, double critical_tol = 1e-9);

  const PlanarDomain& domain() const { return *domain_; }
  const ExponentField& p() const { return p_; }
  const ExponentField& r() const { return r_; }
  std::size_t size() const { return domain_->mesh().vertices.size(); }
  double critical_tol() const { return critical_tol_; }

  /// Interior quadrature exponents p(x_q) and boundary exponents r(x_q).
  const std::vector<double>& interior_exponents() const { return p_int_; }
  const std::vector<double>& boundary_exponents() const { return r_bd_; }

  /// p+ < r- on the sampled nodes.
  bool p_upper_below_r_lower() const { return p_bounds_.upper < r_bounds_.lower; }
  const ExponentBounds& p_bounds() const { return p_bounds_; }
  const ExponentBounds& r_bounds() const { return r_bounds_; }
  /// Boundary vertices where p_* - r <= tol (r evaluated at the vertex).
  CriticalSet critical_vertices(double tol) const;
  bool is_critical(double tol) const { return !critical_vertices(tol).indices.empty(); }

  /// Same exponents on another mesh of the same boundary.
  DiscreteTraceProblem with_domain(PlanarDomain domain) const;

 private:
  std::shared_ptr<const PlanarDomain> domain_;
  ExponentField p_;
  ExponentField r_;
  double critical_tol_;
  std::vector<double> p_int_;
  std::vector<double> r_bd_;
  ExponentBounds p_bounds_{};
  ExponentBounds r_bounds_{};
};

/// ||u||_{1,p(x)} (modular-based Sobolev norm) of nodal values u.
double sobolev_norm(std::span<const double> u, const DiscreteTraceProblem& problem);
/// ||u||_{r(x)} on the boundary; ZeroTrace when it underflows.
double trace_norm(std::span<const double> u, const DiscreteTraceProblem& problem);
double rayleigh_quotient(std::span<const double> u, const DiscreteTraceProblem& problem);

struct QuotientGradient {
  double quotient = 0.0;
  double sobolev = 0.0;
  double trace = 0.0;
  std::vector<double> gradient;  // d quotient / d u_j, zero on Dirichlet nodes
  std::vector<double> sobolev_gradient;
  std::vector<double> trace_gradient;
};

/// Quotient and its gradient; the norm derivatives come from implicit
/// differentiation of modular(u/lambda) = 1.
QuotientGradient quotient_gradient(std::span<const double> u, const DiscreteTraceProblem& problem);

enum class InitKind { Constant, Random, Bubble };

struct InitSpec {
  InitKind kind = InitKind::Constant;
  std::uint64_t seed = 0;
  Point2 x0{};          // bubble center on the boundary
  double lambda = 0.1;  // bubble scale
};

std::vector<double> initial_guess(const DiscreteTraceProblem& problem, const InitSpec& init);

struct SolverOptions {
  int max_iter = 200;
  double tol = 1e-7;            // relative quotient decrease that stops the iteration
  double armijo = 1e-4;
  int max_backtracks = 40;
  double initial_step = 1.0;
};

struct AtomCandidate {
  int vertex = -1;
  Point2 location{};
  double score = 0.0;  // boundary mass fraction within one boundary edge length
};

struct ConcentrationVerdict {
  bool concentrated = false;
  std::optional<Point2> atom_location;
  int atom_vertex = -1;
  std::vector<double> radii;
  std::vector<double> boundary_mass_profile;   // fraction of \int |u|^r dS in B_radius(atom)
  std::vector<double> interior_gradient_mass;  // fraction of \int |grad u|^p dx in B_radius(atom)
  double decision_radius = 0.0;
  double decision_fraction = 0.0;
  std::vector<AtomCandidate> ranked_atoms;  // local maxima of the score, best first
  /// mu^{1/p(x0)} - K_inv(2, p(x0)) nu^{1/r(x0)} at the decision radius
  std::optional<double> refinement_slack;
};

struct SolverReport {
  double T_estimate = 0.0;
  std::vector<double> minimizer;  // nodal values, unit boundary norm
  int iterations = 0;
  std::vector<double> quotient_history;
  bool converged = false;
  bool line_search_failure = false;
  bool non_convergence = false;
  std::string init_label;
  /// Filled by callers that run the diagnostic on the minimizer.
  std::optional<ConcentrationVerdict> concentration;
};

/// Preconditioned projected descent from `start` (renormalized to unit
/// boundary norm after every step).
SolverReport minimize_from(const DiscreteTraceProblem& problem, std::vector<double> start,
                           const SolverOptions& options = {});
SolverReport minimize(const DiscreteTraceProblem& problem, const InitSpec& init, const SolverOptions& options = {});

struct MultiStartReport {
  SolverReport best;
  std::vector<SolverReport> runs;
};

/// Constant start, three random starts and one bubble per sampled critical
/// point (at most `max_bubbles`, evenly spread over the critical set).
MultiStartReport minimize_multistart(const DiscreteTraceProblem& problem, std::uint64_t seed,
                                     const SolverOptions& options = {}, int max_bubbles = 4);

struct ConcentrationOptions {
  double threshold = 0.9;
  double radius_factor = 10.0;  // decision radius in units of h
  int max_ranked = 5;
};

ConcentrationVerdict concentration_diagnostic(std::span<const double> u, const DiscreteTraceProblem& problem,
                                              std::span<const double> radii, const ConcentrationOptions& options = {});

struct MonotonicityResult {
  double T_full = 0.0;
  double T_local = 0.0;
  SolverReport full;
  SolverReport local;
};

/// Solves on the domain and on its restriction to B_radius(x0) (with zero
/// data on the interface); the full problem is warm-started from the local
/// minimizer extended by zero.
MonotonicityResult monotonicity_check(const DiscreteTraceProblem& problem, Point2 x0, double radius,
                                      const SolverOptions& options = {});

struct LocalConstantEstimate {
  std::vector<double> radii;
  std::vector<double> constants;
  double value = 0.0;      // supremum over the schedule
  double error_bar = 0.0;  // last increment
};

/// Discrete localized constant at x0 over the radius schedule R/2, R/4, R/8.
LocalConstantEstimate local_trace_constant(const DiscreteTraceProblem& problem, Point2 x0, double R,
                                           const SolverOptions& options = {});

}  // namespace vtrace
