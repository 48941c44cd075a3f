#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vtrace/expr.hpp"

namespace vtrace {

enum class Regularity { C0, C1, C2 };

/// Sampled essential infimum / supremum of an exponent.
struct ExponentBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// A variable exponent x -> p(x) on a subset of R^N, backed by an
/// expression. Derivatives are symbolic and available up to the declared
/// regularity.
class ExponentField {
 public:
  ExponentField(Expr expr, int dimension, Regularity regularity = Regularity::C2);

  static ExponentField parse(std::string_view text, int dimension,
                             Regularity regularity = Regularity::C2);
  static ExponentField constant(double value, int dimension);

  double operator()(std::span<const double> x) const { return expr_.evaluate(x); }

  /// Requires regularity >= C1 (RegularityMissing otherwise).
  std::vector<double> gradient(std::span<const double> x) const;
  double directional_derivative(std::span<const double> x, std::span<const double> direction) const;
  /// Row-major N x N Hessian. Requires regularity C2.
  std::vector<double> hessian(std::span<const double> x) const;

  const Expr& expr() const { return expr_; }
  int dimension() const { return dimension_; }
  Regularity regularity() const { return regularity_; }

  /// Copy carrying bounds sampled over `points` (row-major, N per point).
  ExponentField with_bounds(std::span<const double> points) const;
  const std::optional<ExponentBounds>& bounds() const { return bounds_; }

 private:
  Expr expr_;
  int dimension_;
  Regularity regularity_;
  std::vector<Expr> gradient_;
  std::vector<Expr> hessian_;
  std::optional<ExponentBounds> bounds_;
};

/// Bounds of `field` over row-major `points`.
ExponentBounds sample_bounds(const ExponentField& field, std::span<const double> points);

/// Checks 1 < p- <= p+ < N for an exponent on the domain.
/// Throws ExponentRangeError on violation.
void validate_bulk_exponent(const ExponentBounds& bounds, int dimension);
/// Checks r- >= 1 for a boundary exponent.
void validate_boundary_exponent(const ExponentBounds& bounds);

/// The critical Sobolev exponent p* = N p/(N-p) and the critical trace
/// exponent p_* = (N-1) p/(N-p) of a field p.
class CriticalExponents {
 public:
  explicit CriticalExponents(ExponentField p) : p_(std::move(p)) {}

  double sobolev(std::span<const double> x) const;
  double trace(std::span<const double> x) const;
  const ExponentField& base() const { return p_; }

 private:
  ExponentField p_;
};

/// p_* as a closed form of the value p (for scalar use).
double trace_critical_value(double p, int dimension);
double sobolev_critical_value(double p, int dimension);

/// Throws SupercriticalError when the cached bounds show p+ >= N.
CriticalExponents trace_critical(const ExponentField& p);

struct CriticalSet {
  std::vector<std::size_t> indices;  // into the queried point list
  double margin = 0.0;               // min over all points of p_* - r
};

/// Points (row-major, N per point) where p_*(x) - r(x) <= tol.
CriticalSet critical_set(const ExponentField& p, const ExponentField& r,
                         std::span<const double> boundary_points, double tol);

enum class ExtremumKind { Min, Max };

struct ExtremumCheck {
  bool holds = true;
  std::optional<std::vector<double>> witness;
  double worst_excess = 0.0;  // largest violation amount, <= 0 when it holds
};

inline constexpr double kDefaultExtremumTol = 1e-10;

/// Samples a deterministic polar grid of the disk B_radius(x0) (N = 2) and
/// checks the field against its value at x0.
ExtremumCheck local_extremum_check(const ExponentField& field, std::span<const double> x0,
                                   double neighborhood_radius, ExtremumKind kind,
                                   double tol = kDefaultExtremumTol);

/// Same check over caller-supplied sample points (row-major).
ExtremumCheck local_extremum_check_at(const ExponentField& field, std::span<const double> x0,
                                      std::span<const double> points, ExtremumKind kind,
                                      double tol = kDefaultExtremumTol);

struct ModulusSample {
  double scale = 0.0;    // lambda
  double modulus = 0.0;  // estimated rho(lambda)
  double log_product = 0.0;  // |ln lambda| * rho(lambda)
};

/// Estimates the modulus of continuity on dyadic scales
/// start_scale * 2^-k, k < levels, probing 16 directions around every
/// sample point. The caller judges whether |ln lambda| rho(lambda) -> 0.
std::vector<ModulusSample> modulus_probe(const ExponentField& field, std::span<const double> points,
                                         double start_scale, int levels);

}  // namespace vtrace
