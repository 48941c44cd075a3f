#include "vtrace/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "vtrace/errors.hpp"

namespace vtrace {

ExponentField::ExponentField(Expr expr, int dimension, Regularity regularity)
    : expr_(std::move(expr)), dimension_(dimension), regularity_(regularity) {
  if (dimension < 1) throw DimensionError("exponent dimension must be positive");
  if (expr_.max_variable_index() >= dimension)
    throw DimensionError("exponent references x" + std::to_string(expr_.max_variable_index() + 1) +
                         " but N = " + std::to_string(dimension));
  if (regularity_ != Regularity::C0) {
    gradient_.reserve(static_cast<std::size_t>(dimension));
    for (int i = 0; i < dimension; ++i) gradient_.push_back(expr_.derivative(i));
  }
  if (regularity_ == Regularity::C2) {
    hessian_.reserve(static_cast<std::size_t>(dimension * dimension));
    for (int i = 0; i < dimension; ++i)
      for (int j = 0; j < dimension; ++j) hessian_.push_back(gradient_[static_cast<std::size_t>(i)].derivative(j));
  }
}

ExponentField ExponentField::parse(std::string_view text, int dimension, Regularity regularity) {
  return ExponentField(parse_exponent(text, dimension), dimension, regularity);
}

ExponentField ExponentField::constant(double value, int dimension) {
  return ExponentField(Expr::constant(value), dimension, Regularity::C2);
}

std::vector<double> ExponentField::gradient(std::span<const double> x) const {
  if (regularity_ == Regularity::C0) throw RegularityMissing("gradient requested of a C0 exponent");
  std::vector<double> g(gradient_.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = gradient_[i].evaluate(x);
  return g;
}

double ExponentField::directional_derivative(std::span<const double> x,
                                             std::span<const double> direction) const {
  const auto g = gradient(x);
  double d = 0.0;
  for (std::size_t i = 0; i < g.size() && i < direction.size(); ++i) d += g[i] * direction[i];
  return d;
}

std::vector<double> ExponentField::hessian(std::span<const double> x) const {
  if (regularity_ != Regularity::C2) throw RegularityMissing("Hessian requested of an exponent not declared C2");
  std::vector<double> h(hessian_.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = hessian_[i].evaluate(x);
  return h;
}

ExponentField ExponentField::with_bounds(std::span<const double> points) const {
  ExponentField copy = *this;
  copy.bounds_ = sample_bounds(*this, points);
  return copy;
}

ExponentBounds sample_bounds(const ExponentField& field, std::span<const double> points) {
  const auto n = static_cast<std::size_t>(field.dimension());
  if (points.empty() || points.size() % n != 0) throw DimensionError("sample point list does not match N");
  ExponentBounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t k = 0; k < points.size(); k += n) {
    const double v = field(points.subspan(k, n));
    if (!std::isfinite(v)) throw ExponentRangeError("exponent is not finite at a sample point");
    b.lower = std::min(b.lower, v);
    b.upper = std::max(b.upper, v);
  }
  return b;
}

void validate_bulk_exponent(const ExponentBounds& bounds, int dimension) {
  if (!(bounds.lower > 1.0))
    throw ExponentRangeError("exponent infimum " + std::to_string(bounds.lower) + " must exceed 1");
  if (!(bounds.upper < dimension))
    throw ExponentRangeError("exponent supremum " + std::to_string(bounds.upper) + " must be below N = " +
                             std::to_string(dimension));
}

void validate_boundary_exponent(const ExponentBounds& bounds) {
  if (!(bounds.lower >= 1.0))
    throw ExponentRangeError("boundary exponent infimum " + std::to_string(bounds.lower) + " must be at least 1");
}

double trace_critical_value(double p, int dimension) {
  if (!(p < dimension)) throw SupercriticalError("p = " + std::to_string(p) + " is not below N");
  return (dimension - 1) * p / (dimension - p);
}

double sobolev_critical_value(double p, int dimension) {
  if (!(p < dimension)) throw SupercriticalError("p = " + std::to_string(p) + " is not below N");
  return dimension * p / (dimension - p);
}

double CriticalExponents::sobolev(std::span<const double> x) const {
  return sobolev_critical_value(p_(x), p_.dimension());
}

double CriticalExponents::trace(std::span<const double> x) const {
  return trace_critical_value(p_(x), p_.dimension());
}

CriticalExponents trace_critical(const ExponentField& p) {
  if (p.bounds() && !(p.bounds()->upper < p.dimension()))
    throw SupercriticalError("p+ = " + std::to_string(p.bounds()->upper) + " is not below N = " +
                             std::to_string(p.dimension()));
  return CriticalExponents(p);
}

CriticalSet critical_set(const ExponentField& p, const ExponentField& r,
                         std::span<const double> boundary_points, double tol) {
  const auto n = static_cast<std::size_t>(p.dimension());
  const CriticalExponents crit(p);
  CriticalSet out;
  out.margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0, i = 0; k + n <= boundary_points.size(); k += n, ++i) {
    const auto x = boundary_points.subspan(k, n);
    const double gap = crit.trace(x) - r(x);
    out.margin = std::min(out.margin, gap);
    if (gap <= tol) out.indices.push_back(i);
  }
  return out;
}

namespace {

std::vector<double> polar_grid(std::span<const double> x0, double radius, int dimension) {
  constexpr int kRings = 12;
  std::vector<double> pts;
  if (dimension == 2) {
    for (int ring = 1; ring <= kRings; ++ring) {
      const double rho = radius * ring / kRings;
      const int count = 8 * ring;
      for (int k = 0; k < count; ++k) {
        const double th = 2.0 * std::numbers::pi * k / count;
        pts.push_back(x0[0] + rho * std::cos(th));
        pts.push_back(x0[1] + rho * std::sin(th));
      }
    }
    return pts;
  }
  for (int ring = 1; ring <= kRings; ++ring) {
    const double rho = radius * ring / kRings;
    for (int axis = 0; axis < dimension; ++axis) {
      for (double sign : {-1.0, 1.0}) {
        for (int d = 0; d < dimension; ++d) pts.push_back(x0[static_cast<std::size_t>(d)] + (d == axis ? sign * rho : 0.0));
      }
    }
  }
  return pts;
}

}  // namespace

ExtremumCheck local_extremum_check_at(const ExponentField& field, std::span<const double> x0,
                                      std::span<const double> points, ExtremumKind kind, double tol) {
  const auto n = static_cast<std::size_t>(field.dimension());
  const double center = field(x0);
  ExtremumCheck out;
  out.worst_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + n <= points.size(); k += n) {
    const auto x = points.subspan(k, n);
    const double v = field(x);
    // excess > 0 means the point violates the extremum property
    const double excess = kind == ExtremumKind::Min ? (center - tol) - v : v - (center + tol);
    if (excess > out.worst_excess) {
      out.worst_excess = excess;
      if (excess > 0.0) out.witness = std::vector<double>(x.begin(), x.end());
    }
  }
  out.holds = !(out.worst_excess > 0.0);
  if (!std::isfinite(out.worst_excess)) out.worst_excess = 0.0;
  return out;
}

ExtremumCheck local_extremum_check(const ExponentField& field, std::span<const double> x0,
                                   double neighborhood_radius, ExtremumKind kind, double tol) {
  const auto pts = polar_grid(x0, neighborhood_radius, field.dimension());
  return local_extremum_check_at(field, x0, pts, kind, tol);
}

std::vector<ModulusSample> modulus_probe(const ExponentField& field, std::span<const double> points,
                                         double start_scale, int levels) {
  const auto n = static_cast<std::size_t>(field.dimension());
  std::vector<ModulusSample> out;
  for (int level = 0; level < levels; ++level) {
    const double scale = start_scale * std::ldexp(1.0, -level);
    double modulus = 0.0;
    std::vector<double> y(n);
    for (std::size_t k = 0; k + n <= points.size(); k += n) {
      const auto x = points.subspan(k, n);
      const double px = field(x);
      const int dirs = n == 2 ? 16 : static_cast<int>(2 * n);
      for (int d = 0; d < dirs; ++d) {
        std::copy(x.begin(), x.end(), y.begin());
        if (n == 2) {
          const double th = 2.0 * std::numbers::pi * d / dirs;
          y[0] += scale * std::cos(th);
          y[1] += scale * std::sin(th);
        } else {
          y[static_cast<std::size_t>(d / 2)] += (d % 2 ? -scale : scale);
        }
        const double py = field(y);
        if (std::isfinite(py)) modulus = std::max(modulus, std::abs(py - px));
      }
    }
    out.push_back({scale, modulus, std::abs(std::log(scale)) * modulus});
  }
  return out;
}

}  // namespace vtrace
