#include "vtrace/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "vtrace/errors.hpp"
#include "vtrace/halfspace.hpp"

namespace vtrace {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dist(Point2 a, Point2 b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct ArcSample {
  Point2 x;
  double w;
};

// Midpoint samples on the exact arcs.
std::vector<ArcSample> boundary_midpoints(const Boundary& b, double spacing) {
  std::vector<ArcSample> out;
  for (const auto& a : b.arcs()) {
    const double len = a.length();
    const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
    for (int k = 0; k < n; ++k) out.push_back({a.at((k + 0.5) / n), len / n});
  }
  return out;
}

struct ExtremumPair {
  ExtremumCheck p_min;
  ExtremumCheck r_max;
};

ExtremumPair extremum_checks(const Boundary& boundary, const ExponentField& p, const ExponentField& r, Point2 x0,
                             double radius, double tol) {
  std::vector<double> interior;
  constexpr int kRings = 12;
  for (int ring = 1; ring <= kRings; ++ring) {
    const double rho = radius * ring / kRings;
    const int count = 8 * ring;
    for (int k = 0; k < count; ++k) {
      const double th = 2.0 * std::numbers::pi * k / count;
      const Point2 x{x0[0] + rho * std::cos(th), x0[1] + rho * std::sin(th)};
      if (boundary.contains(x)) {
        interior.push_back(x[0]);
        interior.push_back(x[1]);
      }
    }
  }
  std::vector<double> bd;
  for (const auto& s : boundary.sample(radius / 24.0)) {
    if (dist(s.point, x0) >= radius) continue;
    bd.push_back(s.point[0]);
    bd.push_back(s.point[1]);
    // the minimum of p is taken over the closed domain
    interior.push_back(s.point[0]);
    interior.push_back(s.point[1]);
  }
  const double xp[2] = {x0[0], x0[1]};
  return {local_extremum_check_at(p, xp, interior, ExtremumKind::Min, tol),
          local_extremum_check_at(r, xp, bd, ExtremumKind::Max, tol)};
}

}  // namespace

const char* to_string(Truth t) {
  switch (t) {
    case Truth::True:
      return "true";
    case Truth::False:
      return "false";
    case Truth::Indeterminate:
      return "indeterminate";
  }
  return "indeterminate";
}

Truth compare_strict(Estimate lhs, Estimate rhs) {
  const double el = std::abs(lhs.error), er = std::abs(rhs.error);
  if (lhs.value + el < rhs.value - er) return Truth::True;
  if (lhs.value - el >= rhs.value + er) return Truth::False;
  return Truth::Indeterminate;
}

RateFunction RateFunction::log_power(double a, double c) {
  if (!(a > 0.0 && a <= 1.0)) throw DomainError("log_power exponent must lie in (0, 1]");
  RateFunction f;
  f.kind = Kind::LogPower;
  f.a = a;
  f.c = c;
  return f;
}

RateFunction RateFunction::iterated_log(int depth, double c) {
  if (depth < 1) throw DomainError("iterated_log depth must be at least 1");
  RateFunction f;
  f.kind = Kind::IteratedLog;
  f.depth = depth;
  f.c = c;
  return f;
}

RateFunction RateFunction::custom(std::vector<std::pair<double, double>> table) {
  if (table.size() < 2) throw DomainError("rate table needs at least two entries");
  std::sort(table.begin(), table.end());
  for (const auto& [rho, v] : table)
    if (!(rho > 1.0)) throw DomainError("rate table abscissae must exceed 1");
  RateFunction f;
  f.kind = Kind::Table;
  f.table = std::move(table);
  return f;
}

double RateFunction::operator()(double rho) const {
  switch (kind) {
    case Kind::LogPower:
      return c * std::pow(std::log(rho), a);
    case Kind::IteratedLog: {
      double v = std::log(rho);
      for (int k = 0; k < depth; ++k) v = std::log(v);
      return c * v;
    }
    case Kind::Table: {
      const double l = std::log(rho);
      if (l <= std::log(table.front().first)) return table.front().second;
      if (l >= std::log(table.back().first)) return table.back().second;
      for (std::size_t i = 1; i < table.size(); ++i) {
        const double l1 = std::log(table[i].first);
        if (l <= l1) {
          const double l0 = std::log(table[i - 1].first);
          const double f = (l - l0) / (l1 - l0);
          return (1.0 - f) * table[i - 1].second + f * table[i].second;
        }
      }
      return table.back().second;
    }
  }
  return 0.0;
}

std::string RateFunction::describe() const {
  switch (kind) {
    case Kind::LogPower:
      return "log_power(a=" + fmt("%g", a) + ", c=" + fmt("%g", c) + ")";
    case Kind::IteratedLog:
      return "iterated_log(depth=" + std::to_string(depth) + ", c=" + fmt("%g", c) + ")";
    case Kind::Table:
      return "table(" + std::to_string(table.size()) + " entries)";
  }
  return "";
}

double CriticalLocus::distance(const Boundary& boundary, Point2 x) const {
  double d = kInf;
  for (const auto& q : points) d = std::min(d, dist(q, x));
  for (int a : arcs) {
    if (a < 0 || static_cast<std::size_t>(a) >= boundary.arcs().size()) throw DomainError("critical arc index out of range");
    const auto& arc = boundary.arcs()[static_cast<std::size_t>(a)];
    d = std::min(d, dist(arc.at(arc.closest_param(x)), x));
  }
  return d;
}

ConditionVerdict compactness_rate_check(const Boundary& boundary, const ExponentField& p, const ExponentField& r,
                                        const CriticalLocus& K, double s, double C, double r0,
                                        const RateFunction& phi, const CompactnessOptions& options) {
  ConditionVerdict v;
  v.name = "compactness_rate";
  v.provenance = {"p", "r", "K", "s", "C", "r0", "phi=" + phi.describe()};
  if (!(s > 0.0 && s <= 1.0) || !(r0 > 0.0 && r0 < std::exp(-1.0)) || !(C > 0.0)) {
    v.satisfied = Truth::False;
    v.margin = v.rhs = -kInf;
    v.notes.push_back("preconditions 0 < s <= N-1, 0 < r0 < 1/e, C > 0 not met");
    return v;
  }
  const double rho_min = r0 * std::ldexp(1.0, -(options.dyadic_levels - 1));
  const double spacing = options.sample_spacing > 0.0 ? options.sample_spacing : rho_min / 32.0;
  const auto samples = boundary_midpoints(boundary, spacing);
  const CriticalExponents crit(p);

  double margin_a = kInf, margin_b = kInf;
  std::size_t undefined = 0, outside = 0, inside = 0;
  std::vector<double> dists(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Point2 x = samples[i].x;
    const double xp[2] = {x[0], x[1]};
    const double d = K.empty() ? kInf : K.distance(boundary, x);
    dists[i] = d;
    const double gap = crit.trace(xp) - r(xp);
    if (d >= r0) {
      ++outside;
      margin_a = std::min(margin_a, gap);
    } else {
      ++inside;
      if (!(d > 1e-14)) {
        ++undefined;
        margin_b = -kInf;
        continue;
      }
      const double rate = phi(1.0 / d) / std::log(1.0 / d);
      margin_b = std::min(margin_b, gap - rate);
    }
  }
  v.details.emplace_back("subcritical_margin_outside", margin_a);
  v.details.emplace_back("rate_margin_inside", margin_b);
  v.details.emplace_back("samples_outside", static_cast<double>(outside));
  v.details.emplace_back("samples_inside", static_cast<double>(inside));
  if (undefined > 0) v.notes.push_back(std::to_string(undefined) + " samples at distance 0 from K: rate term undefined");
  if (outside == 0) v.notes.push_back("the whole boundary lies in K(r0)");

  // admissibility of phi: positive, phi/ln nonincreasing, growing
  bool phi_ok = true;
  {
    double prev = kInf;
    for (int k = 0; k <= 64; ++k) {
      const double rho = std::exp(std::log(1.0 / r0) * std::pow(2.0, k / 8.0));
      const double f = phi(rho);
      const double q = f / std::log(rho);
      if (!(f > 0.0) || q > prev * (1.0 + 1e-12)) phi_ok = false;
      prev = q;
    }
    if (!phi_ok) v.notes.push_back("phi is not positive with phi/ln nonincreasing on [1/r0, inf)");
  }

  double margin_c = kInf;
  if (!K.empty()) {
    std::vector<double> lr, lh;
    for (int k = 0; k < options.dyadic_levels; ++k) {
      const double rho = r0 * std::ldexp(1.0, -k);
      double H = 0.0;
      for (std::size_t i = 0; i < samples.size(); ++i)
        if (dists[i] < rho) H += samples[i].w;
      const double bound = C * std::pow(rho, s);
      margin_c = std::min(margin_c, (bound - H) / bound);
      if (H > 0.0) {
        lr.push_back(std::log(rho));
        lh.push_back(std::log(H));
      }
    }
    if (lr.size() >= 2) {
      const double n = static_cast<double>(lr.size());
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < lr.size(); ++i) {
        sx += lr[i];
        sy += lh[i];
        sxx += lr[i] * lr[i];
        sxy += lr[i] * lh[i];
      }
      const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
      v.details.emplace_back("fitted_s", slope);
      v.details.emplace_back("fitted_C", std::exp((sy - slope * sx) / n));
    }
    v.details.emplace_back("minkowski_margin", margin_c);
  }

  const bool a_ok = margin_a > 0.0;
  const bool b_ok = undefined == 0 && margin_b >= -1e-12;
  const bool c_ok = margin_c >= -1e-12;
  v.margin = std::min({margin_a, margin_b, margin_c});
  v.lhs = 0.0;
  v.rhs = v.margin;
  v.satisfied = a_ok && b_ok && c_ok && phi_ok ? Truth::True : Truth::False;
  if (!a_ok) v.notes.push_back("r is not uniformly subcritical outside K(r0)");
  if (!b_ok) v.notes.push_back("rate bound fails inside K(r0)");
  if (!c_ok) v.notes.push_back("Minkowski bound H^1(K(rho)) <= C rho^s fails");
  return v;
}

double global_lhs(const Measures& m, const ExponentBounds& p, const ExponentBounds& r) {
  const double num = std::max(std::pow(m.volume, 1.0 / p.upper), std::pow(m.volume, 1.0 / p.lower));
  const double den = std::min(std::pow(m.boundary_area, 1.0 / r.upper), std::pow(m.boundary_area, 1.0 / r.lower));
  return num / den;
}

ConditionVerdict global_condition_from_measures(const Measures& m, const ExponentBounds& p, const ExponentBounds& r,
                                                Estimate T_bar) {
  ConditionVerdict v;
  v.name = "global";
  v.lhs = global_lhs(m, p, r);
  v.rhs = T_bar.value;
  v.margin = v.rhs - v.lhs;
  v.satisfied = compare_strict({v.lhs, 0.0}, T_bar);
  v.provenance = {"|Omega|=" + fmt("%.17g", m.volume), "|dOmega|=" + fmt("%.17g", m.boundary_area),
                  "p-=" + fmt("%.17g", p.lower), "p+=" + fmt("%.17g", p.upper), "r-=" + fmt("%.17g", r.lower),
                  "r+=" + fmt("%.17g", r.upper), "T_bar=" + fmt("%.17g", T_bar.value) + "+-" + fmt("%.3g", T_bar.error)};
  v.details.emplace_back("T_bar_error", T_bar.error);
  return v;
}

ConditionVerdict global_condition(const PlanarDomain& domain, const ExponentField& p, const ExponentField& r,
                                  Estimate T_bar) {
  if (!domain.gamma_arcs().empty()) throw GammaNotEmpty("the global condition tests v = 1, which needs an empty Dirichlet part");
  const auto& mesh = domain.mesh();
  std::vector<double> all, bd;
  for (const auto& x : mesh.vertices) {
    all.push_back(x[0]);
    all.push_back(x[1]);
  }
  for (const auto& e : mesh.boundary_edges) {
    bd.push_back(mesh.vertices[static_cast<std::size_t>(e.v0)][0]);
    bd.push_back(mesh.vertices[static_cast<std::size_t>(e.v0)][1]);
  }
  // exact measures of the curved domain, not of the polygonal mesh
  const Measures m{domain.boundary().area(), domain.boundary().length()};
  return global_condition_from_measures(m, sample_bounds(p, all), sample_bounds(r, bd), T_bar);
}

double global_threshold_scale(const Measures& m, const ExponentBounds& p, const ExponentBounds& r, double T_bar,
                              double t_max) {
  if (!(p.upper < r.lower)) throw DomainError("the scaling argument needs p+ < r-");
  auto lhs = [&](double t) { return global_lhs({m.volume * t * t, m.boundary_area * t}, p, r); };
  double lo = 1e-12, hi = t_max;
  if (lhs(hi) <= T_bar) return hi;
  if (lhs(lo) >= T_bar) return lo;
  for (int k = 0; k < 200 && hi - lo > 1e-15 * hi; ++k) {
    const double mid = std::sqrt(lo * hi);
    (lhs(mid) <= T_bar ? lo : hi) = mid;
  }
  return lo;
}

ConditionVerdict local_condition(const Boundary& boundary, const ExponentField& p, const ExponentField& r, Point2 x0,
                                 const LocalConditionOptions& options) {
  if (p.regularity() != Regularity::C2 || r.regularity() != Regularity::C2)
    throw RegularityMissing("local conditions need p and r of class C2");
  const FermiChart chart = fermi_chart(boundary, x0);
  const Point2 b = chart.base();
  const double xb[2] = {b[0], b[1]};
  const double gap = CriticalExponents(p).trace(xb) - r(xb);
  if (std::abs(gap) > options.critical_tol)
    throw NotCritical("base point is not critical: p_* - r = " + fmt("%.6g", gap));

  ConditionVerdict v;
  v.name = "local";
  v.provenance = {"x0=(" + fmt("%.17g", b[0]) + "," + fmt("%.17g", b[1]) + ")", "p", "r", "chart"};
  const double radius = options.neighborhood > 0.0 ? options.neighborhood : 0.5 * chart.validity_radius();
  const auto ex = extremum_checks(boundary, p, r, b, radius, options.extremum_tol);
  const auto g = p.gradient(xb);
  const Point2 n = chart.normal();
  const double dtp = g[0] * n[0] + g[1] * n[1];
  const double H = chart.curvature();
  v.details.emplace_back("dt_p", dtp);
  v.details.emplace_back("H", H);
  v.details.emplace_back("p_min_excess", ex.p_min.worst_excess);
  v.details.emplace_back("r_max_excess", ex.r_max.worst_excess);
  v.details.emplace_back("neighborhood", radius);

  const double tol = options.extremum_tol;
  const bool by_dtp = dtp > tol, by_H = H > tol;
  v.lhs = 0.0;
  v.rhs = std::max(dtp, H);
  v.margin = v.rhs;
  bool ok = true;
  if (!ex.p_min.holds) {
    ok = false;
    v.notes.push_back("p does not have a local minimum at x0");
  }
  if (!ex.r_max.holds) {
    ok = false;
    v.notes.push_back("r does not have a local maximum at x0");
  }
  if (by_dtp && by_H)
    v.notes.push_back("branch: normal derivative and curvature");
  else if (by_dtp)
    v.notes.push_back("branch: normal derivative");
  else if (by_H)
    v.notes.push_back("branch: curvature");
  else {
    ok = false;
    v.notes.push_back("neither dt p(x0) > 0 nor H(x0) > 0");
  }
  if (!ok) v.margin = std::min({v.margin, -ex.p_min.worst_excess, -ex.r_max.worst_excess});
  v.satisfied = ok ? Truth::True : Truth::False;
  return v;
}

BarTEstimate estimate_bar_T(const DiscreteTraceProblem& problem, int max_points, const SolverOptions& solver) {
  BarTEstimate out;
  const auto crit = problem.critical_vertices(problem.critical_tol());
  if (crit.indices.empty()) {
    out.value = {kInf, 0.0};
    out.notes.push_back("critical set is empty on the sampled boundary vertices");
    return out;
  }
  const auto& verts = problem.domain().mesh().vertices;
  const auto& boundary = problem.domain().boundary();
  const int nc = static_cast<int>(crit.indices.size());
  const int np = std::max(1, std::min(max_points, nc));
  double best = kInf, best_err = 0.0;
  for (int k = 0; k < np; ++k) {
    const Point2 x = verts[crit.indices[static_cast<std::size_t>(static_cast<long>(k) * nc / np)]];
    const double xp[2] = {x[0], x[1]};
    double value = kInf, err = 0.0;
    bool extremal = false;
    try {
      const FermiChart chart = fermi_chart(boundary, x);
      const auto ex = extremum_checks(boundary, problem.p(), problem.r(), chart.base(), 0.5 * chart.validity_radius(),
                                      kDefaultExtremumTol);
      extremal = ex.p_min.holds && ex.r_max.holds;
    } catch (const CornerError&) {
    }
    if (extremal) {
      // error bar: change under halving the truncation radius (both
      // estimates carry the analytic tails)
      const double p0 = problem.p()(xp);
      QuadratureOptions half;
      half.truncation_R = 0.5 * half.truncation_R;
      value = sharp_constant_quadrature(2, p0).K_inv;
      err = std::max(std::abs(value - sharp_constant_quadrature(2, p0, half).K_inv), 1e-12 * value);
    } else {
      const double R = std::min(0.5 * boundary.length() / std::numbers::pi, 16.0 * problem.domain().target_h());
      const auto lc = local_trace_constant(problem, x, R, solver);
      value = lc.value;
      err = lc.error_bar;
      out.notes.push_back("radius schedule used at (" + fmt("%.6g", x[0]) + "," + fmt("%.6g", x[1]) + ")");
    }
    if (value < best) {
      best = value;
      best_err = err;
      out.argmin = x;
    }
  }
  out.sampled_points = np;
  out.value = {best, best_err};
  out.notes.push_back("infimum over " + std::to_string(np) + " sampled critical points");
  return out;
}

ConditionVerdict existence_verdict(Estimate T, Estimate T_bar) {
  ConditionVerdict v;
  v.name = "existence";
  v.lhs = T.value;
  v.rhs = T_bar.value;
  v.margin = v.rhs - v.lhs;
  v.satisfied = compare_strict(T, T_bar);
  v.provenance = {"T=" + fmt("%.17g", T.value) + "+-" + fmt("%.3g", T.error),
                  "T_bar=" + fmt("%.17g", T_bar.value) + "+-" + fmt("%.3g", T_bar.error)};
  v.details.emplace_back("T_error", T.error);
  v.details.emplace_back("T_bar_error", T_bar.error);
  return v;
}

}  // namespace vtrace
