#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vtrace/errors.hpp"
#include "vtrace/geometry.hpp"
#include "vtrace/special.hpp"

namespace vtrace {

namespace {

double dist(Point2 a, Point2 b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

// Distance from x0 to the nearest non-smooth junction reached by walking
// along the boundary in both directions from `arc`.
double distance_to_corner(const Boundary& b, int arc, Point2 x0) {
  double best = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(b.arcs().size());
  int cur = arc;
  for (int k = 0; k < n; ++k) {
    if (b.is_corner_after(cur)) {
      best = std::min(best, dist(x0, b.arcs()[static_cast<std::size_t>(cur)].end()));
      break;
    }
    cur = b.next(cur);
  }
  cur = arc;
  for (int k = 0; k < n; ++k) {
    const int before = b.prev(cur);
    if (b.is_corner_after(before)) {
      best = std::min(best, dist(x0, b.arcs()[static_cast<std::size_t>(cur)].start()));
      break;
    }
    cur = before;
  }
  return best;
}

}  // namespace

FermiChart fermi_chart(const Boundary& boundary, Point2 x0) {
  const BoundaryPoint bp = boundary.closest(x0);
  double scale = 0.0;
  for (const auto& a : boundary.arcs()) scale = std::max(scale, a.length());
  const double tol = 1e-9 * std::max(1.0, scale);
  if (bp.distance > tol) throw DomainError("chart base point is not on the boundary");
  const auto& arcs = boundary.arcs();
  int arc = bp.arc;
  double s = bp.param;
  // junction points: prefer the arc that starts there, reject corners
  const auto& cur = arcs[static_cast<std::size_t>(arc)];
  if (dist(bp.point, cur.end()) <= tol) {
    if (boundary.is_corner_after(arc)) throw CornerError("boundary is not smooth at the chart base point");
    arc = boundary.next(arc);
    s = 0.0;
  } else if (dist(bp.point, cur.start()) <= tol) {
    if (boundary.is_corner_after(boundary.prev(arc))) throw CornerError("boundary is not smooth at the chart base point");
  }
  const auto& a = arcs[static_cast<std::size_t>(arc)];
  FermiChart c;
  c.arc_ = arc;
  c.x0_ = a.at(s);
  c.tau_ = a.tangent(s);
  c.n_ = {-c.tau_[1], c.tau_[0]};
  c.H_ = a.curvature();
  const double corner = distance_to_corner(boundary, arc, c.x0_);
  const double radius = c.H_ != 0.0 ? 1.0 / std::abs(c.H_) : std::numeric_limits<double>::infinity();
  c.validity_ = 0.5 * std::min(radius, corner);
  if (!std::isfinite(c.validity_)) c.validity_ = 0.5 * boundary.length();
  return c;
}

double FermiChart::psi(double y) const {
  if (H_ == 0.0) return 0.0;
  const double R = 1.0 / std::abs(H_);
  const double sg = H_ > 0.0 ? 1.0 : -1.0;
  if (std::abs(y) >= R) throw ChartRangeError("tangential coordinate outside the chart");
  return sg * (R - std::sqrt(R * R - y * y));
}

Point2 FermiChart::boundary_point(double y) const {
  const double p = psi(y);
  return {x0_[0] + y * tau_[0] + p * n_[0], x0_[1] + y * tau_[1] + p * n_[1]};
}

Point2 FermiChart::inward_normal(double y) const {
  if (H_ == 0.0) return n_;
  const double R = 1.0 / std::abs(H_);
  const double sg = H_ > 0.0 ? 1.0 : -1.0;
  const double c = std::sqrt(R * R - y * y) / R;
  const double t = y / R;
  // rotate n towards -tau (convex) or +tau (concave)
  return {c * n_[0] - sg * t * tau_[0], c * n_[1] - sg * t * tau_[1]};
}

Point2 FermiChart::map(double y, double t) const {
  const Point2 b = boundary_point(y);
  const Point2 nu = inward_normal(y);
  return {b[0] + t * nu[0], b[1] + t * nu[1]};
}

double FermiChart::jacobian(double y, double t) const {
  if (H_ == 0.0) return 1.0;
  const double R = 1.0 / std::abs(H_);
  const double g = R / std::sqrt(R * R - y * y);
  return g * (1.0 - H_ * t);
}

std::array<Point2, 2> FermiChart::differential(double y, double t) const {
  const Point2 nu = inward_normal(y);
  if (H_ == 0.0) return {tau_, nu};
  const double R = 1.0 / std::abs(H_);
  const double g = R / std::sqrt(R * R - y * y);
  // d/dy of the boundary point is g times the unit tangent (nu rotated clockwise)
  const Point2 tan{nu[1], -nu[0]};
  const double f = g * (1.0 - H_ * t);
  return {Point2{f * tan[0], f * tan[1]}, nu};
}

PullbackSamples pullback(const PlaneFunction& u, const FermiChart& chart, double eps, int radial_nodes,
                         int angular_nodes) {
  if (!(eps > 0.0)) throw ChartRangeError("scale must be positive");
  if (eps > chart.validity_radius())
    throw ChartRangeError("scale " + std::to_string(eps) + " exceeds the chart validity radius " +
                          std::to_string(chart.validity_radius()));
  const auto& gr = gauss_legendre(radial_nodes);
  const auto& ga = gauss_legendre(angular_nodes);
  PullbackSamples out;
  auto& s = out.samples;
  s.dimension = 2;
  std::vector<double> grads;
  for (std::size_t i = 0; i < gr.nodes.size(); ++i) {
    const double rho = 0.5 * (gr.nodes[i] + 1.0);
    const double wr = 0.5 * gr.weights[i];
    for (std::size_t j = 0; j < ga.nodes.size(); ++j) {
      const double th = 0.5 * std::numbers::pi * (ga.nodes[j] + 1.0);
      const double wt = 0.5 * std::numbers::pi * ga.weights[j];
      const double z = rho * std::cos(th), w = rho * std::sin(th);
      const double J = chart.jacobian(eps * z, eps * w);
      Point2 g{0.0, 0.0};
      const double v = u(chart.map(eps * z, eps * w), &g);
      const auto D = chart.differential(eps * z, eps * w);
      s.points.push_back(z);
      s.points.push_back(w);
      s.weights.push_back(wr * wt * rho * J);
      s.values.push_back(v);
      // chain rule: d/dz u(Phi(eps z)) = eps * DPhi^T grad u
      grads.push_back(eps * (D[0][0] * g[0] + D[0][1] * g[1]));
      grads.push_back(eps * (D[1][0] * g[0] + D[1][1] * g[1]));
      out.jacobian.push_back(J);
    }
  }
  s.gradients = std::move(grads);
  return out;
}

WeightedSamples ball_samples(const PlaneFunction& u, const Boundary& boundary, Point2 x0, double eps,
                             int radial_nodes, int angular_panels, int angular_nodes) {
  if (!(eps > 0.0)) throw DomainError("ball radius must be positive");
  const auto& gr = gauss_legendre(radial_nodes);
  const auto& ga = gauss_legendre(angular_nodes);
  // start panels at the tangent direction when x0 sits on the boundary so
  // that the kinks of the clipped radius fall on panel edges
  double theta0 = 0.0;
  const BoundaryPoint bp = boundary.closest(x0);
  if (bp.distance <= 1e-12 * (1.0 + eps)) {
    const Point2 t = boundary.arcs()[static_cast<std::size_t>(bp.arc)].tangent(bp.param);
    theta0 = std::atan2(t[1], t[0]);
  }
  // the clipped radius min(eps, exit distance) kinks where the circle
  // |x - x0| = eps crosses the boundary; those angles become breakpoints
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> breaks;
  for (int p = 0; p < angular_panels; ++p) breaks.push_back(two_pi * p / angular_panels);
  for (const Arc& arc : boundary.arcs()) {
    auto f = [&](double t) {
      const Point2 y = arc.at(t);
      return std::hypot(y[0] - x0[0], y[1] - x0[1]) - eps;
    };
    constexpr int kScan = 256;
    double t0 = 0.0, f0 = f(0.0);
    for (int k = 1; k <= kScan; ++k) {
      const double t1 = static_cast<double>(k) / kScan, f1 = f(t1);
      if ((f0 < 0.0) != (f1 < 0.0)) {
        double lo = t0, hi = t1;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          ((f(mid) < 0.0) == (f0 < 0.0) ? lo : hi) = mid;
        }
        const Point2 y = arc.at(0.5 * (lo + hi));
        breaks.push_back(std::remainder(std::atan2(y[1] - x0[1], y[0] - x0[0]) - theta0, two_pi));
      }
      t0 = t1;
      f0 = f1;
    }
  }
  for (double& b : breaks) b = b < 0.0 ? b + two_pi : b;
  std::sort(breaks.begin(), breaks.end());
  breaks.push_back(two_pi);

  WeightedSamples s;
  s.dimension = 2;
  std::vector<double> grads;
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double panel = breaks[p + 1] - breaks[p];
    if (!(panel > 1e-14)) continue;
    for (std::size_t j = 0; j < ga.nodes.size(); ++j) {
      const double th = theta0 + breaks[p] + 0.5 * panel * (ga.nodes[j] + 1.0);
      const double wt = 0.5 * panel * ga.weights[j];
      const Point2 dir{std::cos(th), std::sin(th)};
      std::vector<double> cuts{0.0};
      for (double t : boundary.ray_hits(x0, dir))
        if (t < eps) cuts.push_back(t);
      cuts.push_back(eps);
      for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k], b = cuts[k + 1];
        if (b <= a) continue;
        const double mid = 0.5 * (a + b);
        if (!boundary.contains({x0[0] + mid * dir[0], x0[1] + mid * dir[1]})) continue;
        for (std::size_t i = 0; i < gr.nodes.size(); ++i) {
          const double rho = a + 0.5 * (b - a) * (gr.nodes[i] + 1.0);
          const double wr = 0.5 * (b - a) * gr.weights[i];
          const Point2 x{x0[0] + rho * dir[0], x0[1] + rho * dir[1]};
          Point2 g{0.0, 0.0};
          s.points.push_back(x[0]);
          s.points.push_back(x[1]);
          s.weights.push_back(wr * wt * rho);
          s.values.push_back(u(x, &g));
          grads.push_back(g[0]);
          grads.push_back(g[1]);
        }
      }
    }
  }
  s.gradients = std::move(grads);
  return s;
}

}  // namespace vtrace
