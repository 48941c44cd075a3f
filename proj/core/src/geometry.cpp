#include "vtrace/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include "vtrace/errors.hpp"
#include "vtrace/parallel.hpp"

namespace vtrace {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double cross(Point2 a, Point2 b) { return a[0] * b[1] - a[1] * b[0]; }
Point2 sub(Point2 a, Point2 b) { return {a[0] - b[0], a[1] - b[1]}; }
double norm(Point2 a) { return std::hypot(a[0], a[1]); }
double dist(Point2 a, Point2 b) { return norm(sub(a, b)); }

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (hi << 32) | lo;
}

bool segments_cross(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  const double d1 = cross(sub(p2, p1), sub(q1, p1));
  const double d2 = cross(sub(p2, p1), sub(q2, p1));
  const double d3 = cross(sub(q2, q1), sub(p1, q1));
  const double d4 = cross(sub(q2, q1), sub(p2, q1));
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

}  // namespace

// --- Arc -------------------------------------------------------------------

Arc Arc::segment(Point2 a, Point2 b) {
  if (dist(a, b) == 0.0) throw GeometryError("degenerate segment");
  Arc arc;
  arc.kind_ = Kind::Segment;
  arc.a_ = a;
  arc.b_ = b;
  return arc;
}

Arc Arc::circle(Point2 center, double radius, double a0, double a1) {
  if (!(radius > 0.0)) throw GeometryError("arc radius must be positive");
  if (a0 == a1 || std::abs(a1 - a0) > kTwoPi + 1e-12) throw GeometryError("arc angle span must lie in (0, 2 pi]");
  Arc arc;
  arc.kind_ = Kind::Circle;
  arc.center_ = center;
  arc.radius_ = radius;
  arc.a0_ = a0;
  arc.a1_ = a1;
  return arc;
}

Point2 Arc::at(double s) const {
  if (kind_ == Kind::Segment) return {a_[0] + s * (b_[0] - a_[0]), a_[1] + s * (b_[1] - a_[1])};
  const double th = a0_ + s * (a1_ - a0_);
  return {center_[0] + radius_ * std::cos(th), center_[1] + radius_ * std::sin(th)};
}

Point2 Arc::tangent(double s) const {
  if (kind_ == Kind::Segment) {
    const double l = length();
    return {(b_[0] - a_[0]) / l, (b_[1] - a_[1]) / l};
  }
  const double th = a0_ + s * (a1_ - a0_);
  const double sg = a1_ > a0_ ? 1.0 : -1.0;
  return {-sg * std::sin(th), sg * std::cos(th)};
}

double Arc::length() const {
  if (kind_ == Kind::Segment) return dist(a_, b_);
  return radius_ * std::abs(a1_ - a0_);
}

double Arc::curvature() const {
  if (kind_ == Kind::Segment) return 0.0;
  return (a1_ > a0_ ? 1.0 : -1.0) / radius_;
}

Arc Arc::reversed() const {
  Arc r = *this;
  if (kind_ == Kind::Segment) std::swap(r.a_, r.b_);
  else std::swap(r.a0_, r.a1_);
  return r;
}

Arc Arc::scaled(double t) const {
  Arc r = *this;
  r.a_ = {a_[0] * t, a_[1] * t};
  r.b_ = {b_[0] * t, b_[1] * t};
  r.center_ = {center_[0] * t, center_[1] * t};
  r.radius_ = radius_ * t;
  return r;
}

namespace {

// Parameter in [0, 1) of the angle phi on the circle arc, or -1 if outside.
double circle_param(double phi, double a0, double a1) {
  const double lo = std::min(a0, a1);
  const double span = std::abs(a1 - a0);
  double rel = std::fmod(phi - lo, kTwoPi);
  if (rel < 0.0) rel += kTwoPi;
  if (rel > span) return -1.0;
  const double s = a1 > a0 ? rel / span : 1.0 - rel / span;
  return s;
}

}  // namespace

double Arc::closest_param(Point2 x) const {
  if (kind_ == Kind::Segment) {
    const Point2 d = sub(b_, a_);
    const double s = ((x[0] - a_[0]) * d[0] + (x[1] - a_[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1]);
    return std::clamp(s, 0.0, 1.0);
  }
  const Point2 r = sub(x, center_);
  if (norm(r) == 0.0) return 0.0;
  const double s = circle_param(std::atan2(r[1], r[0]), a0_, a1_);
  if (s >= 0.0) return s;
  return dist(x, at(0.0)) <= dist(x, at(1.0)) ? 0.0 : 1.0;
}

double Arc::area_form() const {
  if (kind_ == Kind::Segment) return cross(a_, b_);
  const double r = radius_;
  return r * r * (a1_ - a0_) +
         r * (center_[0] * (std::sin(a1_) - std::sin(a0_)) - center_[1] * (std::cos(a1_) - std::cos(a0_)));
}

void Arc::ray_hits(Point2 origin, Point2 dir, std::vector<double>& out) const {
  constexpr double kMin = 1e-12;
  if (kind_ == Kind::Segment) {
    const Point2 e = sub(b_, a_);
    const double den = cross(dir, e);
    if (den == 0.0) return;
    const Point2 w = sub(a_, origin);
    const double t = cross(w, e) / den;
    const double u = cross(w, dir) / den;
    if (t > kMin && u >= 0.0 && u < 1.0) out.push_back(t);
    return;
  }
  const Point2 w = sub(origin, center_);
  const double a = dir[0] * dir[0] + dir[1] * dir[1];
  const double b = 2.0 * (w[0] * dir[0] + w[1] * dir[1]);
  const double c = w[0] * w[0] + w[1] * w[1] - radius_ * radius_;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return;
  const double sq = std::sqrt(disc);
  // numerically stable pair of roots
  const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
  double roots[2] = {q / a, q != 0.0 ? c / q : -b / (2.0 * a)};
  for (double t : roots) {
    if (!(t > kMin)) continue;
    const double hx = origin[0] + t * dir[0] - center_[0];
    const double hy = origin[1] + t * dir[1] - center_[1];
    const double s = circle_param(std::atan2(hy, hx), a0_, a1_);
    if (s >= 0.0 && s < 1.0) out.push_back(t);
  }
  if (disc == 0.0 && out.size() >= 2 && out[out.size() - 1] == out[out.size() - 2]) out.pop_back();
}

bool Arc::same_carrier(const Arc& other) const {
  constexpr double kTol = 1e-12;
  if (kind_ != other.kind_) return false;
  if (kind_ == Kind::Circle)
    return dist(center_, other.center_) <= kTol * (1.0 + radius_) && std::abs(radius_ - other.radius_) <= kTol * radius_ &&
           (a1_ > a0_) == (other.a1_ > other.a0_);
  const Point2 t0 = tangent(0.0), t1 = other.tangent(0.0);
  return std::abs(cross(t0, t1)) <= kTol && (t0[0] * t1[0] + t0[1] * t1[1]) > 0.0 &&
         std::abs(cross(t0, sub(other.a_, a_))) <= kTol * (1.0 + length());
}

// --- Boundary --------------------------------------------------------------

Boundary::Boundary(std::vector<Arc> arcs) : arcs_(std::move(arcs)) {
  const int n = static_cast<int>(arcs_.size());
  if (n == 0) throw GeometryError("boundary has no arcs");
  double scale = 0.0;
  for (const auto& a : arcs_) scale = std::max(scale, a.length());
  const double tol = 1e-9 * std::max(1.0, scale);
  for (int i = 0; i < n; ++i) {
    const auto& a = arcs_[static_cast<std::size_t>(i)];
    const auto& b = arcs_[static_cast<std::size_t>((i + 1) % n)];
    if (dist(a.end(), b.start()) > tol)
      throw GeometryError("arc " + std::to_string(i) + " does not end where arc " + std::to_string((i + 1) % n) +
                          " starts");
  }
  double twice_area = 0.0;
  for (const auto& a : arcs_) twice_area += a.area_form();
  if (twice_area == 0.0) throw GeometryError("boundary encloses no area");
  order_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order_[static_cast<std::size_t>(i)] = i;
  if (twice_area < 0.0) {
    for (auto& a : arcs_) a = a.reversed();
    std::reverse(order_.begin(), order_.end());
  }
  position_.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) position_[static_cast<std::size_t>(order_[static_cast<std::size_t>(k)])] = k;

  // self-intersection test on a fine polyline
  const double total = length();
  std::vector<Point2> poly;
  std::vector<int> owner;
  for (int idx : order_) {
    const auto& a = arcs_[static_cast<std::size_t>(idx)];
    const int m = a.kind() == Arc::Kind::Segment ? 1 : std::max(8, static_cast<int>(std::ceil(a.length() / (total / 512.0))));
    for (int k = 0; k < m; ++k) {
      poly.push_back(a.at(static_cast<double>(k) / m));
      owner.push_back(idx);
    }
  }
  const std::size_t m = poly.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 2; j < m; ++j) {
      if (i == 0 && j == m - 1) continue;
      if (segments_cross(poly[i], poly[(i + 1) % m], poly[j], poly[(j + 1) % m]))
        throw GeometryError("boundary intersects itself near arc " + std::to_string(owner[i]));
    }
  }
}

Boundary Boundary::disk(Point2 center, double radius) {
  return Boundary({Arc::circle(center, radius, 0.0, std::numbers::pi),
                   Arc::circle(center, radius, std::numbers::pi, kTwoPi)});
}

Boundary Boundary::polygon(const std::vector<Point2>& vertices) {
  std::vector<Arc> arcs;
  for (std::size_t i = 0; i < vertices.size(); ++i) arcs.push_back(Arc::segment(vertices[i], vertices[(i + 1) % vertices.size()]));
  return Boundary(std::move(arcs));
}

int Boundary::next(int arc) const {
  const int n = static_cast<int>(order_.size());
  return order_[static_cast<std::size_t>((position_[static_cast<std::size_t>(arc)] + 1) % n)];
}

int Boundary::prev(int arc) const {
  const int n = static_cast<int>(order_.size());
  return order_[static_cast<std::size_t>((position_[static_cast<std::size_t>(arc)] + n - 1) % n)];
}

double Boundary::length() const {
  double l = 0.0;
  for (const auto& a : arcs_) l += a.length();
  return l;
}

double Boundary::area() const {
  double s = 0.0;
  for (const auto& a : arcs_) s += a.area_form();
  return 0.5 * s;
}

std::vector<double> Boundary::ray_hits(Point2 origin, Point2 dir) const {
  std::vector<double> hits;
  for (const auto& a : arcs_) a.ray_hits(origin, dir, hits);
  std::sort(hits.begin(), hits.end());
  return hits;
}

bool Boundary::contains(Point2 x) const {
  // parity of crossings along a fixed generic direction
  const Point2 dir{0.7648421872844885, 0.6442176872376911};
  return ray_hits(x, dir).size() % 2 == 1;
}

BoundaryPoint Boundary::closest(Point2 x) const {
  BoundaryPoint best;
  best.distance = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(arcs_.size()); ++i) {
    const auto& a = arcs_[static_cast<std::size_t>(i)];
    const double s = a.closest_param(x);
    const Point2 p = a.at(s);
    const double d = dist(x, p);
    if (d < best.distance) best = {i, s, p, d};
  }
  return best;
}

bool Boundary::is_corner_after(int arc) const {
  const auto& a = arcs_[static_cast<std::size_t>(arc)];
  const auto& b = arcs_[static_cast<std::size_t>(next(arc))];
  const Point2 ta = a.tangent(1.0), tb = b.tangent(0.0);
  constexpr double kTol = 1e-9;
  if (std::abs(cross(ta, tb)) > kTol || ta[0] * tb[0] + ta[1] * tb[1] < 0.0) return true;
  return std::abs(a.curvature() - b.curvature()) > kTol * (1.0 + std::abs(a.curvature()));
}

std::vector<BoundaryPoint> Boundary::sample(double spacing) const {
  if (!(spacing > 0.0)) throw GeometryError("sampling spacing must be positive");
  std::vector<BoundaryPoint> out;
  for (int idx : order_) {
    const auto& a = arcs_[static_cast<std::size_t>(idx)];
    const int m = std::max(1, static_cast<int>(std::ceil(a.length() / spacing - 1e-12)));
    for (int k = 0; k < m; ++k) {
      const double s = static_cast<double>(k) / m;
      out.push_back({idx, s, a.at(s), 0.0});
    }
  }
  return out;
}

Boundary Boundary::scaled(double t) const {
  if (!(t > 0.0)) throw GeometryError("scale factor must be positive");
  Boundary b = *this;
  for (auto& a : b.arcs_) a = a.scaled(t);
  return b;
}

// --- Mesh ------------------------------------------------------------------

double Mesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  const Point2 a = vertices[static_cast<std::size_t>(tri[0])];
  const Point2 b = vertices[static_cast<std::size_t>(tri[1])];
  const Point2 c = vertices[static_cast<std::size_t>(tri[2])];
  return 0.5 * cross(sub(b, a), sub(c, a));
}

double Mesh::max_edge_length() const {
  double m = 0.0;
  for (const auto& tri : triangles)
    for (int k = 0; k < 3; ++k)
      m = std::max(m, dist(vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])],
                           vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>((k + 1) % 3)])]));
  return m;
}

double Mesh::max_boundary_edge_length() const {
  double m = 0.0;
  for (const auto& e : boundary_edges)
    m = std::max(m, dist(vertices[static_cast<std::size_t>(e.v0)], vertices[static_cast<std::size_t>(e.v1)]));
  return m;
}

// --- PlanarDomain ----------------------------------------------------------

PlanarDomain::PlanarDomain(Boundary boundary, Mesh mesh, double h, std::vector<int> gamma_arcs)
    : boundary_(std::move(boundary)), mesh_(std::move(mesh)), target_h_(h), gamma_arcs_(std::move(gamma_arcs)) {}

PlanarDomain PlanarDomain::mesh_domain(const Boundary& boundary, double target_h, std::vector<int> gamma_arcs) {
  if (!(target_h > 0.0)) throw GeometryError("mesh size h must be positive");
  const int narcs = static_cast<int>(boundary.arcs().size());
  std::sort(gamma_arcs.begin(), gamma_arcs.end());
  gamma_arcs.erase(std::unique(gamma_arcs.begin(), gamma_arcs.end()), gamma_arcs.end());
  for (int g : gamma_arcs)
    if (g < 0 || g >= narcs) throw DomainError("gamma references arc " + std::to_string(g) + " which does not exist");
  if (static_cast<int>(gamma_arcs.size()) == narcs) throw DomainError("gamma must be a proper subset of the boundary");
  PlanarDomain d(boundary, generate_mesh(boundary, target_h), target_h, std::move(gamma_arcs));
  d.dirichlet_.assign(d.mesh_.vertices.size(), 0);
  for (const auto& e : d.mesh_.boundary_edges) {
    if (std::binary_search(d.gamma_arcs_.begin(), d.gamma_arcs_.end(), e.arc)) {
      d.dirichlet_[static_cast<std::size_t>(e.v0)] = 1;
      d.dirichlet_[static_cast<std::size_t>(e.v1)] = 1;
    }
  }
  d.finalize();
  return d;
}

void PlanarDomain::finalize() {
  const auto& m = mesh_;
  const std::size_t nt = m.triangles.size();
  interior_ = {};
  interior_.points.reserve(6 * nt);
  constexpr double kA = 2.0 / 3.0, kB = 1.0 / 6.0;
  const std::array<std::array<double, 3>, 3> bary{{{kA, kB, kB}, {kB, kA, kB}, {kB, kB, kA}}};
  for (std::size_t t = 0; t < nt; ++t) {
    const double area = m.triangle_area(t);
    if (!(area > 0.0)) throw GeometryError("mesh has a degenerate or inverted triangle");
    const auto& tri = m.triangles[t];
    for (const auto& lam : bary) {
      double x = 0.0, y = 0.0;
      for (int k = 0; k < 3; ++k) {
        const Point2 v = m.vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])];
        x += lam[static_cast<std::size_t>(k)] * v[0];
        y += lam[static_cast<std::size_t>(k)] * v[1];
      }
      interior_.points.push_back(x);
      interior_.points.push_back(y);
      interior_.weights.push_back(area / 3.0);
      interior_.triangle.push_back(static_cast<int>(t));
      interior_.shape.push_back(lam);
    }
  }
  boundary_q_ = {};
  const double g = 0.5 / std::sqrt(3.0);
  for (std::size_t e = 0; e < m.boundary_edges.size(); ++e) {
    const auto& be = m.boundary_edges[e];
    const Point2 a = m.vertices[static_cast<std::size_t>(be.v0)];
    const Point2 b = m.vertices[static_cast<std::size_t>(be.v1)];
    const double len = dist(a, b);
    for (double t : {0.5 - g, 0.5 + g}) {
      boundary_q_.points.push_back(a[0] + t * (b[0] - a[0]));
      boundary_q_.points.push_back(a[1] + t * (b[1] - a[1]));
      boundary_q_.weights.push_back(0.5 * len);
      boundary_q_.edge.push_back(static_cast<int>(e));
      boundary_q_.shape.push_back({1.0 - t, t});
    }
  }
}

Measures PlanarDomain::measures() const {
  std::vector<double> areas(mesh_.triangles.size());
  for (std::size_t t = 0; t < areas.size(); ++t) areas[t] = mesh_.triangle_area(t);
  std::vector<double> lens(mesh_.boundary_edges.size());
  for (std::size_t e = 0; e < lens.size(); ++e) {
    const auto& be = mesh_.boundary_edges[e];
    lens[e] = dist(mesh_.vertices[static_cast<std::size_t>(be.v0)], mesh_.vertices[static_cast<std::size_t>(be.v1)]);
  }
  return {compensated_sum(areas), compensated_sum(lens)};
}

std::array<Point2, 3> PlanarDomain::shape_gradients(std::size_t t) const {
  const auto& tri = mesh_.triangles[t];
  const Point2 p[3] = {mesh_.vertices[static_cast<std::size_t>(tri[0])], mesh_.vertices[static_cast<std::size_t>(tri[1])],
                       mesh_.vertices[static_cast<std::size_t>(tri[2])]};
  const double twice = cross(sub(p[1], p[0]), sub(p[2], p[0]));
  std::array<Point2, 3> g{};
  for (int i = 0; i < 3; ++i) {
    const Point2 pj = p[(i + 1) % 3], pk = p[(i + 2) % 3];
    g[static_cast<std::size_t>(i)] = {(pj[1] - pk[1]) / twice, (pk[0] - pj[0]) / twice};
  }
  return g;
}

WeightedSamples PlanarDomain::interior_samples(std::span<const double> u) const {
  if (u.size() != mesh_.vertices.size()) throw DimensionError("nodal vector does not match the mesh");
  WeightedSamples s;
  s.dimension = 2;
  s.points = interior_.points;
  s.weights = interior_.weights;
  const std::size_t n = s.weights.size();
  s.values.resize(n);
  std::vector<double> grads(2 * n);
  for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
    const auto& tri = mesh_.triangles[t];
    const auto g = shape_gradients(t);
    double gx = 0.0, gy = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double uk = u[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])];
      gx += uk * g[static_cast<std::size_t>(k)][0];
      gy += uk * g[static_cast<std::size_t>(k)][1];
    }
    for (std::size_t q = 3 * t; q < 3 * t + 3; ++q) {
      double v = 0.0;
      for (int k = 0; k < 3; ++k)
        v += interior_.shape[q][static_cast<std::size_t>(k)] * u[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])];
      s.values[q] = v;
      grads[2 * q] = gx;
      grads[2 * q + 1] = gy;
    }
  }
  s.gradients = std::move(grads);
  return s;
}

WeightedSamples PlanarDomain::boundary_samples(std::span<const double> u) const {
  if (u.size() != mesh_.vertices.size()) throw DimensionError("nodal vector does not match the mesh");
  WeightedSamples s;
  s.dimension = 2;
  s.points = boundary_q_.points;
  s.weights = boundary_q_.weights;
  s.values.resize(s.weights.size());
  for (std::size_t q = 0; q < s.values.size(); ++q) {
    const auto& e = mesh_.boundary_edges[static_cast<std::size_t>(boundary_q_.edge[q])];
    s.values[q] = boundary_q_.shape[q][0] * u[static_cast<std::size_t>(e.v0)] +
                  boundary_q_.shape[q][1] * u[static_cast<std::size_t>(e.v1)];
  }
  return s;
}

PlanarDomain PlanarDomain::refine(bool snap) const {
  Mesh out;
  out.vertices = mesh_.vertices;
  out.vertex_arc = mesh_.vertex_arc;
  out.vertex_param = mesh_.vertex_param;
  std::vector<char> dir = dirichlet_;
  std::vector<int> parent(mesh_.vertices.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);

  // edges on the topological boundary of the mesh
  std::unordered_map<std::uint64_t, int> use;
  for (const auto& tri : mesh_.triangles)
    for (int k = 0; k < 3; ++k) ++use[edge_key(tri[static_cast<std::size_t>(k)], tri[static_cast<std::size_t>((k + 1) % 3)])];
  std::unordered_map<std::uint64_t, int> boundary_arc;
  for (const auto& e : mesh_.boundary_edges) boundary_arc[edge_key(e.v0, e.v1)] = e.arc;

  std::unordered_map<std::uint64_t, int> mid;
  auto midpoint = [&](int a, int b) {
    const auto key = edge_key(a, b);
    if (auto it = mid.find(key); it != mid.end()) return it->second;
    const Point2 pa = mesh_.vertices[static_cast<std::size_t>(a)], pb = mesh_.vertices[static_cast<std::size_t>(b)];
    Point2 m{0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])};
    int arc = -1;
    double param = 0.0;
    char is_dir = 0;
    if (auto bt = boundary_arc.find(key); bt != boundary_arc.end()) {
      arc = bt->second;
      const auto& curve = boundary_.arcs()[static_cast<std::size_t>(arc)];
      param = curve.closest_param(m);
      if (snap) m = curve.at(param);
      is_dir = dir[static_cast<std::size_t>(a)] && dir[static_cast<std::size_t>(b)] &&
               std::binary_search(gamma_arcs_.begin(), gamma_arcs_.end(), arc);
    } else if (use[key] == 1) {
      is_dir = dir[static_cast<std::size_t>(a)] && dir[static_cast<std::size_t>(b)];
    }
    const int idx = static_cast<int>(out.vertices.size());
    out.vertices.push_back(m);
    out.vertex_arc.push_back(arc);
    out.vertex_param.push_back(param);
    dir.push_back(is_dir);
    parent.push_back(-1);
    mid.emplace(key, idx);
    return idx;
  };

  out.triangles.reserve(4 * mesh_.triangles.size());
  for (const auto& tri : mesh_.triangles) {
    const int a = tri[0], b = tri[1], c = tri[2];
    const int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
    out.triangles.push_back({a, ab, ca});
    out.triangles.push_back({ab, b, bc});
    out.triangles.push_back({ca, bc, c});
    out.triangles.push_back({ab, bc, ca});
  }
  for (const auto& e : mesh_.boundary_edges) {
    const int m = mid.at(edge_key(e.v0, e.v1));
    out.boundary_edges.push_back({e.v0, m, e.arc});
    out.boundary_edges.push_back({m, e.v1, e.arc});
  }
  PlanarDomain d(boundary_, std::move(out), 0.5 * target_h_, gamma_arcs_);
  d.dirichlet_ = std::move(dir);
  d.parent_vertex_ = std::move(parent);
  d.restricted_ = restricted_;
  d.finalize();
  return d;
}

PlanarDomain PlanarDomain::restrict_to_ball(Point2 x0, double radius) const {
  if (!(radius > 0.0)) throw DomainError("restriction radius must be positive");
  Mesh out;
  std::vector<int> local(mesh_.vertices.size(), -1);
  std::vector<int> parent;
  for (const auto& tri : mesh_.triangles) {
    Point2 c{0.0, 0.0};
    for (int v : tri) {
      c[0] += mesh_.vertices[static_cast<std::size_t>(v)][0] / 3.0;
      c[1] += mesh_.vertices[static_cast<std::size_t>(v)][1] / 3.0;
    }
    if (dist(c, x0) >= radius) continue;
    std::array<int, 3> lt{};
    for (int k = 0; k < 3; ++k) {
      const int v = tri[static_cast<std::size_t>(k)];
      if (local[static_cast<std::size_t>(v)] < 0) {
        local[static_cast<std::size_t>(v)] = static_cast<int>(out.vertices.size());
        out.vertices.push_back(mesh_.vertices[static_cast<std::size_t>(v)]);
        out.vertex_arc.push_back(mesh_.vertex_arc[static_cast<std::size_t>(v)]);
        out.vertex_param.push_back(mesh_.vertex_param[static_cast<std::size_t>(v)]);
        parent.push_back(v);
      }
      lt[static_cast<std::size_t>(k)] = local[static_cast<std::size_t>(v)];
    }
    out.triangles.push_back(lt);
  }
  if (out.triangles.empty()) throw DomainError("restriction ball contains no triangles");

  std::unordered_map<std::uint64_t, int> use;
  for (const auto& tri : out.triangles)
    for (int k = 0; k < 3; ++k) ++use[edge_key(tri[static_cast<std::size_t>(k)], tri[static_cast<std::size_t>((k + 1) % 3)])];
  std::unordered_map<std::uint64_t, char> on_boundary;
  for (const auto& e : mesh_.boundary_edges) {
    const int a = local[static_cast<std::size_t>(e.v0)], b = local[static_cast<std::size_t>(e.v1)];
    if (a < 0 || b < 0) continue;
    const auto key = edge_key(a, b);
    if (use.count(key) && use[key] == 1) {
      out.boundary_edges.push_back({a, b, e.arc});
      on_boundary[key] = 1;
    }
  }
  std::vector<char> dir(out.vertices.size(), 0);
  for (std::size_t i = 0; i < parent.size(); ++i) dir[i] = dirichlet_[static_cast<std::size_t>(parent[i])];
  for (const auto& tri : out.triangles)
    for (int k = 0; k < 3; ++k) {
      const int a = tri[static_cast<std::size_t>(k)], b = tri[static_cast<std::size_t>((k + 1) % 3)];
      const auto key = edge_key(a, b);
      if (use[key] == 1 && !on_boundary.count(key)) {
        dir[static_cast<std::size_t>(a)] = 1;
        dir[static_cast<std::size_t>(b)] = 1;
      }
    }
  PlanarDomain d(boundary_, std::move(out), target_h_, gamma_arcs_);
  d.dirichlet_ = std::move(dir);
  d.parent_vertex_ = std::move(parent);
  d.restricted_ = true;
  d.finalize();
  return d;
}

std::vector<double> PlanarDomain::extend_by_zero(std::span<const double> local, std::size_t parent_size) const {
  if (local.size() != mesh_.vertices.size()) throw DimensionError("nodal vector does not match the mesh");
  std::vector<double> out(parent_size, 0.0);
  for (std::size_t i = 0; i < local.size(); ++i) {
    const int p = parent_vertex_.empty() ? static_cast<int>(i) : parent_vertex_[i];
    if (p < 0 || static_cast<std::size_t>(p) >= parent_size) throw MeshNotNested("vertex has no parent vertex");
    out[static_cast<std::size_t>(p)] = local[i];
  }
  return out;
}

PlanarDomain PlanarDomain::scaled(double t) const {
  Mesh m = mesh_;
  for (auto& v : m.vertices) v = {v[0] * t, v[1] * t};
  PlanarDomain d(boundary_.scaled(t), std::move(m), target_h_ * t, gamma_arcs_);
  d.dirichlet_ = dirichlet_;
  d.parent_vertex_ = parent_vertex_;
  d.restricted_ = restricted_;
  d.finalize();
  return d;
}

void PlanarDomain::write_node(std::ostream& out) const {
  out << "# vtrace mesh nodes: index x y marker (0 interior, arc+1 on the boundary)\n";
  out << mesh_.vertices.size() << " 2 0 1\n";
  char buf[96];
  for (std::size_t i = 0; i < mesh_.vertices.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu %.17g %.17g %d\n", i + 1, mesh_.vertices[i][0], mesh_.vertices[i][1],
                  mesh_.vertex_arc[i] + 1);
    out << buf;
  }
}

void PlanarDomain::write_ele(std::ostream& out) const {
  out << "# vtrace mesh triangles: index v1 v2 v3 (counterclockwise, 1-based)\n";
  out << mesh_.triangles.size() << " 3 0\n";
  for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
    const auto& tri = mesh_.triangles[t];
    out << t + 1 << ' ' << tri[0] + 1 << ' ' << tri[1] + 1 << ' ' << tri[2] + 1 << '\n';
  }
}

}  // namespace vtrace
