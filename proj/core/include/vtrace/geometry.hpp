#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vtrace/luxemburg.hpp"

namespace vtrace {

using Point2 = std::array<double, 2>;

/// Straight segment or circular arc; parametrized by s in [0, 1].
class Arc {
 public:
  enum class Kind { Segment, Circle };

  static Arc segment(Point2 a, Point2 b);
  /// Circle arc from angle a0 to a1 (radians); a1 > a0 runs counterclockwise.
  static Arc circle(Point2 center, double radius, double a0, double a1);

  Kind kind() const { return kind_; }
  Point2 at(double s) const;
  /// Unit tangent along the traversal direction.
  Point2 tangent(double s) const;
  Point2 start() const { return at(0.0); }
  Point2 end() const { return at(1.0); }
  double length() const;
  /// Signed curvature of the arc as traversed: +1/R counterclockwise,
  /// -1/R clockwise, 0 for segments.
  double curvature() const;
  Arc reversed() const;
  Arc scaled(double t) const;

  Point2 center() const { return center_; }
  double radius() const { return radius_; }
  double angle0() const { return a0_; }
  double angle1() const { return a1_; }

  /// Closest point on the arc: parameter and distance.
  double closest_param(Point2 x) const;
  /// Twice the signed area contribution, \int x dy - y dx along the arc.
  double area_form() const;
  /// Parameters t > 0 where origin + t*dir meets the arc.
  void ray_hits(Point2 origin, Point2 dir, std::vector<double>& out) const;
  /// Same circle / same line as `other` (continuations share a chart).
  bool same_carrier(const Arc& other) const;

 private:
  Kind kind_ = Kind::Segment;
  Point2 a_{}, b_{};
  Point2 center_{};
  double radius_ = 0.0;
  double a0_ = 0.0, a1_ = 0.0;
};

struct BoundaryPoint {
  int arc = -1;
  double param = 0.0;
  Point2 point{};
  double distance = 0.0;
};

/// Closed boundary curve made of arcs, stored counterclockwise (domain on
/// the left). Arc indices stay those of the input even when the input was
/// clockwise and had to be reversed.
class Boundary {
 public:
  explicit Boundary(std::vector<Arc> arcs);

  static Boundary disk(Point2 center, double radius);
  static Boundary polygon(const std::vector<Point2>& vertices);

  const std::vector<Arc>& arcs() const { return arcs_; }
  /// Arc indices in traversal order.
  const std::vector<int>& order() const { return order_; }
  int next(int arc) const;
  int prev(int arc) const;

  double length() const;
  double area() const;
  bool contains(Point2 x) const;
  BoundaryPoint closest(Point2 x) const;
  double distance(Point2 x) const { return closest(x).distance; }
  /// All t > 0 where origin + t*dir crosses the boundary, sorted.
  std::vector<double> ray_hits(Point2 origin, Point2 dir) const;
  /// True when the junction at the end of `arc` has a tangent or
  /// curvature jump.
  bool is_corner_after(int arc) const;
  /// Dense samples along the boundary with spacing <= `spacing`, in
  /// traversal order, first point not repeated.
  std::vector<BoundaryPoint> sample(double spacing) const;
  Boundary scaled(double t) const;

 private:
  std::vector<Arc> arcs_;
  std::vector<int> order_;
  std::vector<int> position_;
};

struct BoundaryEdge {
  int v0 = 0;
  int v1 = 0;  // traversal direction, domain on the left
  int arc = -1;
};

struct Mesh {
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<int> vertex_arc;       // -1 for interior vertices
  std::vector<double> vertex_param;  // parameter on vertex_arc

  double triangle_area(std::size_t t) const;
  double max_edge_length() const;
  double max_boundary_edge_length() const;
};

/// Degree-2 interior rule (3 points per triangle) and 2-point Gauss rule
/// per boundary edge, stored with the shape-function values needed to
/// evaluate P1 functions.
struct InteriorQuadrature {
  std::vector<double> points;  // 2 per node
  std::vector<double> weights;
  std::vector<int> triangle;
  std::vector<std::array<double, 3>> shape;
};

struct BoundaryQuadrature {
  std::vector<double> points;
  std::vector<double> weights;
  std::vector<int> edge;
  std::vector<std::array<double, 2>> shape;
};

struct Measures {
  double volume = 0.0;
  double boundary_area = 0.0;
};

/// Meshed planar domain with a Dirichlet part (Γ, or the interface of a
/// restriction) on which functions vanish.
class PlanarDomain {
 public:
  static PlanarDomain mesh_domain(const Boundary& boundary, double target_h,
                                  std::vector<int> gamma_arcs = {});

  const Boundary& boundary() const { return boundary_; }
  const Mesh& mesh() const { return mesh_; }
  double target_h() const { return target_h_; }
  const std::vector<int>& gamma_arcs() const { return gamma_arcs_; }
  /// 1 for nodes forced to zero.
  const std::vector<char>& dirichlet() const { return dirichlet_; }
  /// For restricted or refined domains: vertex index in the parent mesh
  /// (-1 for new refinement midpoints).
  const std::vector<int>& parent_vertex() const { return parent_vertex_; }
  bool is_restriction() const { return restricted_; }

  Measures measures() const;
  const InteriorQuadrature& interior_quadrature() const { return interior_; }
  const BoundaryQuadrature& boundary_quadrature() const { return boundary_q_; }

  /// Values (and gradients) of the P1 function with nodal values `u` at
  /// the interior quadrature nodes.
  WeightedSamples interior_samples(std::span<const double> u) const;
  WeightedSamples boundary_samples(std::span<const double> u) const;
  /// Gradients of the barycentric coordinates of triangle t (3 x 2).
  std::array<Point2, 3> shape_gradients(std::size_t t) const;

  /// Red refinement; with snap, new boundary nodes are moved onto the
  /// exact arcs (then coarse functions are no longer exactly nested).
  PlanarDomain refine(bool snap = false) const;
  /// Triangles with centroid in B_radius(x0); interface nodes become
  /// Dirichlet and interface edges carry no boundary quadrature.
  PlanarDomain restrict_to_ball(Point2 x0, double radius) const;
  /// Extends a function on a restriction by zero to the parent mesh.
  std::vector<double> extend_by_zero(std::span<const double> local, std::size_t parent_size) const;
  PlanarDomain scaled(double t) const;

  /// Triangle-style ASCII export (1-based, boundary markers = arc + 1).
  void write_node(std::ostream& out) const;
  void write_ele(std::ostream& out) const;

 private:
  PlanarDomain(Boundary boundary, Mesh mesh, double h, std::vector<int> gamma_arcs);
  void finalize();

  Boundary boundary_;
  Mesh mesh_;
  double target_h_ = 0.0;
  std::vector<int> gamma_arcs_;
  std::vector<char> dirichlet_;
  std::vector<int> parent_vertex_;
  bool restricted_ = false;
  InteriorQuadrature interior_;
  BoundaryQuadrature boundary_q_;
};

/// Delaunay mesh of the region enclosed by `boundary`; the boundary is
/// sampled on the exact arcs.
Mesh generate_mesh(const Boundary& boundary, double target_h);

/// Boundary-adapted chart at a boundary point:
/// Phi(y, t) = x0 + y*tau + psi(y)*n + t*nu(y), with n the inward normal.
class FermiChart {
 public:
  Point2 base() const { return x0_; }
  Point2 tangent() const { return tau_; }
  Point2 normal() const { return n_; }
  /// Signed curvature, positive where the domain is convex.
  double curvature() const { return H_; }
  double validity_radius() const { return validity_; }
  int arc() const { return arc_; }

  double psi(double y) const;
  Point2 boundary_point(double y) const;
  Point2 inward_normal(double y) const;
  Point2 map(double y, double t) const;
  double jacobian(double y, double t) const;
  /// Columns d Phi/dy and d Phi/dt.
  std::array<Point2, 2> differential(double y, double t) const;

  friend FermiChart fermi_chart(const Boundary& boundary, Point2 x0);

 private:
  Point2 x0_{}, tau_{}, n_{};
  double H_ = 0.0;
  double validity_ = 0.0;
  int arc_ = -1;
};

/// Throws CornerError at a non-smooth junction and DomainError when x0 is
/// not on the boundary.
FermiChart fermi_chart(const Boundary& boundary, Point2 x0);
inline FermiChart fermi_chart(const PlanarDomain& domain, Point2 x0) {
  return fermi_chart(domain.boundary(), x0);
}

/// Function on the plane with optional gradient output.
using PlaneFunction = std::function<double(Point2, Point2*)>;

struct PullbackSamples {
  WeightedSamples samples;        // on the reference half disk, weights include J
  std::vector<double> jacobian;   // J Phi at each node
};

/// Samples of u(Phi(eps*z)) on the unit half disk {|z| < 1, z_2 > 0}.
PullbackSamples pullback(const PlaneFunction& u, const FermiChart& chart, double eps,
                         int radial_nodes = 16, int angular_nodes = 32);

/// Polar quadrature of u over B_eps(x0) ∩ Ω, clipped on the exact boundary.
WeightedSamples ball_samples(const PlaneFunction& u, const Boundary& boundary, Point2 x0, double eps,
                             int radial_nodes = 16, int angular_panels = 8, int angular_nodes = 16);

}  // namespace vtrace
