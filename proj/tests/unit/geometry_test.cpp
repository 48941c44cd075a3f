#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "vtrace/errors.hpp"
#include "vtrace/geometry.hpp"

namespace vtrace {
namespace {

constexpr double kPi = std::numbers::pi;

Boundary unit_square() { return Boundary::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}); }

double mesh_area(const Mesh& m) {
  double a = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) a += m.triangle_area(t);
  return a;
}

TEST(Boundary, MeasuresAndOrientation) {
  const auto disk = Boundary::disk({0.5, -1}, 2.0);
  EXPECT_NEAR(disk.length(), 4 * kPi, 1e-12);
  EXPECT_NEAR(disk.area(), 4 * kPi, 1e-12);
  const auto cw = Boundary::polygon({{0, 0}, {0, 1}, {1, 1}, {1, 0}});
  EXPECT_NEAR(cw.area(), 1.0, 1e-15);
  EXPECT_TRUE(cw.contains({0.5, 0.5}));
  EXPECT_FALSE(cw.contains({1.5, 0.5}));
}

TEST(Boundary, ClosestAndCorners) {
  const auto sq = unit_square();
  const auto bp = sq.closest({0.3, -0.2});
  EXPECT_NEAR(bp.distance, 0.2, 1e-14);
  EXPECT_NEAR(bp.point[0], 0.3, 1e-14);
  for (int a = 0; a < 4; ++a) EXPECT_TRUE(sq.is_corner_after(a));
  const auto disk = Boundary::disk({0, 0}, 1);
  EXPECT_FALSE(disk.is_corner_after(0));
  EXPECT_NEAR(disk.distance({0, 0.25}), 0.75, 1e-14);
}

TEST(Boundary, Rejections) {
  EXPECT_THROW(Boundary::polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), GeometryError);
  EXPECT_THROW(Boundary({Arc::segment({0, 0}, {1, 0}), Arc::segment({1, 0.5}, {0, 0})}), GeometryError);
  EXPECT_THROW(Arc::segment({1, 1}, {1, 1}), GeometryError);
  EXPECT_THROW(Arc::circle({0, 0}, -1, 0, 1), GeometryError);
}

TEST(Boundary, SampleSpacing) {
  const auto disk = Boundary::disk({0, 0}, 1);
  const auto pts = disk.sample(0.01);
  EXPECT_GE(pts.size(), static_cast<std::size_t>(2 * kPi / 0.01));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& a = pts[i].point;
    const auto& b = pts[(i + 1) % pts.size()].point;
    EXPECT_LE(std::hypot(a[0] - b[0], a[1] - b[1]), 0.01 + 1e-12);
    EXPECT_NEAR(std::hypot(a[0], a[1]), 1.0, 1e-14);
  }
}

TEST(Mesh, SquareIsExactAndPositive) {
  const auto dom = PlanarDomain::mesh_domain(unit_square(), 0.1);
  const auto& m = dom.mesh();
  EXPECT_NEAR(mesh_area(m), 1.0, 1e-12);
  for (std::size_t t = 0; t < m.triangles.size(); ++t) EXPECT_GT(m.triangle_area(t), 0.0);
  double bl = 0.0;
  for (double w : dom.boundary_quadrature().weights) bl += w;
  EXPECT_NEAR(bl, 4.0, 1e-12);
  EXPECT_LE(m.max_boundary_edge_length(), 0.1 + 1e-12);
  const auto meas = dom.measures();
  EXPECT_NEAR(meas.volume, 1.0, 1e-12);
  EXPECT_NEAR(meas.boundary_area, 4.0, 1e-12);
}

TEST(Mesh, DiskConvergesToExactArea) {
  double prev = 1.0;
  for (double h : {0.2, 0.1, 0.05}) {
    const auto dom = PlanarDomain::mesh_domain(Boundary::disk({0, 0}, 1), h);
    const double err = std::abs(mesh_area(dom.mesh()) - kPi);
    EXPECT_LT(err, prev);
    EXPECT_LT(err, h * h);
    prev = err;
    for (std::size_t v = 0; v < dom.mesh().vertices.size(); ++v) {
      if (dom.mesh().vertex_arc[v] >= 0) {
        const auto& x = dom.mesh().vertices[v];
        EXPECT_NEAR(std::hypot(x[0], x[1]), 1.0, 1e-13);
      }
    }
  }
}

TEST(Mesh, LinearFunctionsAreExact) {
  const auto dom = PlanarDomain::mesh_domain(Boundary::disk({0, 0}, 1), 0.2);
  std::vector<double> u;
  for (const auto& x : dom.mesh().vertices) u.push_back(2.0 + 3.0 * x[0] - x[1]);
  const auto s = dom.interior_samples(u);
  for (std::size_t q = 0; q < s.size(); ++q) {
    const auto x = s.point(q);
    EXPECT_NEAR(s.values[q], 2.0 + 3.0 * x[0] - x[1], 1e-13);
    EXPECT_NEAR((*s.gradients)[2 * q], 3.0, 1e-11);
    EXPECT_NEAR((*s.gradients)[2 * q + 1], -1.0, 1e-11);
  }
  const auto b = dom.boundary_samples(u);
  for (std::size_t q = 0; q < b.size(); ++q) {
    const auto x = b.point(q);
    EXPECT_NEAR(b.values[q], 2.0 + 3.0 * x[0] - x[1], 1e-13);
  }
}

TEST(Mesh, GammaNodesAreDirichlet) {
  const auto dom = PlanarDomain::mesh_domain(unit_square(), 0.25, {0});
  const auto& m = dom.mesh();
  int count = 0;
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    const bool on_bottom = std::abs(m.vertices[v][1]) < 1e-14;
    EXPECT_EQ(static_cast<bool>(dom.dirichlet()[v]), on_bottom);
    count += on_bottom;
  }
  EXPECT_GE(count, 5);
  EXPECT_THROW(PlanarDomain::mesh_domain(unit_square(), 0.25, {0, 1, 2, 3}), DomainError);
  EXPECT_THROW(PlanarDomain::mesh_domain(unit_square(), 0.25, {7}), DomainError);
}

TEST(Mesh, RefineKeepsParentVertices) {
  const auto dom = PlanarDomain::mesh_domain(unit_square(), 0.25);
  const auto fine = dom.refine();
  EXPECT_EQ(fine.mesh().triangles.size(), 4 * dom.mesh().triangles.size());
  EXPECT_NEAR(mesh_area(fine.mesh()), 1.0, 1e-12);
  for (std::size_t v = 0; v < fine.mesh().vertices.size(); ++v) {
    const int p = fine.parent_vertex()[v];
    if (p >= 0) {
      EXPECT_EQ(fine.mesh().vertices[v], dom.mesh().vertices[static_cast<std::size_t>(p)]);
    }
  }
}

TEST(Mesh, RestrictAndExtend) {
  const auto dom = PlanarDomain::mesh_domain(Boundary::disk({0, 0}, 1), 0.1);
  const auto loc = dom.restrict_to_ball({1, 0}, 0.4);
  EXPECT_TRUE(loc.is_restriction());
  EXPECT_LT(loc.mesh().vertices.size(), dom.mesh().vertices.size());
  int interface = 0;
  for (std::size_t v = 0; v < loc.mesh().vertices.size(); ++v) interface += loc.dirichlet()[v];
  EXPECT_GT(interface, 0);
  std::vector<double> u(loc.mesh().vertices.size(), 1.0);
  const auto ext = loc.extend_by_zero(u, dom.mesh().vertices.size());
  double ones = 0.0;
  for (double x : ext) ones += x;
  EXPECT_EQ(ones, static_cast<double>(u.size()));
  EXPECT_THROW(dom.restrict_to_ball({5, 5}, 0.1), DomainError);
}

TEST(Mesh, NodeEleExport) {
  const auto dom = PlanarDomain::mesh_domain(unit_square(), 0.5);
  std::stringstream node, ele;
  dom.write_node(node);
  dom.write_ele(ele);
  auto skip_comments = [](std::istream& in) {
    while (in.peek() == '#') in.ignore(1 << 20, '\n');
  };
  std::size_t nv = 0, nt = 0;
  int d = 0;
  skip_comments(node);
  skip_comments(ele);
  node >> nv >> d;
  ele >> nt;
  EXPECT_EQ(nv, dom.mesh().vertices.size());
  EXPECT_EQ(d, 2);
  EXPECT_EQ(nt, dom.mesh().triangles.size());
}

TEST(Mesh, Errors) {
  EXPECT_THROW(PlanarDomain::mesh_domain(unit_square(), 0.0), GeometryError);
}

TEST(Fermi, DiskChart) {
  const auto disk = Boundary::disk({0, 0}, 1);
  const auto ch = fermi_chart(disk, {0, 1});
  EXPECT_NEAR(ch.curvature(), 1.0, 1e-14);
  EXPECT_NEAR(ch.normal()[1], -1.0, 1e-14);
  EXPECT_NEAR(ch.jacobian(0, 0), 1.0, 1e-13);
  for (double y : {-0.3, 0.1, 0.4}) {
    const auto p = ch.map(y, 0.0);
    EXPECT_NEAR(std::hypot(p[0], p[1]), 1.0, 1e-13);
    const auto q = ch.map(y, 0.2);
    EXPECT_NEAR(std::hypot(q[0], q[1]), 0.8, 1e-13);
  }
  const auto jd = ch.differential(0.2, 0.1);
  const double det = jd[0][0] * jd[1][1] - jd[0][1] * jd[1][0];
  EXPECT_NEAR(std::abs(det), ch.jacobian(0.2, 0.1), 1e-12);
}

TEST(Fermi, Errors) {
  EXPECT_THROW(fermi_chart(unit_square(), {0, 0}), CornerError);
  EXPECT_THROW(fermi_chart(unit_square(), {0.5, 0.5}), DomainError);
  const auto ch = fermi_chart(unit_square(), {0.5, 0});
  EXPECT_NEAR(ch.curvature(), 0.0, 1e-15);
  EXPECT_NEAR(ch.validity_radius(), 0.25, 1e-12);
  const PlaneFunction one = [](Point2, Point2*) { return 1.0; };
  EXPECT_THROW(pullback(one, ch, 0.3), ChartRangeError);
}

TEST(Fermi, FlatPullbackIsHalfDisk) {
  const auto ch = fermi_chart(unit_square(), {0.5, 0});
  const PlaneFunction one = [](Point2, Point2*) { return 1.0; };
  const auto pb = pullback(one, ch, 0.2);
  EXPECT_NEAR(pb.samples.total_weight(), kPi / 2, 1e-12);
}

TEST(Fermi, BallSamplesLensArea) {
  const auto disk = Boundary::disk({0, 0}, 1);
  const PlaneFunction one = [](Point2, Point2*) { return 1.0; };
  const double r = 0.3;
  const auto s = ball_samples(one, disk, {1, 0}, r);
  // unit circle and circle of radius r centred on it
  const double lens = r * r * std::acos(r / 2) + std::acos(1 - r * r / 2) - 0.5 * r * std::sqrt(4 - r * r);
  EXPECT_NEAR(s.total_weight(), lens, 1e-10);
}

}  // namespace
}  // namespace vtrace
