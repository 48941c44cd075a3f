// Bowyer-Watson Delaunay triangulation of the region bounded by a Boundary.
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <unordered_map>
#include <unordered_set>

#include "vtrace/errors.hpp"
#include "vtrace/geometry.hpp"

namespace vtrace {

namespace {

double orient(const Point2& a, const Point2& b, const Point2& c) {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

// > 0 when d lies strictly inside the circumcircle of the ccw triangle abc
double incircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const double adx = a[0] - d[0], ady = a[1] - d[1];
  const double bdx = b[0] - d[0], bdy = b[1] - d[1];
  const double cdx = c[0] - d[0], cdy = c[1] - d[1];
  const double ad = adx * adx + ady * ady;
  const double bd = bdx * bdx + bdy * bdy;
  const double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (hi << 32) | lo;
}

class Delaunay {
 public:
  explicit Delaunay(const std::vector<Point2>& pts) : p_(pts) {
    double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
    double xmax = -xmin, ymax = -xmin;
    for (const auto& q : pts) {
      xmin = std::min(xmin, q[0]);
      xmax = std::max(xmax, q[0]);
      ymin = std::min(ymin, q[1]);
      ymax = std::max(ymax, q[1]);
    }
    const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
    const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
    const double big = 50.0 * span;
    super_ = static_cast<int>(p_.size());
    p_.push_back({cx - big, cy - big});
    p_.push_back({cx + big, cy - big});
    p_.push_back({cx, cy + big});
    tri_.push_back({super_, super_ + 1, super_ + 2});
    nbr_.push_back({-1, -1, -1});
    alive_.push_back(1);
  }

  void insert(int v) {
    const Point2& x = p_[static_cast<std::size_t>(v)];
    const int start = locate(x);
    // cavity: triangles whose circumcircle contains x, grown from the container
    std::vector<int> cavity{start};
    std::unordered_set<int> in{start};
    std::deque<int> queue{start};
    while (!queue.empty()) {
      const int t = queue.front();
      queue.pop_front();
      for (int k = 0; k < 3; ++k) {
        const int n = nbr_[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
        if (n < 0 || in.count(n)) continue;
        if (circum_contains(n, x)) {
          in.insert(n);
          cavity.push_back(n);
          queue.push_back(n);
        }
      }
    }
    // keep the cavity star-shaped with respect to x
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t i = 0; i < cavity.size() && !changed; ++i) {
        const int t = cavity[i];
        for (int k = 0; k < 3; ++k) {
          const int n = nbr_[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
          if (n >= 0 && in.count(n)) continue;
          const auto& tv = tri_[static_cast<std::size_t>(t)];
          const int a = tv[static_cast<std::size_t>((k + 1) % 3)], b = tv[static_cast<std::size_t>((k + 2) % 3)];
          if (orient(p_[static_cast<std::size_t>(a)], p_[static_cast<std::size_t>(b)], x) <= 0.0) {
            if (n < 0) throw GeometryError("point outside the triangulation hull");
            in.insert(n);
            cavity.push_back(n);
            changed = true;
            break;
          }
        }
      }
    }

    struct Rim {
      int a, b, outside;
    };
    std::vector<Rim> rim;
    for (int t : cavity) {
      for (int k = 0; k < 3; ++k) {
        const int n = nbr_[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
        if (n >= 0 && in.count(n)) continue;
        const auto& tv = tri_[static_cast<std::size_t>(t)];
        rim.push_back({tv[static_cast<std::size_t>((k + 1) % 3)], tv[static_cast<std::size_t>((k + 2) % 3)], n});
      }
      alive_[static_cast<std::size_t>(t)] = 0;
    }
    std::unordered_map<int, int> by_start, by_end;
    std::vector<int> created;
    for (const auto& r : rim) {
      const int id = static_cast<int>(tri_.size());
      tri_.push_back({r.a, r.b, v});
      nbr_.push_back({-1, -1, r.outside});
      alive_.push_back(1);
      created.push_back(id);
      by_start[r.a] = id;
      by_end[r.b] = id;
      if (r.outside >= 0) {
        auto& on = nbr_[static_cast<std::size_t>(r.outside)];
        const auto& ov = tri_[static_cast<std::size_t>(r.outside)];
        for (int k = 0; k < 3; ++k) {
          const int oa = ov[static_cast<std::size_t>((k + 1) % 3)], ob = ov[static_cast<std::size_t>((k + 2) % 3)];
          if (oa == r.b && ob == r.a) on[static_cast<std::size_t>(k)] = id;
        }
      }
    }
    for (int id : created) {
      const auto tv = tri_[static_cast<std::size_t>(id)];
      // opposite a: edge (b, v), shared with the triangle starting at b
      nbr_[static_cast<std::size_t>(id)][0] = by_start.at(tv[1]);
      // opposite b: edge (v, a), shared with the triangle ending at a
      nbr_[static_cast<std::size_t>(id)][1] = by_end.at(tv[0]);
    }
    last_ = created.front();
  }

  std::vector<std::array<int, 3>> triangles() const {
    std::vector<std::array<int, 3>> out;
    for (std::size_t t = 0; t < tri_.size(); ++t) {
      if (!alive_[t]) continue;
      const auto& tv = tri_[t];
      if (tv[0] >= super_ || tv[1] >= super_ || tv[2] >= super_) continue;
      out.push_back(tv);
    }
    return out;
  }

 private:
  bool circum_contains(int t, const Point2& x) const {
    const auto& tv = tri_[static_cast<std::size_t>(t)];
    return incircle(p_[static_cast<std::size_t>(tv[0])], p_[static_cast<std::size_t>(tv[1])],
                    p_[static_cast<std::size_t>(tv[2])], x) > 0.0;
  }

  int locate(const Point2& x) const {
    int t = last_;
    if (t < 0 || !alive_[static_cast<std::size_t>(t)]) {
      for (t = static_cast<int>(tri_.size()) - 1; t >= 0 && !alive_[static_cast<std::size_t>(t)]; --t) {
      }
    }
    const std::size_t limit = 4 * tri_.size() + 16;
    for (std::size_t step = 0; step < limit; ++step) {
      const auto& tv = tri_[static_cast<std::size_t>(t)];
      int move = -1;
      for (int j = 0; j < 3; ++j) {
        const int k = static_cast<int>((step + static_cast<std::size_t>(j)) % 3);
        const int a = tv[static_cast<std::size_t>((k + 1) % 3)], b = tv[static_cast<std::size_t>((k + 2) % 3)];
        if (orient(p_[static_cast<std::size_t>(a)], p_[static_cast<std::size_t>(b)], x) < 0.0) {
          move = nbr_[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
          break;
        }
      }
      if (move < 0) return t;
      t = move;
    }
    // fall back to a scan
    for (std::size_t s = 0; s < tri_.size(); ++s) {
      if (!alive_[s]) continue;
      const auto& tv = tri_[s];
      if (orient(p_[static_cast<std::size_t>(tv[0])], p_[static_cast<std::size_t>(tv[1])], x) >= 0.0 &&
          orient(p_[static_cast<std::size_t>(tv[1])], p_[static_cast<std::size_t>(tv[2])], x) >= 0.0 &&
          orient(p_[static_cast<std::size_t>(tv[2])], p_[static_cast<std::size_t>(tv[0])], x) >= 0.0)
        return static_cast<int>(s);
    }
    throw GeometryError("point location failed");
  }

  std::vector<Point2> p_;
  std::vector<std::array<int, 3>> tri_;
  std::vector<std::array<int, 3>> nbr_;  // nbr_[t][k] is across the edge opposite vertex k
  std::vector<char> alive_;
  int super_ = 0;
  int last_ = 0;
};

struct ChainVertex {
  Point2 point;
  int arc;
  double param;
};

bool point_in_polygon(const std::vector<ChainVertex>& poly, const Point2& x) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = poly[i].point;
    const Point2& b = poly[j].point;
    if ((a[1] > x[1]) != (b[1] > x[1]) && x[0] < (b[0] - a[0]) * (x[1] - a[1]) / (b[1] - a[1]) + a[0])
      inside = !inside;
  }
  return inside;
}

// Orders points along rows of a coarse grid, alternating direction, so that
// successive insertions are close and point location stays short.
std::vector<int> insertion_order(const std::vector<Point2>& pts, double cell) {
  std::vector<int> idx(pts.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  double ymin = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) ymin = std::min(ymin, p[1]);
  auto row = [&](int i) { return static_cast<long>(std::floor((pts[static_cast<std::size_t>(i)][1] - ymin) / cell)); };
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    const long ra = row(a), rb = row(b);
    if (ra != rb) return ra < rb;
    const double xa = pts[static_cast<std::size_t>(a)][0], xb = pts[static_cast<std::size_t>(b)][0];
    return (ra % 2 == 0) ? xa < xb : xa > xb;
  });
  return idx;
}

}  // namespace

Mesh generate_mesh(const Boundary& boundary, double target_h) {
  if (!(target_h > 0.0)) throw GeometryError("mesh size h must be positive");
  const double spacing = 0.6 * target_h;

  // boundary chain on the exact arcs
  std::vector<ChainVertex> chain;
  for (int idx : boundary.order()) {
    const auto& a = boundary.arcs()[static_cast<std::size_t>(idx)];
    const int m = std::max(a.kind() == Arc::Kind::Circle ? 3 : 1, static_cast<int>(std::ceil(a.length() / spacing - 1e-12)));
    for (int k = 0; k < m; ++k) {
      const double s = static_cast<double>(k) / m;
      chain.push_back({a.at(s), idx, s});
    }
  }
  if (chain.size() < 3) throw GeometryError("boundary too coarse to mesh");

  // interior hexagonal lattice kept away from the boundary
  std::vector<Point2> interior;
  {
    double xmin = std::numeric_limits<double>::infinity(), ymin = xmin, xmax = -xmin, ymax = -xmin;
    for (const auto& c : chain) {
      xmin = std::min(xmin, c.point[0]);
      xmax = std::max(xmax, c.point[0]);
      ymin = std::min(ymin, c.point[1]);
      ymax = std::max(ymax, c.point[1]);
    }
    const double dy = spacing * std::sqrt(3.0) / 2.0;
    int row = 0;
    for (double y = ymin + 0.5 * dy; y < ymax; y += dy, ++row) {
      const double shift = (row % 2) ? 0.5 * spacing : 0.0;
      for (double x = xmin + shift + 0.25 * spacing; x < xmax; x += spacing) {
        const Point2 q{x, y};
        if (!point_in_polygon(chain, q)) continue;
        if (boundary.distance(q) < 0.5 * spacing) continue;
        interior.push_back(q);
      }
    }
  }

  constexpr int kMaxAttempts = 8;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<Point2> pts;
    pts.reserve(chain.size() + interior.size());
    for (const auto& c : chain) pts.push_back(c.point);
    pts.insert(pts.end(), interior.begin(), interior.end());
    const int nb = static_cast<int>(chain.size());

    Delaunay dt(pts);
    for (int v : insertion_order(pts, spacing)) dt.insert(v);

    std::vector<std::array<int, 3>> tris;
    for (const auto& t : dt.triangles()) {
      const Point2& a = pts[static_cast<std::size_t>(t[0])];
      const Point2& b = pts[static_cast<std::size_t>(t[1])];
      const Point2& c = pts[static_cast<std::size_t>(t[2])];
      const Point2 g{(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0};
      if (point_in_polygon(chain, g)) tris.push_back(t);
    }

    std::unordered_map<std::uint64_t, int> use;
    for (const auto& t : tris)
      for (int k = 0; k < 3; ++k) ++use[edge_key(t[static_cast<std::size_t>(k)], t[static_cast<std::size_t>((k + 1) % 3)])];

    // boundary recovery: every chain edge must be a mesh edge
    std::vector<ChainVertex> new_chain;
    bool chain_ok = true;
    for (int i = 0; i < nb; ++i) {
      const int j = (i + 1) % nb;
      new_chain.push_back(chain[static_cast<std::size_t>(i)]);
      if (use.count(edge_key(i, j)) == 0) {
        chain_ok = false;
        const auto& ci = chain[static_cast<std::size_t>(i)];
        const auto& cj = chain[static_cast<std::size_t>(j)];
        const double s1 = cj.arc == ci.arc && cj.param > ci.param ? cj.param : 1.0;
        const double s = 0.5 * (ci.param + s1);
        new_chain.push_back({boundary.arcs()[static_cast<std::size_t>(ci.arc)].at(s), ci.arc, s});
      }
    }
    if (!chain_ok) {
      chain = std::move(new_chain);
      // drop lattice points that crowd the refined boundary
      std::vector<Point2> kept;
      for (const auto& q : interior)
        if (boundary.distance(q) >= 0.25 * spacing) kept.push_back(q);
      interior = std::move(kept);
      continue;
    }
    bool topology_ok = true;
    for (const auto& [key, count] : use) {
      if (count != 1) continue;
      const int a = static_cast<int>(key & 0xffffffffu), b = static_cast<int>(key >> 32);
      const bool chain_edge = (a < nb && b < nb) && ((b - a) == 1 || (a == 0 && b == nb - 1));
      if (!chain_edge) topology_ok = false;
    }
    if (!topology_ok) throw GeometryError("triangulation leaves holes along the boundary");

    // long edges: add midpoints and retriangulate
    std::vector<Point2> extra;
    std::unordered_set<std::uint64_t> seen;
    for (const auto& t : tris) {
      for (int k = 0; k < 3; ++k) {
        const int a = t[static_cast<std::size_t>(k)], b = t[static_cast<std::size_t>((k + 1) % 3)];
        const Point2& pa = pts[static_cast<std::size_t>(a)];
        const Point2& pb = pts[static_cast<std::size_t>(b)];
        if (std::hypot(pa[0] - pb[0], pa[1] - pb[1]) <= target_h) continue;
        if (!seen.insert(edge_key(a, b)).second) continue;
        extra.push_back({0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])});
      }
    }
    if (!extra.empty()) {
      interior.insert(interior.end(), extra.begin(), extra.end());
      continue;
    }

    Mesh mesh;
    // compact: vertices referenced by triangles only
    std::vector<int> remap(pts.size(), -1);
    for (int i = 0; i < nb; ++i) {
      remap[static_cast<std::size_t>(i)] = i;
      mesh.vertices.push_back(pts[static_cast<std::size_t>(i)]);
      mesh.vertex_arc.push_back(chain[static_cast<std::size_t>(i)].arc);
      mesh.vertex_param.push_back(chain[static_cast<std::size_t>(i)].param);
    }
    for (auto& t : tris) {
      for (auto& v : t) {
        if (remap[static_cast<std::size_t>(v)] < 0) {
          remap[static_cast<std::size_t>(v)] = static_cast<int>(mesh.vertices.size());
          mesh.vertices.push_back(pts[static_cast<std::size_t>(v)]);
          mesh.vertex_arc.push_back(-1);
          mesh.vertex_param.push_back(0.0);
        }
        v = remap[static_cast<std::size_t>(v)];
      }
      const auto& a = mesh.vertices[static_cast<std::size_t>(t[0])];
      const auto& b = mesh.vertices[static_cast<std::size_t>(t[1])];
      const auto& c = mesh.vertices[static_cast<std::size_t>(t[2])];
      if (!(orient(a, b, c) > 0.0)) throw GeometryError("mesh has an inverted triangle");
      mesh.triangles.push_back(t);
    }
    for (int i = 0; i < nb; ++i) mesh.boundary_edges.push_back({i, (i + 1) % nb, chain[static_cast<std::size_t>(i)].arc});
    return mesh;
  }
  throw GeometryError("mesh generation did not converge; boundary may be too thin for h");
}

}  // namespace vtrace
