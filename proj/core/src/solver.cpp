#include "vtrace/solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "vtrace/errors.hpp"
#include "vtrace/halfspace.hpp"
#include "vtrace/luxemburg.hpp"
#include "vtrace/parallel.hpp"
#include "vtrace/special.hpp"

namespace vtrace {

namespace {

constexpr double kMinBulkExponent = 1.05;

double dist(Point2 a, Point2 b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

std::vector<double> evaluate_at(const ExponentField& f, const std::vector<double>& points) {
  std::vector<double> out(points.size() / 2);
  parallel_for(out.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = f(std::span<const double>(points).subspan(2 * i, 2));
  });
  return out;
}

// Nodes on the Neumann part of the boundary.
std::vector<int> free_boundary_vertices(const PlanarDomain& d) {
  std::vector<char> on(d.mesh().vertices.size(), 0);
  for (const auto& e : d.mesh().boundary_edges) on[idx(e.v0)] = on[idx(e.v1)] = 1;
  std::vector<int> out;
  for (std::size_t i = 0; i < on.size(); ++i)
    if (on[i] && !d.dirichlet()[i]) out.push_back(static_cast<int>(i));
  return out;
}

struct InteriorAtoms {
  std::vector<double> values;     // U at the quadrature nodes
  std::vector<double> grads;      // grad U per triangle (2 per triangle)
  AtomBuffer atoms;               // |U| atoms followed by |grad U| atoms
};

InteriorAtoms interior_atoms(std::span<const double> u, const DiscreteTraceProblem& pb) {
  const auto& d = pb.domain();
  const auto& m = d.mesh();
  const auto& q = d.interior_quadrature();
  const std::size_t nq = q.weights.size();
  InteriorAtoms out;
  out.values.resize(nq);
  out.grads.resize(2 * m.triangles.size());
  parallel_for(m.triangles.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t t = b; t < e; ++t) {
      const auto& tri = m.triangles[t];
      const auto g = d.shape_gradients(t);
      double gx = 0.0, gy = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        gx += u[idx(tri[k])] * g[k][0];
        gy += u[idx(tri[k])] * g[k][1];
      }
      out.grads[2 * t] = gx;
      out.grads[2 * t + 1] = gy;
      for (std::size_t i = 3 * t; i < 3 * t + 3; ++i) {
        double v = 0.0;
        for (std::size_t k = 0; k < 3; ++k) v += q.shape[i][k] * u[idx(tri[k])];
        out.values[i] = v;
      }
    }
  });
  auto& a = out.atoms;
  a.weights.resize(2 * nq);
  a.magnitudes.resize(2 * nq);
  a.exponents.resize(2 * nq);
  const auto& p = pb.interior_exponents();
  for (std::size_t i = 0; i < nq; ++i) {
    const auto t = idx(q.triangle[i]);
    a.weights[i] = a.weights[nq + i] = q.weights[i];
    a.exponents[i] = a.exponents[nq + i] = p[i];
    a.magnitudes[i] = std::abs(out.values[i]);
    a.magnitudes[nq + i] = std::hypot(out.grads[2 * t], out.grads[2 * t + 1]);
  }
  return out;
}

AtomBuffer boundary_atoms(std::span<const double> u, const DiscreteTraceProblem& pb, std::vector<double>* values) {
  const auto& m = pb.domain().mesh();
  const auto& q = pb.domain().boundary_quadrature();
  AtomBuffer a;
  a.weights = q.weights;
  a.exponents = pb.boundary_exponents();
  a.magnitudes.resize(q.weights.size());
  if (values) values->resize(q.weights.size());
  for (std::size_t i = 0; i < q.weights.size(); ++i) {
    const auto& e = m.boundary_edges[idx(q.edge[i])];
    const double v = q.shape[i][0] * u[idx(e.v0)] + q.shape[i][1] * u[idx(e.v1)];
    a.magnitudes[i] = std::abs(v);
    if (values) (*values)[i] = v;
  }
  return a;
}

double checked_trace(const NormResult& r) {
  if (!(r.norm > 1e-300) || !std::isfinite(r.norm)) throw ZeroTrace("function has zero boundary norm");
  return r.norm;
}

// d lambda / d a_i = lambda * w_i p_i (a_i/lambda)^{p_i} / (a_i S), S the
// weighted exponent sum; zero where a_i vanishes (p_i > 1).
std::vector<double> norm_sensitivities(const AtomBuffer& a, const NormResult& r) {
  std::vector<double> c(a.weights.size(), 0.0);
  if (!(r.norm > 0.0) || !(r.weighted_exponent_sum > 0.0)) return c;
  const double lam = r.norm, S = r.weighted_exponent_sum;
  parallel_for(c.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const double m = a.magnitudes[i];
      if (!(m > 0.0)) continue;
      const double p = a.exponents[i];
      c[i] = lam * a.weights[i] * p * std::exp(p * std::log(m / lam)) / (m * S);
    }
  });
  return c;
}

void zero_dirichlet(std::vector<double>& v, const PlanarDomain& d) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (d.dirichlet()[i]) v[i] = 0.0;
}

// H1 Riesz map K + M restricted to the free nodes.
class RieszMap {
 public:
  explicit RieszMap(const PlanarDomain& d) : dir_(d.dirichlet()) {
    const auto& m = d.mesh();
    const std::size_t n = m.vertices.size();
    map_.assign(n, -1);
    int nf = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (!dir_[i]) map_[i] = nf++;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * m.triangles.size());
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
      const auto& tri = m.triangles[t];
      const auto g = d.shape_gradients(t);
      const double area = m.triangle_area(t);
      for (std::size_t a = 0; a < 3; ++a) {
        const int ia = map_[idx(tri[a])];
        if (ia < 0) continue;
        for (std::size_t b = 0; b < 3; ++b) {
          const int ib = map_[idx(tri[b])];
          if (ib < 0) continue;
          const double k = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
          const double mass = area / 12.0 * (a == b ? 2.0 : 1.0);
          trip.emplace_back(ia, ib, k + mass);
        }
      }
    }
    Eigen::SparseMatrix<double> A(nf, nf);
    A.setFromTriplets(trip.begin(), trip.end());
    solver_.compute(A);
    if (solver_.info() != Eigen::Success) throw Error("stiffness factorization failed");
    nf_ = nf;
  }

  std::vector<double> apply(const std::vector<double>& g) const {
    Eigen::VectorXd rhs(nf_);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (map_[i] >= 0) rhs[map_[i]] = g[i];
    const Eigen::VectorXd x = solver_.solve(rhs);
    std::vector<double> out(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (map_[i] >= 0) out[i] = x[map_[i]];
    return out;
  }

 private:
  std::vector<char> dir_;
  std::vector<int> map_;
  int nf_ = 0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  CompensatedSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
  return s.value();
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Boundary mass \int |u|^r over the part of each boundary edge inside
// B_radius(c), clipped exactly on the (straight) mesh edge.
class BoundaryMass {
 public:
  BoundaryMass(std::span<const double> u, const DiscreteTraceProblem& pb) : u_(u), pb_(pb) {}

  double edge(std::size_t k, double s0 = 0.0, double s1 = 1.0) const {
    const auto& m = pb_.domain().mesh();
    const auto& e = m.boundary_edges[k];
    const Point2 a = m.vertices[idx(e.v0)], b = m.vertices[idx(e.v1)];
    const double len = dist(a, b) * (s1 - s0);
    if (!(len > 0.0)) return 0.0;
    const auto& g = gauss_legendre(4);
    double sum = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      const double s = s0 + 0.5 * (s1 - s0) * (g.nodes[i] + 1.0);
      const double x[2] = {a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])};
      const double v = std::abs((1.0 - s) * u_[idx(e.v0)] + s * u_[idx(e.v1)]);
      if (v > 0.0) sum += 0.5 * g.weights[i] * std::exp(pb_.r()(x) * std::log(v));
    }
    return sum * len;
  }

  double within(Point2 c, double radius) const {
    const auto& m = pb_.domain().mesh();
    double total = 0.0;
    for (std::size_t k = 0; k < m.boundary_edges.size(); ++k) {
      const auto& e = m.boundary_edges[k];
      const Point2 a = m.vertices[idx(e.v0)], b = m.vertices[idx(e.v1)];
      // |a + s(b-a) - c|^2 <= radius^2
      const double dx = b[0] - a[0], dy = b[1] - a[1];
      const double fx = a[0] - c[0], fy = a[1] - c[1];
      const double A = dx * dx + dy * dy, B = 2.0 * (fx * dx + fy * dy), C = fx * fx + fy * fy - radius * radius;
      const double disc = B * B - 4.0 * A * C;
      if (disc <= 0.0) continue;
      const double sq = std::sqrt(disc);
      const double s0 = std::max(0.0, (-B - sq) / (2.0 * A)), s1 = std::min(1.0, (-B + sq) / (2.0 * A));
      if (s1 > s0) total += edge(k, s0, s1);
    }
    return total;
  }

  double total() const {
    double t = 0.0;
    for (std::size_t k = 0; k < pb_.domain().mesh().boundary_edges.size(); ++k) t += edge(k);
    return t;
  }

 private:
  std::span<const double> u_;
  const DiscreteTraceProblem& pb_;
};

}  // namespace

DiscreteTraceProblem::DiscreteTraceProblem(PlanarDomain domain, ExponentField p, ExponentField r, double critical_tol)
    : domain_(std::make_shared<const PlanarDomain>(std::move(domain))),
      p_(std::move(p)),
      r_(std::move(r)),
      critical_tol_(critical_tol) {
  if (p_.dimension() != 2 || r_.dimension() != 2) throw DimensionError("planar problems need exponents in two variables");
  const auto& m = domain_->mesh();
  std::vector<double> nodes;
  nodes.reserve(2 * m.vertices.size());
  for (const auto& v : m.vertices) {
    nodes.push_back(v[0]);
    nodes.push_back(v[1]);
  }
  p_bounds_ = sample_bounds(p_, nodes);
  if (p_bounds_.lower < kMinBulkExponent)
    throw ExponentRangeError("p- = " + std::to_string(p_bounds_.lower) + " is below the supported minimum 1.05");
  validate_bulk_exponent(p_bounds_, 2);
  std::vector<double> bnodes;
  for (const auto& e : m.boundary_edges)
    for (int v : {e.v0, e.v1}) {
      bnodes.push_back(m.vertices[idx(v)][0]);
      bnodes.push_back(m.vertices[idx(v)][1]);
    }
  if (bnodes.empty()) throw DomainError("mesh has no boundary edges");
  r_bounds_ = sample_bounds(r_, bnodes);
  validate_boundary_exponent(r_bounds_);
  const CriticalSet cs = critical_set(p_, r_, bnodes, critical_tol_);
  if (cs.margin < -critical_tol_)
    throw SupercriticalError("r exceeds the critical trace exponent by " + std::to_string(-cs.margin));
  p_int_ = evaluate_at(p_, domain_->interior_quadrature().points);
  r_bd_ = evaluate_at(r_, domain_->boundary_quadrature().points);
}

CriticalSet DiscreteTraceProblem::critical_vertices(double tol) const {
  const auto verts = free_boundary_vertices(*domain_);
  std::vector<double> pts;
  for (int v : verts) {
    pts.push_back(domain_->mesh().vertices[idx(v)][0]);
    pts.push_back(domain_->mesh().vertices[idx(v)][1]);
  }
  CriticalSet cs = critical_set(p_, r_, pts, tol);
  for (auto& i : cs.indices) i = static_cast<std::size_t>(verts[i]);
  return cs;
}

DiscreteTraceProblem DiscreteTraceProblem::with_domain(PlanarDomain domain) const {
  return DiscreteTraceProblem(std::move(domain), p_, r_, critical_tol_);
}

double sobolev_norm(std::span<const double> u, const DiscreteTraceProblem& problem) {
  if (u.size() != problem.size()) throw DimensionError("nodal vector does not match the mesh");
  return atom_norm(interior_atoms(u, problem).atoms.view()).norm;
}

double trace_norm(std::span<const double> u, const DiscreteTraceProblem& problem) {
  if (u.size() != problem.size()) throw DimensionError("nodal vector does not match the mesh");
  return checked_trace(atom_norm(boundary_atoms(u, problem, nullptr).view()));
}

double rayleigh_quotient(std::span<const double> u, const DiscreteTraceProblem& problem) {
  const double t = trace_norm(u, problem);
  return sobolev_norm(u, problem) / t;
}

QuotientGradient quotient_gradient(std::span<const double> u, const DiscreteTraceProblem& problem) {
  if (u.size() != problem.size()) throw DimensionError("nodal vector does not match the mesh");
  const auto& d = problem.domain();
  const auto& m = d.mesh();
  const std::size_t n = u.size();

  std::vector<double> bvals;
  const AtomBuffer ba = boundary_atoms(u, problem, &bvals);
  const NormResult bn = atom_norm(ba.view());
  const double tn = checked_trace(bn);
  const InteriorAtoms ia = interior_atoms(u, problem);
  const NormResult sn = atom_norm(ia.atoms.view());

  QuotientGradient out;
  out.sobolev = sn.norm;
  out.trace = tn;
  out.quotient = sn.norm / tn;
  out.sobolev_gradient.assign(n, 0.0);
  out.trace_gradient.assign(n, 0.0);

  // scatter in fixed order so the result does not depend on threading
  const auto cs = norm_sensitivities(ia.atoms, sn);
  const auto& q = d.interior_quadrature();
  const std::size_t nq = q.weights.size();
  for (std::size_t i = 0; i < nq; ++i) {
    const auto t = idx(q.triangle[i]);
    const auto& tri = m.triangles[t];
    const double sv = ia.values[i] > 0.0 ? 1.0 : (ia.values[i] < 0.0 ? -1.0 : 0.0);
    const double cv = cs[i] * sv;
    const double cg = cs[nq + i];
    const double gx = ia.grads[2 * t], gy = ia.grads[2 * t + 1];
    const double gn = ia.atoms.magnitudes[nq + i];
    std::array<Point2, 3> sg{};
    if (cg != 0.0) sg = d.shape_gradients(t);
    for (std::size_t k = 0; k < 3; ++k) {
      double v = cv * q.shape[i][k];
      if (cg != 0.0) v += cg * (gx * sg[k][0] + gy * sg[k][1]) / gn;
      out.sobolev_gradient[idx(tri[k])] += v;
    }
  }
  const auto cb = norm_sensitivities(ba, bn);
  const auto& bq = d.boundary_quadrature();
  for (std::size_t i = 0; i < cb.size(); ++i) {
    const auto& e = m.boundary_edges[idx(bq.edge[i])];
    const double sv = bvals[i] > 0.0 ? 1.0 : (bvals[i] < 0.0 ? -1.0 : 0.0);
    out.trace_gradient[idx(e.v0)] += cb[i] * sv * bq.shape[i][0];
    out.trace_gradient[idx(e.v1)] += cb[i] * sv * bq.shape[i][1];
  }
  out.gradient.resize(n);
  for (std::size_t j = 0; j < n; ++j)
    out.gradient[j] = d.dirichlet()[j] ? 0.0 : (out.sobolev_gradient[j] - out.quotient * out.trace_gradient[j]) / tn;
  return out;
}

std::vector<double> initial_guess(const DiscreteTraceProblem& problem, const InitSpec& init) {
  const auto& d = problem.domain();
  const auto& m = d.mesh();
  std::vector<double> u(m.vertices.size(), 0.0);
  switch (init.kind) {
    case InitKind::Constant:
      std::fill(u.begin(), u.end(), 1.0);
      break;
    case InitKind::Random: {
      std::mt19937_64 gen(splitmix(init.seed));
      // explicit 53-bit conversion keeps the stream portable across
      // standard library implementations
      for (auto& x : u) x = 0.5 + static_cast<double>(gen() >> 11) * 0x1.0p-53;
      break;
    }
    case InitKind::Bubble: {
      if (!(init.lambda > 0.0)) throw DomainError("bubble scale must be positive");
      const BoundaryPoint bp = d.boundary().closest(init.x0);
      const Point2 tau = d.boundary().arcs()[idx(bp.arc)].tangent(bp.param);
      const Point2 nu{-tau[1], tau[0]};
      const double x0[2] = {bp.point[0], bp.point[1]};
      const ExtremalProfile V(2, problem.p()(x0), init.lambda);
      for (std::size_t i = 0; i < u.size(); ++i) {
        const double dx = m.vertices[i][0] - bp.point[0], dy = m.vertices[i][1] - bp.point[1];
        const double y = dx * tau[0] + dy * tau[1];
        const double t = std::max(0.0, dx * nu[0] + dy * nu[1]);
        u[i] = V(std::span<const double>(&y, 1), t);
      }
      break;
    }
  }
  zero_dirichlet(u, d);
  return u;
}

SolverReport minimize_from(const DiscreteTraceProblem& problem, std::vector<double> start,
                           const SolverOptions& options) {
  if (start.size() != problem.size()) throw DimensionError("start vector does not match the mesh");
  const auto& d = problem.domain();
  zero_dirichlet(start, d);
  const double t0 = trace_norm(start, problem);
  for (auto& x : start) x /= t0;

  const RieszMap riesz(d);
  SolverReport rep;
  std::vector<double> u = std::move(start);
  QuotientGradient cur = quotient_gradient(u, problem);
  rep.quotient_history.push_back(cur.quotient);
  double prev_step = -1.0;
  int small = 0;
  for (int it = 0; it < options.max_iter; ++it) {
    std::vector<double> dir = riesz.apply(cur.gradient);
    for (auto& x : dir) x = -x;
    const double slope = dot(cur.gradient, dir);
    const double dn = sup_norm(dir);
    if (!(slope < 0.0) || dn == 0.0) {
      rep.converged = true;
      break;
    }
    // never move more than half the sup norm of u in one step
    const double cap = 0.5 * sup_norm(u) / dn;
    double step = prev_step > 0.0 ? std::min(2.0 * prev_step, cap) : std::min(options.initial_step, cap);
    bool accepted = false;
    std::vector<double> trial(u.size());
    QuotientGradient next;
    for (int bt = 0; bt < options.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] + step * dir[i];
      try {
        next = quotient_gradient(trial, problem);
        if (next.quotient <= cur.quotient + options.armijo * step * slope) {
          accepted = true;
          break;
        }
      } catch (const ZeroTrace&) {
      }
      step *= 0.5;
    }
    if (!accepted) {
      rep.line_search_failure = true;
      break;
    }
    prev_step = step;
    // renormalize to unit boundary norm; the quotient is scale invariant
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = trial[i] / next.trace;
    const double old = cur.quotient;
    cur = quotient_gradient(u, problem);
    // keep the history exactly monotone despite the renormalization roundoff
    cur.quotient = std::min(cur.quotient, old);
    rep.quotient_history.push_back(cur.quotient);
    rep.iterations = it + 1;
    if (old - cur.quotient <= options.tol * old) {
      if (++small >= 2) {
        rep.converged = true;
        break;
      }
    } else {
      small = 0;
    }
  }
  if (!rep.converged && !rep.line_search_failure) rep.non_convergence = true;
  rep.T_estimate = cur.quotient;
  rep.minimizer = std::move(u);
  return rep;
}

SolverReport minimize(const DiscreteTraceProblem& problem, const InitSpec& init, const SolverOptions& options) {
  SolverReport r = minimize_from(problem, initial_guess(problem, init), options);
  switch (init.kind) {
    case InitKind::Constant:
      r.init_label = "constant";
      break;
    case InitKind::Random:
      r.init_label = "random:" + std::to_string(init.seed);
      break;
    case InitKind::Bubble:
      r.init_label = "bubble";
      break;
  }
  return r;
}

MultiStartReport minimize_multistart(const DiscreteTraceProblem& problem, std::uint64_t seed,
                                     const SolverOptions& options, int max_bubbles) {
  std::vector<InitSpec> inits;
  inits.push_back({InitKind::Constant, 0, {}, 0.0});
  for (std::uint64_t k = 0; k < 3; ++k) inits.push_back({InitKind::Random, seed + k, {}, 0.0});
  const auto crit = problem.critical_vertices(problem.critical_tol());
  const auto& verts = problem.domain().mesh().vertices;
  const int nc = static_cast<int>(crit.indices.size());
  const int nb = std::min(max_bubbles, nc);
  const double lambda = 2.0 * problem.domain().target_h();
  for (int k = 0; k < nb; ++k) {
    const auto v = crit.indices[static_cast<std::size_t>(static_cast<long>(k) * nc / nb)];
    inits.push_back({InitKind::Bubble, 0, verts[v], lambda});
  }
  MultiStartReport out;
  for (const auto& init : inits) {
    out.runs.push_back(minimize(problem, init, options));
    if (init.kind == InitKind::Bubble) {
      const auto& x = init.x0;
      char buf[80];
      std::snprintf(buf, sizeof buf, "bubble:%.6g,%.6g", x[0], x[1]);
      out.runs.back().init_label = buf;
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.runs.size(); ++i)
    if (out.runs[i].T_estimate < out.runs[best].T_estimate) best = i;
  out.best = out.runs[best];
  return out;
}

ConcentrationVerdict concentration_diagnostic(std::span<const double> u, const DiscreteTraceProblem& problem,
                                              std::span<const double> radii, const ConcentrationOptions& options) {
  if (u.size() != problem.size()) throw DimensionError("nodal vector does not match the mesh");
  const auto& d = problem.domain();
  const auto& m = d.mesh();
  const double tn = trace_norm(u, problem);
  std::vector<double> un(u.begin(), u.end());
  for (auto& x : un) x /= tn;

  const BoundaryMass mass(un, problem);
  const double total = mass.total();
  ConcentrationVerdict out;
  if (!(total > 0.0)) throw ZeroTrace("function has zero boundary mass");

  // tent-kernel score at every boundary vertex
  const double kr = 2.0 * m.max_boundary_edge_length();
  std::vector<int> bverts;
  std::vector<std::vector<int>> nbr(m.vertices.size());
  {
    std::vector<char> on(m.vertices.size(), 0);
    for (const auto& e : m.boundary_edges) {
      on[idx(e.v0)] = on[idx(e.v1)] = 1;
      nbr[idx(e.v0)].push_back(e.v1);
      nbr[idx(e.v1)].push_back(e.v0);
    }
    for (std::size_t i = 0; i < on.size(); ++i)
      if (on[i]) bverts.push_back(static_cast<int>(i));
  }
  std::vector<double> score(m.vertices.size(), 0.0);
  const auto& gl = gauss_legendre(4);
  for (int v : bverts) {
    const Point2 c = m.vertices[idx(v)];
    double sc = 0.0;
    for (std::size_t k = 0; k < m.boundary_edges.size(); ++k) {
      const auto& e = m.boundary_edges[k];
      const Point2 a = m.vertices[idx(e.v0)], b = m.vertices[idx(e.v1)];
      if (std::min(dist(a, c), dist(b, c)) > kr + dist(a, b)) continue;
      const double len = dist(a, b);
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double s = 0.5 * (gl.nodes[i] + 1.0);
        const Point2 xp{a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])};
        const double ker = std::max(0.0, 1.0 - dist(xp, c) / kr);
        if (ker == 0.0) continue;
        const double v2 = std::abs((1.0 - s) * un[idx(e.v0)] + s * un[idx(e.v1)]);
        if (!(v2 > 0.0)) continue;
        const double x[2] = {xp[0], xp[1]};
        sc += ker * 0.5 * gl.weights[i] * len * std::exp(problem.r()(x) * std::log(v2));
      }
    }
    score[idx(v)] = sc / total;
  }
  int best = -1;
  for (int v : bverts)
    if (best < 0 || score[idx(v)] > score[idx(best)]) best = v;
  std::vector<AtomCandidate> cands;
  for (int v : bverts) {
    bool is_max = score[idx(v)] > 0.0;
    for (int nb : nbr[idx(v)]) is_max = is_max && score[idx(v)] >= score[idx(nb)];
    if (is_max) cands.push_back({v, m.vertices[idx(v)], score[idx(v)]});
  }
  std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  if (static_cast<int>(cands.size()) > options.max_ranked) cands.resize(static_cast<std::size_t>(options.max_ranked));
  out.ranked_atoms = cands;
  out.atom_vertex = best;
  const Point2 x0 = m.vertices[idx(best)];
  out.atom_location = x0;

  // interior gradient mass \int |grad u|^p at the quadrature nodes
  const auto ia = interior_atoms(un, problem);
  const auto& q = d.interior_quadrature();
  const std::size_t nq = q.weights.size();
  std::vector<double> gterm(nq);
  for (std::size_t i = 0; i < nq; ++i) {
    const double g = ia.atoms.magnitudes[nq + i];
    gterm[i] = g > 0.0 ? q.weights[i] * std::exp(problem.interior_exponents()[i] * std::log(g)) : 0.0;
  }
  const double gtotal = compensated_sum(gterm);
  auto grad_mass = [&](double radius) {
    CompensatedSum s;
    for (std::size_t i = 0; i < nq; ++i) {
      const Point2 xq{q.points[2 * i], q.points[2 * i + 1]};
      if (dist(xq, x0) <= radius) s.add(gterm[i]);
    }
    return s.value();
  };

  out.radii.assign(radii.begin(), radii.end());
  for (double r : radii) {
    out.boundary_mass_profile.push_back(mass.within(x0, r) / total);
    out.interior_gradient_mass.push_back(gtotal > 0.0 ? grad_mass(r) / gtotal : 0.0);
  }
  out.decision_radius = options.radius_factor * d.target_h();
  out.decision_fraction = mass.within(x0, out.decision_radius) / total;
  out.concentrated = out.decision_fraction > options.threshold;

  const double xp[2] = {x0[0], x0[1]};
  const double p0 = problem.p()(xp), r0 = problem.r()(xp);
  if (p0 > 1.0 && p0 < 2.0) {
    const double Kinv = sharp_constant_quadrature(2, p0).K_inv;
    const double mu = grad_mass(out.decision_radius);
    const double nu = mass.within(x0, out.decision_radius);
    out.refinement_slack = std::pow(mu, 1.0 / p0) - Kinv * std::pow(nu, 1.0 / r0);
  }
  return out;
}

MonotonicityResult monotonicity_check(const DiscreteTraceProblem& problem, Point2 x0, double radius,
                                      const SolverOptions& options) {
  const auto& d = problem.domain();
  PlanarDomain local = d.restrict_to_ball(x0, radius);
  const auto& pv = local.parent_vertex();
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const auto p = idx(pv[i]);
    if (pv[i] < 0 || local.mesh().vertices[i] != d.mesh().vertices[p])
      throw MeshNotNested("restricted mesh is not a submesh of the domain mesh");
    if (d.dirichlet()[p] && local.mesh().vertex_arc[i] >= 0 &&
        std::find(d.gamma_arcs().begin(), d.gamma_arcs().end(), local.mesh().vertex_arc[i]) != d.gamma_arcs().end())
      throw DomainError("the ball meets the Dirichlet part of the boundary");
  }
  const DiscreteTraceProblem lp = problem.with_domain(std::move(local));
  MonotonicityResult out;
  out.local = minimize(lp, InitSpec{InitKind::Constant, 0, {}, 0.0}, options);
  out.T_local = out.local.T_estimate;
  const auto ext = lp.domain().extend_by_zero(out.local.minimizer, problem.size());
  out.full = minimize_from(problem, ext, options);
  out.full.init_label = "extended local minimizer";
  out.T_full = out.full.T_estimate;
  return out;
}

LocalConstantEstimate local_trace_constant(const DiscreteTraceProblem& problem, Point2 x0, double R,
                                           const SolverOptions& options) {
  if (!(R > 0.0)) throw DomainError("radius must be positive");
  LocalConstantEstimate out;
  for (double f : {0.5, 0.25, 0.125}) {
    const double rad = f * R;
    const DiscreteTraceProblem lp = problem.with_domain(problem.domain().restrict_to_ball(x0, rad));
    const SolverReport rep = minimize(lp, InitSpec{InitKind::Constant, 0, {}, 0.0}, options);
    out.radii.push_back(rad);
    out.constants.push_back(rep.T_estimate);
  }
  out.value = *std::max_element(out.constants.begin(), out.constants.end());
  out.error_bar = std::abs(out.constants.back() - out.constants[out.constants.size() - 2]);
  return out;
}

}  // namespace vtrace
