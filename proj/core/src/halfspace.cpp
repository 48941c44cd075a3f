#include "vtrace/halfspace.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vtrace/errors.hpp"
#include "vtrace/luxemburg.hpp"
#include "vtrace/parallel.hpp"
#include "vtrace/special.hpp"

namespace vtrace {

namespace {

void check_range(int N, double p) {
  if (N < 2) throw DimensionError("half-space computations need N >= 2");
  if (!(p > 1.0 && p < N)) throw DomainError("need 1 < p < N, got p = " + std::to_string(p));
}

double trace_exponent(int N, double p) { return (N - 1) * p / (N - p); }

// Geometrically graded panel edges 0, 1/2, 1, 2, 4, ... , R.
std::vector<double> graded_edges(double R) {
  std::vector<double> e{0.0};
  for (double x = 0.5; x < R; x *= 2.0) e.push_back(x);
  e.push_back(R);
  return e;
}

struct Nodes {
  std::vector<double> x;
  std::vector<double> w;
};

Nodes panel_nodes(const std::vector<double>& edges, int n) {
  const auto& g = gauss_legendre(n);
  Nodes out;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double a = edges[k], b = edges[k + 1];
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      out.x.push_back(a + 0.5 * (b - a) * (g.nodes[i] + 1.0));
      out.w.push_back(0.5 * (b - a) * g.weights[i]);
    }
  }
  return out;
}

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
  return c;
}

double term_value(const PowerTerm& term, double t, double rho, double r) {
  double v = term.coef * std::pow(r, -term.r_power);
  if (term.t_power) v *= std::pow(t, term.t_power);
  if (term.rho_power != 0.0) v *= std::pow(rho, term.rho_power);
  return v;
}

void check_bulk_integrable(int N, const PowerTerm& term) {
  const double m = term.rho_power + N - 2;
  if (term.t_power < 0 || term.rho_power < 0.0) throw DomainError("power weights must be nonnegative");
  if (!(term.t_power + m + 2.0 - term.r_power < 0.0))
    throw DivergentIntegral("t^" + std::to_string(term.t_power) + " |y|^" + std::to_string(term.rho_power) + " r^-" +
                            std::to_string(term.r_power) + " is not integrable on the half space in N = " +
                            std::to_string(N));
}

// \int over the complement of the box [0,R]^2 in (t, rho), in polar
// coordinates (sigma, theta) around (s, rho) = (0, 0) with s = 1 + t.
double bulk_tail(int N, const PowerTerm& term, const QuadratureOptions& opt) {
  const double R = opt.truncation_R;
  const double m = term.rho_power + N - 2;
  const double th1 = std::atan(R / (1.0 + R));
  const double th2 = std::atan(R);
  const double sectors[4] = {0.0, th1, th2, 0.5 * std::numbers::pi};
  const auto& g = gauss_legendre(opt.angular_nodes);
  const int a = term.t_power;
  std::vector<double> parts;
  for (int sec = 0; sec < 3; ++sec) {
    const double lo = sectors[sec], hi = sectors[sec + 1];
    const double width = (hi - lo) / opt.angular_panels;
    for (int pnl = 0; pnl < opt.angular_panels; ++pnl) {
      const double a0 = lo + pnl * width;
      for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const double th = a0 + 0.5 * width * (g.nodes[i] + 1.0);
        const double wt = 0.5 * width * g.weights[i];
        const double c = std::cos(th), s = std::sin(th);
        double L;
        if (sec == 0) L = (1.0 + R) / c;
        else if (sec == 1) L = R / s;
        else L = 1.0 / c;
        double sum = 0.0;
        // t^a = (sigma cos - 1)^a expanded binomially
        for (int j = 0; j <= a; ++j) {
          const double e1 = j + m + 2.0 - term.r_power;  // exponent after integrating sigma
          const double coef = binomial(a, j) * ((a - j) % 2 ? -1.0 : 1.0);
          sum += coef * std::pow(c, j) * std::pow(L, e1) / (-e1);
        }
        parts.push_back(wt * std::pow(s, m) * sum);
      }
    }
  }
  return term.coef * sphere_area(N - 2) * compensated_sum(parts);
}

}  // namespace

double IntegralEstimate::tail_bound() const { return std::abs(value - truncated); }

double extremal_alpha(int N, double p) {
  check_range(N, p);
  return (N - p) / (p - 1.0);
}

ExtremalProfile::ExtremalProfile(int N_, double p_, double lambda_, std::vector<double> y0_)
    : N(N_), p(p_), lambda(lambda_), y0(std::move(y0_)), alpha_(extremal_alpha(N_, p_)) {
  if (!(lambda > 0.0)) throw DomainError("dilation scale must be positive");
  if (y0.empty()) y0.assign(static_cast<std::size_t>(N - 1), 0.0);
  if (static_cast<int>(y0.size()) != N - 1) throw DimensionError("translation must have N - 1 components");
}

double ExtremalProfile::rescaled_r(std::span<const double> y, double t) const {
  if (static_cast<int>(y.size()) != N - 1) throw DimensionError("tangential point must have N - 1 components");
  if (t < 0.0) throw DomainError("extremal is defined for t >= 0");
  double s2 = (1.0 + t / lambda) * (1.0 + t / lambda);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = (y[i] - y0[i]) / lambda;
    s2 += d * d;
  }
  return std::sqrt(s2);
}

double ExtremalProfile::operator()(std::span<const double> y, double t) const {
  return std::pow(lambda, -alpha_) * std::pow(rescaled_r(y, t), -alpha_);
}

double ExtremalProfile::gradient_norm(std::span<const double> y, double t) const {
  return alpha_ * std::pow(lambda, -alpha_ - 1.0) * std::pow(rescaled_r(y, t), -alpha_ - 1.0);
}

double evaluate_extremal(const ExtremalProfile& profile, std::span<const double> y, double t) { return profile(y, t); }

double sharp_constant_formula(int N, double p) {
  check_range(N, p);
  const double q = p - 1.0;
  const double log_ratio = std::lgamma(p * (N - 1) / (2.0 * q)) - std::lgamma((N - 1) / (2.0 * q));
  return std::pow(std::numbers::pi, (1.0 - p) / 2.0) * std::pow(q / (N - p), q) *
         std::exp(log_ratio * q / (N - 1));
}

IntegralEstimate integrate_halfspace(int N, std::span<const PowerTerm> terms, const QuadratureOptions& opt) {
  if (N < 2) throw DimensionError("half-space computations need N >= 2");
  for (const auto& term : terms) check_bulk_integrable(N, term);
  const auto nodes = panel_nodes(graded_edges(opt.truncation_R), opt.nodes_per_panel);
  const std::size_t n = nodes.x.size();
  const double area = sphere_area(N - 2);
  std::vector<double> rows(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double t = nodes.x[i];
      CompensatedSum row;
      for (std::size_t j = 0; j < n; ++j) {
        const double rho = nodes.x[j];
        const double r = std::hypot(1.0 + t, rho);
        double v = 0.0;
        for (const auto& term : terms) v += term_value(term, t, rho, r);
        row.add(nodes.w[j] * std::pow(rho, N - 2) * v);
      }
      rows[i] = nodes.w[i] * row.value();
    }
  });
  IntegralEstimate est;
  est.truncated = area * compensated_sum(rows);
  double tail = 0.0;
  for (const auto& term : terms) tail += bulk_tail(N, term, opt);
  est.value = est.truncated + tail;
  return est;
}

IntegralEstimate integrate_boundary(int N, double rho_power, double kappa, const QuadratureOptions& opt) {
  if (N < 2) throw DimensionError("half-space computations need N >= 2");
  const double m = rho_power + N - 2;
  if (!(2.0 * kappa - m - 1.0 > 0.0))
    throw DivergentIntegral("|y|^" + std::to_string(rho_power) + " (1+|y|^2)^-" + std::to_string(kappa) +
                            " is not integrable on R^" + std::to_string(N - 1));
  const double R = opt.truncation_R;
  const auto nodes = panel_nodes(graded_edges(R), opt.nodes_per_panel);
  std::vector<double> parts(nodes.x.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const double rho = nodes.x[i];
    parts[i] = nodes.w[i] * std::pow(rho, m) * std::pow(1.0 + rho * rho, -kappa);
  }
  const double area = sphere_area(N - 2);
  IntegralEstimate est;
  est.truncated = area * compensated_sum(parts);
  // (1 + rho^2)^-kappa = rho^-2kappa sum_j binom(-kappa, j) rho^-2j beyond R
  std::vector<double> tail;
  double c = 1.0;
  for (int j = 0; j < opt.tail_series_terms; ++j) {
    const double e = m - 2.0 * kappa - 2.0 * j + 1.0;
    tail.push_back(c * std::pow(R, e) / (-e));
    c *= (-kappa - j) / (j + 1.0);
  }
  est.value = est.truncated + area * compensated_sum(tail);
  return est;
}

double exact_halfspace_integral(int N, const PowerTerm& term) {
  check_bulk_integrable(N, term);
  const double m = term.rho_power + N - 2;
  const double k = term.r_power;
  return term.coef * sphere_area(N - 2) * 0.5 * beta_function((m + 1.0) / 2.0, (k - m - 1.0) / 2.0) *
         beta_function(term.t_power + 1.0, k - m - term.t_power - 2.0);
}

double exact_boundary_integral(int N, double rho_power, double kappa) {
  const double m = rho_power + N - 2;
  if (!(2.0 * kappa - m - 1.0 > 0.0)) throw DivergentIntegral("boundary integrand is not integrable");
  return sphere_area(N - 2) * 0.5 * beta_function((m + 1.0) / 2.0, kappa - (m + 1.0) / 2.0);
}

SharpConstantEstimate sharp_constant_quadrature(int N, double p, const QuadratureOptions& opt) {
  check_range(N, p);
  const double alpha = extremal_alpha(N, p);
  const double ps = trace_exponent(N, p);
  if (!(p * (alpha + 1.0) > N)) throw DivergentIntegral("|grad V|^p is not integrable");
  if (!(ps * alpha > N - 1)) throw DivergentIntegral("V(.,0)^{p_*} is not integrable");
  const PowerTerm grad{std::pow(alpha, p), 0, 0.0, p * (alpha + 1.0)};
  const auto D = integrate_halfspace(N, std::span(&grad, 1), opt);
  const auto A = integrate_boundary(N, 0.0, 0.5 * ps * alpha, opt);
  SharpConstantEstimate est;
  est.N = N;
  est.p = p;
  est.gradient_integral = D.value;
  est.trace_integral = A.value;
  est.K_inv = std::pow(D.value, 1.0 / p) / std::pow(A.value, 1.0 / ps);
  const double truncated = std::pow(D.truncated, 1.0 / p) / std::pow(A.truncated, 1.0 / ps);
  est.tail_bound = std::abs(est.K_inv - truncated);
  est.formula = sharp_constant_formula(N, p);
  est.formula_root = std::pow(est.formula, 1.0 / p);
  est.reconciliation_defect = std::abs(est.formula_root * est.K_inv - 1.0);
  const double direct = std::abs(est.formula * est.K_inv - 1.0);
  if (direct <= 1e-6) {
    est.note = "formula matches the quadrature constant";
  } else if (est.reconciliation_defect <= 1e-6) {
    est.note = "formula differs from 1/K_inv; it matches (1/K_inv)^p, so the printed expression is read as K^p";
  } else {
    est.note = "formula and quadrature disagree beyond the exponent-p reconciliation";
  }
  return est;
}

double dilated_quotient(const ExtremalProfile& prof, const QuadratureOptions& opt) {
  const int N = prof.N;
  const double p = prof.p;
  const double alpha = prof.alpha();
  const double ps = trace_exponent(N, p);
  const double lam = prof.lambda;
  const auto nodes = panel_nodes(graded_edges(opt.truncation_R), opt.nodes_per_panel);
  const std::size_t n = nodes.x.size();
  const double area = sphere_area(N - 2);
  // the profile is radial about y0 in y, one direction represents each shell
  std::vector<double> y(static_cast<std::size_t>(N - 1));
  auto place = [&](double xi) {
    for (std::size_t d = 0; d < y.size(); ++d) y[d] = prof.y0[d];
    y[0] += lam * xi;
  };
  std::vector<double> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = lam * nodes.x[i];
    CompensatedSum row;
    for (std::size_t j = 0; j < n; ++j) {
      place(nodes.x[j]);
      const double g = prof.gradient_norm(y, t);
      row.add(nodes.w[j] * std::pow(nodes.x[j], N - 2) * std::pow(g, p));
    }
    rows[i] = nodes.w[i] * row.value();
  }
  const double jac_bulk = std::pow(lam, N);
  const PowerTerm grad{std::pow(alpha, p), 0, 0.0, p * (alpha + 1.0)};
  const double bulk = jac_bulk * area * compensated_sum(rows) +
                      std::pow(lam, N - p * (alpha + 1.0)) * bulk_tail(N, grad, opt);

  std::vector<double> parts(n);
  for (std::size_t j = 0; j < n; ++j) {
    place(nodes.x[j]);
    parts[j] = nodes.w[j] * std::pow(nodes.x[j], N - 2) * std::pow(prof(y, 0.0), ps);
  }
  const auto ref = integrate_boundary(N, 0.0, 0.5 * ps * alpha, opt);
  const double trace = std::pow(lam, N - 1) * area * compensated_sum(parts) +
                       std::pow(lam, N - 1 - ps * alpha) * (ref.value - ref.truncated);
  return std::pow(bulk, 1.0 / p) / std::pow(trace, 1.0 / ps);
}

// --- expansion coefficients -------------------------------------------------

double ExpansionCoefficients::get(const std::string& name) const {
  const std::optional<double>* slot = nullptr;
  if (name == "C0") slot = &C0;
  else if (name == "A0") slot = &A0;
  else if (name == "A1") slot = &A1;
  else if (name == "D0") slot = &D0;
  else if (name == "D1") slot = &D1;
  else if (name == "D2") slot = &D2;
  else if (name == "D3") slot = &D3;
  else if (name == "D4") slot = &D4;
  else throw DomainError("unknown coefficient " + name);
  if (slot->has_value()) return **slot;
  for (const auto& r : rejections) {
    if (r.coefficient != name) continue;
    const std::string msg = name + " requires " + r.inequality + " (N = " + std::to_string(inputs.N) +
                            ", p = " + std::to_string(inputs.p) + ")";
    if (r.divergent) throw DivergentIntegral(msg);
    throw HypothesisViolation(msg);
  }
  throw HypothesisViolation(name + " was not computed");
}

ExpansionCoefficients expansion_coefficients(const ExpansionInputs& in, const QuadratureOptions& opt) {
  check_range(in.N, in.p);
  const int N = in.N;
  const double p = in.p;
  const double alpha = extremal_alpha(N, p);
  const double ps = trace_exponent(N, p);
  const double k = p * (alpha + 1.0);
  const double ga = std::pow(alpha, p);  // |grad V|^p = alpha^p r^-k
  ExpansionCoefficients out;
  out.inputs = in;
  double tail = 0.0;
  auto bulk = [&](int a, double b, double extra_r) {
    const PowerTerm term{ga, a, b, k + extra_r};
    const auto est = integrate_halfspace(N, std::span(&term, 1), opt);
    tail = std::max(tail, est.tail_bound());
    return est.value;
  };
  auto reject = [&](const char* name, const char* inequality, bool divergent = false) {
    out.rejections.push_back({name, inequality, divergent});
  };

  if (p * p < N) {
    const PowerTerm term{1.0, 0, 0.0, p * alpha};
    const auto est = integrate_halfspace(N, std::span(&term, 1), opt);
    tail = std::max(tail, est.tail_bound());
    out.C0 = in.f0 * est.value;
  } else {
    reject("C0", "p < sqrt(N)", true);
  }

  {
    const auto est = integrate_boundary(N, 0.0, 0.5 * ps * alpha, opt);
    tail = std::max(tail, est.tail_bound());
    out.A0 = in.f0 * est.value;
  }
  if (p < (N - 1) / 2.0) {
    if (in.f0 == 0.0 || in.lap_r0 == 0.0) {
      out.A1 = 0.0;
    } else {
      const auto est = integrate_boundary(N, 2.0, 0.5 * ps * alpha, opt);
      tail = std::max(tail, est.tail_bound());
      out.A1 = -in.f0 * in.lap_r0 * est.value / (2.0 * ps);
    }
  } else {
    reject("A1", "p < (N-1)/2");
  }

  out.D0 = in.f0 * bulk(0, 0.0, 0.0);
  out.D3 = 0.0;
  const bool d_ok = p < static_cast<double>(N) * N / (3.0 * N - 2.0);
  if (d_ok) {
    out.D1 = (in.f0 == 0.0 || in.dtp0 == 0.0) ? 0.0 : -(N / p) * in.f0 * in.dtp0 * bulk(1, 0.0, 0.0);
    if (in.dtp0 == 0.0) {
      double d2 = 0.0;
      const double c1 = in.dtf0 - in.H * in.f0;
      if (c1 != 0.0) d2 += c1 * bulk(1, 0.0, 0.0);
      if (in.hbar != 0.0 && in.f0 != 0.0) d2 += p * in.hbar * in.f0 * bulk(1, 2.0, 2.0);
      out.D2 = d2;
      double d4 = 0.0;
      if (in.f0 != 0.0 && in.dttp0 != 0.0) d4 -= N / (2.0 * p) * in.f0 * in.dttp0 * bulk(2, 0.0, 0.0);
      if (in.f0 != 0.0 && in.lap_y_p0 != 0.0)
        d4 -= N / (2.0 * (N - 1) * p) * in.f0 * in.lap_y_p0 * bulk(0, 2.0, 0.0);
      out.D4 = d4;
    } else {
      reject("D2", "dt p(0) = 0");
      reject("D4", "dt p(0) = 0");
    }
  } else {
    reject("D1", "p < N^2/(3N-2)");
    reject("D2", "p < N^2/(3N-2)");
    reject("D4", "p < N^2/(3N-2)");
  }
  out.tail_bound = tail;
  return out;
}

// --- norm expansion on a model domain ----------------------------------------

ExpansionInputs ExpansionModel::inputs() const {
  ExpansionInputs in;
  in.N = N;
  in.p = p0;
  in.dtp0 = dtp;
  in.dttp0 = dttp;
  in.lap_y_p0 = lap_y_p;
  in.lap_r0 = lap_r;
  const bool flat = !std::isfinite(ball_radius);
  in.H = flat ? 0.0 : (N - 1) / ball_radius;
  in.hbar = flat ? 0.0 : 1.0 / ball_radius;
  return in;
}

namespace {

struct Cutoff {
  double delta;
  // value and derivative of the radial profile at distance d
  std::pair<double, double> operator()(double d) const {
    if (d <= delta) return {1.0, 0.0};
    if (d >= 2.0 * delta) return {0.0, 0.0};
    const double u = (d - delta) / delta;
    const double s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
    const double ds = 30.0 * u * u * (1.0 - u) * (1.0 - u) / delta;
    return {1.0 - s, -ds};
  }
};

std::vector<double> fit_edges(double eps, double outer) {
  std::vector<double> e{0.0};
  for (double x = 0.25 * eps; x < outer; x *= 2.0) e.push_back(x);
  e.push_back(outer);
  return e;
}

}  // namespace

NormExpansionFit norm_expansion_check(const ExpansionModel& model, const ExpansionCoefficients& coefficients,
                                      std::span<const double> epsilons) {
  const int N = model.N;
  const double p = model.p0;
  check_range(N, p);
  const double alpha = extremal_alpha(N, p);
  const double ps = trace_exponent(N, p);
  const bool flat = !std::isfinite(model.ball_radius);
  const double R = model.ball_radius;
  if (!flat && 2.0 * model.delta > 0.5 * R) throw ChartRangeError("cutoff support exceeds the model chart");
  if (epsilons.size() < 4) throw FitUnstable("need at least four scales for the fit");
  for (std::size_t i = 1; i < epsilons.size(); ++i)
    if (!(epsilons[i] < epsilons[i - 1])) throw DomainError("scales must be decreasing");
  if (!(epsilons[0] < model.delta)) throw ChartRangeError("scales must be below the cutoff radius");

  const double D0 = coefficients.get("D0");
  const double A0 = coefficients.get("A0");
  NormExpansionFit fit;
  fit.D0_root = std::pow(D0, 1.0 / p);
  fit.A0_root = std::pow(A0, 1.0 / ps);
  fit.predicted_eps_log_eps = coefficients.get("D1") / (p * D0);
  if (coefficients.D2) fit.predicted_eps = *coefficients.D2 / (p * D0);
  if (coefficients.A1) fit.predicted_boundary = *coefficients.A1 / (ps * A0);

  const double area = sphere_area(N - 2);
  const Cutoff eta{model.delta};
  const double outer = 2.0 * model.delta;
  const double lap_coef_p = model.lap_y_p / (2.0 * (N - 1));
  const double lap_coef_r = model.lap_r / (2.0 * (N - 1));

  for (double eps : epsilons) {
    const auto nodes = panel_nodes(fit_edges(eps, outer), 20);
    const double scale = std::pow(eps, -(N - p) / p);
    AtomBuffer atoms;
    AtomBuffer grads;
    for (std::size_t i = 0; i < nodes.x.size(); ++i) {
      const double t = nodes.x[i];
      for (std::size_t j = 0; j < nodes.x.size(); ++j) {
        const double rho = nodes.x[j];
        const double d = std::hypot(rho, t);
        if (d >= outer) continue;
        const double cosphi = flat ? 1.0 : std::sqrt(1.0 - (rho / R) * (rho / R));
        const double J = flat ? 1.0 : std::pow(1.0 - t / R, N - 1) / cosphi;
        const double w = nodes.w[i] * nodes.w[j] * area * std::pow(rho, N - 2) * J;
        const double s = 1.0 + t / eps;
        const double r = std::hypot(s, rho / eps);
        const double V = scale * std::pow(r, -alpha);
        const double dV = -alpha * scale * std::pow(r, -alpha - 2.0) / eps;  // times (rho/eps) or s
        const auto [e, de] = eta(d);
        const double er = d > 0.0 ? de * rho / d : 0.0;
        const double et = d > 0.0 ? de * t / d : 0.0;
        const double v_rho = er * V + e * dV * (rho / eps);
        const double v_t = et * V + e * dV * s;
        const double metric = flat ? 1.0 : R * cosphi / (R - t);
        const double g = std::hypot(v_t, metric * v_rho);
        const double px = p + model.dtp * t + 0.5 * model.dttp * t * t + lap_coef_p * rho * rho;
        atoms.weights.push_back(w);
        atoms.magnitudes.push_back(std::abs(e * V));
        atoms.exponents.push_back(px);
        grads.weights.push_back(w);
        grads.magnitudes.push_back(g);
        grads.exponents.push_back(px);
      }
    }
    atoms.weights.insert(atoms.weights.end(), grads.weights.begin(), grads.weights.end());
    atoms.magnitudes.insert(atoms.magnitudes.end(), grads.magnitudes.begin(), grads.magnitudes.end());
    atoms.exponents.insert(atoms.exponents.end(), grads.exponents.begin(), grads.exponents.end());
    fit.sobolev_norm.push_back(atom_norm(atoms.view()).norm);

    AtomBuffer bd;
    const double bscale = std::pow(eps, -(N - p) / p);
    for (std::size_t j = 0; j < nodes.x.size(); ++j) {
      const double rho = nodes.x[j];
      if (rho >= outer) continue;
      const double cosphi = flat ? 1.0 : std::sqrt(1.0 - (rho / R) * (rho / R));
      const double w = nodes.w[j] * area * std::pow(rho, N - 2) / cosphi;
      const double V = bscale * std::pow(1.0 + (rho / eps) * (rho / eps), -0.5 * alpha);
      bd.weights.push_back(w);
      bd.magnitudes.push_back(eta(rho).first * V);
      bd.exponents.push_back(ps + lap_coef_r * rho * rho);
    }
    fit.boundary_norm.push_back(atom_norm(bd.view()).norm);
    fit.epsilons.push_back(eps);
  }

  // first-order fit of the Sobolev norm ratio on {eps ln eps, eps, eps^p}
  const auto m = static_cast<Eigen::Index>(epsilons.size());
  Eigen::MatrixXd A(m, 3);
  Eigen::VectorXd y(m);
  Eigen::MatrixXd B(m, 2);
  Eigen::VectorXd yb(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double e = fit.epsilons[static_cast<std::size_t>(i)];
    A(i, 0) = e * std::log(e);
    A(i, 1) = e;
    A(i, 2) = std::pow(e, p);
    y(i) = fit.sobolev_norm[static_cast<std::size_t>(i)] / fit.D0_root - 1.0;
    B(i, 0) = e * e * std::log(e);
    B(i, 1) = e * e;
    yb(i) = fit.boundary_norm[static_cast<std::size_t>(i)] / fit.A0_root - 1.0;
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd cb = B.colPivHouseholderQr().solve(yb);
  fit.fitted_eps_log_eps = c(0);
  fit.fitted_eps = c(1);
  fit.fitted_boundary = cb(0);
  const double res = (A * c - y).norm() / std::sqrt(static_cast<double>(m));
  const double scale = std::max(y.cwiseAbs().maxCoeff(), 1e-9);
  fit.residual = res / scale;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double e = fit.epsilons[static_cast<std::size_t>(i)];
    double predicted = fit.predicted_eps_log_eps * e * std::log(e);
    if (fit.predicted_eps) predicted += *fit.predicted_eps * e;
    fit.defects.push_back(std::abs(y(i) - predicted));
  }
  constexpr double kMaxResidual = 0.25;
  if (fit.residual > kMaxResidual)
    throw FitUnstable("relative fit residual " + std::to_string(fit.residual) + " exceeds " +
                      std::to_string(kMaxResidual));
  return fit;
}

}  // namespace vtrace
