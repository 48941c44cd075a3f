#include "vtrace/luxemburg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "vtrace/errors.hpp"
#include "vtrace/parallel.hpp"

namespace vtrace {

double WeightedSamples::total_weight() const { return compensated_sum(weights); }

void WeightedSamples::validate() const {
  const auto n = weights.size();
  const auto d = static_cast<std::size_t>(dimension);
  if (dimension < 1) throw FormatError("samples need a positive dimension");
  if (values.size() != n || points.size() != n * d)
    throw FormatError("sample columns have inconsistent lengths");
  if (gradients && gradients->size() != n * d) throw FormatError("gradient column has inconsistent length");
  for (double w : weights)
    if (!(w > 0.0) || !std::isfinite(w)) throw FormatError("sample weights must be positive and finite");
}

WeightedSamples WeightedSamples::scaled(double c) const {
  WeightedSamples out = *this;
  for (double& v : out.values) v *= c;
  if (out.gradients)
    for (double& g : *out.gradients) g *= c;
  return out;
}

double atom_modular(const AtomView& atoms, double lambda) {
  const std::size_t n = atoms.weights.size();
  std::vector<double> terms(n);
  const double inv = 1.0 / lambda;
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double a = atoms.magnitudes[i];
      terms[i] = a == 0.0 ? 0.0 : atoms.weights[i] * std::pow(a * inv, atoms.exponents[i]);
    }
  });
  return compensated_sum(terms);
}

namespace {

// Modular of the pre-scaled atoms evaluated through logarithms:
// w_i exp(p_i (log b_i - log lambda)).
class ScaledModular {
 public:
  ScaledModular(const AtomView& atoms, double scale) {
    const std::size_t n = atoms.weights.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double a = atoms.magnitudes[i];
      if (a == 0.0) continue;
      log_b_.push_back(std::log(a / scale));
      w_.push_back(atoms.weights[i]);
      p_.push_back(atoms.exponents[i]);
    }
    terms_.resize(w_.size());
    dterms_.resize(w_.size());
  }

  bool empty() const { return w_.empty(); }
  double p_min() const { return *std::min_element(p_.begin(), p_.end()); }
  double p_max() const { return *std::max_element(p_.begin(), p_.end()); }

  /// Returns the modular at lambda; fills the exponent-weighted sum.
  double operator()(double lambda, double* weighted = nullptr) {
    const double log_lambda = std::log(lambda);
    const bool want = weighted != nullptr;
    parallel_for(w_.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const double t = w_[i] * std::exp(p_[i] * (log_b_[i] - log_lambda));
        terms_[i] = t;
        if (want) dterms_[i] = p_[i] * t;
      }
    });
    if (want) *weighted = compensated_sum(dterms_);
    return compensated_sum(terms_);
  }

 private:
  std::vector<double> log_b_, w_, p_, terms_, dterms_;
};

}  // namespace

NormResult atom_norm(const AtomView& atoms) {
  double scale = 0.0;
  for (double a : atoms.magnitudes) {
    if (!std::isfinite(a) || a < 0.0) throw NonFiniteModular("atom magnitudes must be finite and nonnegative");
    scale = std::max(scale, a);
  }
  NormResult result;
  if (scale == 0.0) return result;

  ScaledModular rho(atoms, scale);
  const double p_lo = rho.p_min();
  const double p_hi = rho.p_max();
  const double rho1 = rho(1.0);
  if (!std::isfinite(rho1) || !(rho1 > 0.0)) throw NonFiniteModular("modular of the scaled function is not finite");

  // Bracket from the power bounds between modular and norm.
  double lo, hi;
  if (rho1 >= 1.0) {
    lo = std::pow(rho1, 1.0 / p_hi);
    hi = std::pow(rho1, 1.0 / p_lo);
  } else {
    lo = std::pow(rho1, 1.0 / p_lo);
    hi = std::pow(rho1, 1.0 / p_hi);
  }
  lo *= 1.0 - 1e-12;
  hi *= 1.0 + 1e-12;
  bool retried = false;
  for (int guard = 0; guard < 64; ++guard) {
    const double flo = rho(lo) - 1.0;
    const double fhi = rho(hi) - 1.0;
    if (!std::isfinite(flo) || !std::isfinite(fhi)) {
      if (retried) throw NonFiniteModular("modular overflows at the norm bracket");
      retried = true;
      lo = std::sqrt(lo * hi);
      hi = lo;
      continue;
    }
    if (flo >= 0.0 && fhi <= 0.0) break;
    if (flo < 0.0) lo *= 0.5;
    if (fhi > 0.0) hi *= 2.0;
  }

  int steps = 0;
  while (hi - lo > kNormBracketTol * hi && steps < 200) {
    const double mid = std::sqrt(lo * hi);
    const double mid_safe = (mid > lo && mid < hi) ? mid : 0.5 * (lo + hi);
    if (rho(mid_safe) - 1.0 >= 0.0) lo = mid_safe;
    else hi = mid_safe;
    ++steps;
  }

  // One Newton step on f(lambda) = rho(lambda) - 1, f' = -sum(p w (b/lambda)^p)/lambda.
  double lambda = 0.5 * (lo + hi);
  double weighted = 0.0;
  const double f = rho(lambda, &weighted) - 1.0;
  if (weighted > 0.0) {
    const double next = lambda + f * lambda / weighted;
    if (next >= lo && next <= hi) lambda = next;
  }
  rho(lambda, &weighted);
  result.norm = lambda * scale;
  result.bisection_steps = steps;
  result.weighted_exponent_sum = weighted;
  return result;
}

AtomBuffer make_atoms(const WeightedSamples& u, const ExponentField& p, ModularKind kind) {
  u.validate();
  if (u.dimension != p.dimension()) throw DimensionError("sample and exponent dimensions differ");
  if (kind == ModularKind::Sobolev && !u.gradients)
    throw MissingGradient("Sobolev modular needs gradient values");
  const std::size_t n = u.size();
  const auto d = static_cast<std::size_t>(u.dimension);
  AtomBuffer buf;
  const std::size_t total = kind == ModularKind::Sobolev ? 2 * n : n;
  buf.weights.reserve(total);
  buf.magnitudes.reserve(total);
  buf.exponents.reserve(total);
  std::vector<double> pv(n);
  for (std::size_t i = 0; i < n; ++i) pv[i] = p(u.point(i));
  for (std::size_t i = 0; i < n; ++i) {
    buf.weights.push_back(u.weights[i]);
    buf.magnitudes.push_back(std::abs(u.values[i]));
    buf.exponents.push_back(pv[i]);
  }
  if (kind == ModularKind::Sobolev) {
    for (std::size_t i = 0; i < n; ++i) {
      double g2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double g = (*u.gradients)[i * d + k];
        g2 += g * g;
      }
      buf.weights.push_back(u.weights[i]);
      buf.magnitudes.push_back(std::sqrt(g2));
      buf.exponents.push_back(pv[i]);
    }
  }
  return buf;
}

ModularValue modular(const WeightedSamples& u, const ExponentField& p, ModularKind kind) {
  const auto atoms = make_atoms(u, p, kind);
  return {atom_modular(atoms.view(), 1.0), kind};
}

double luxemburg_norm(const WeightedSamples& u, const ExponentField& p, ModularKind kind) {
  const auto atoms = make_atoms(u, p, kind);
  return atom_norm(atoms.view()).norm;
}

double split_sobolev_norm(const WeightedSamples& u, const ExponentField& p) {
  if (!u.gradients) throw MissingGradient("split Sobolev norm needs gradient values");
  const auto atoms = make_atoms(u, p, ModularKind::Sobolev);
  const std::size_t n = u.size();
  auto half = [&](std::size_t offset) {
    const AtomView v{std::span(atoms.weights).subspan(offset, n), std::span(atoms.magnitudes).subspan(offset, n),
                     std::span(atoms.exponents).subspan(offset, n)};
    return atom_norm(v).norm;
  };
  return half(0) + half(n);
}

HolderBound holder_product_bound(const WeightedSamples& f, const WeightedSamples& g,
                                 const ExponentField& p, const ExponentField& q) {
  f.validate();
  g.validate();
  if (f.size() != g.size() || f.points != g.points || f.weights != g.weights)
    throw ExponentMismatch("Hölder bound needs f and g on the same atoms");
  const Expr one = Expr::constant(1.0);
  ExponentField s(one / (one / p.expr() + one / q.expr()), p.dimension(), Regularity::C0);
  double sp_max = 0.0;
  double sq_max = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto x = f.point(i);
    const double sv = s(x);
    if (!(sv >= 1.0)) throw ExponentMismatch("product exponent s(x) = " + std::to_string(sv) + " is below 1");
    sp_max = std::max(sp_max, sv / p(x));
    sq_max = std::max(sq_max, sv / q(x));
  }
  WeightedSamples fg = f;
  fg.gradients.reset();
  for (std::size_t i = 0; i < fg.size(); ++i) fg.values[i] = f.values[i] * g.values[i];
  HolderBound out{0.0, 0.0, s};
  out.lhs = luxemburg_norm(fg, s, ModularKind::Lebesgue);
  out.rhs = (sp_max + sq_max) * luxemburg_norm(f, p, ModularKind::Lebesgue) *
            luxemburg_norm(g, q, ModularKind::Lebesgue);
  return out;
}

bool NormModularReport::all_hold(double tolerance) const {
  return std::all_of(relations.begin(), relations.end(),
                     [&](const Relation& r) { return !r.applicable || r.slack >= -tolerance; });
}

NormModularReport verify_norm_modular_relations(const WeightedSamples& u, const ExponentField& p) {
  const auto atoms = make_atoms(u, p, ModularKind::Lebesgue);
  NormModularReport rep;
  rep.p_lower = *std::min_element(atoms.exponents.begin(), atoms.exponents.end());
  rep.p_upper = *std::max_element(atoms.exponents.begin(), atoms.exponents.end());
  rep.modular = atom_modular(atoms.view(), 1.0);
  rep.norm = atom_norm(atoms.view()).norm;
  const double nrm = rep.norm;
  const double rho = rep.modular;
  // slack of a <= b, relative to the size of the compared quantities
  auto le = [](double a, double b) { return (b - a) / std::max({1.0, std::abs(a), std::abs(b)}); };

  Relation unit{"unit_ball", nrm > 0.0, 0.0};
  if (unit.applicable) unit.slack = -std::abs(atom_modular(atoms.view(), nrm) - 1.0);
  rep.relations.push_back(unit);

  // ||u|| < 1 (= 1, > 1)  <=>  rho(u) < 1 (= 1, > 1)
  Relation tri{"trichotomy", true, 0.0};
  constexpr double kUnitTol = 1e-12;
  if (std::abs(nrm - 1.0) <= kUnitTol) tri.slack = -std::abs(rho - 1.0);
  else if (nrm > 1.0) tri.slack = le(1.0, rho);
  else tri.slack = le(rho, 1.0);
  rep.relations.push_back(tri);

  const bool big = nrm > 1.0;
  rep.relations.push_back({"above_one_lower", big, big ? le(std::pow(nrm, rep.p_lower), rho) : 0.0});
  rep.relations.push_back({"above_one_upper", big, big ? le(rho, std::pow(nrm, rep.p_upper)) : 0.0});
  const bool small = nrm < 1.0 && nrm > 0.0;
  rep.relations.push_back({"below_one_lower", small, small ? le(std::pow(nrm, rep.p_upper), rho) : 0.0});
  rep.relations.push_back({"below_one_upper", small, small ? le(rho, std::pow(nrm, rep.p_lower)) : 0.0});
  return rep;
}

void write_samples_csv(std::ostream& out, const WeightedSamples& samples) {
  samples.validate();
  const int d = samples.dimension;
  for (int k = 0; k < d; ++k) out << 'x' << k + 1 << ',';
  out << "weight,value";
  if (samples.gradients)
    for (int k = 0; k < d; ++k) out << ",g" << k + 1;
  out << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  const auto du = static_cast<std::size_t>(d);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t k = 0; k < du; ++k) {
      put(samples.points[i * du + k]);
      out << ',';
    }
    put(samples.weights[i]);
    out << ',';
    put(samples.values[i]);
    if (samples.gradients)
      for (std::size_t k = 0; k < du; ++k) {
        out << ',';
        put((*samples.gradients)[i * du + k]);
      }
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  return cells;
}

}  // namespace

WeightedSamples read_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty sample file");
  const auto header = split_csv(line);
  int d = 0;
  while (static_cast<std::size_t>(d) < header.size() && header[static_cast<std::size_t>(d)] == "x" + std::to_string(d + 1))
    ++d;
  const auto du = static_cast<std::size_t>(d);
  if (d == 0 || header.size() < du + 2 || header[du] != "weight" || header[du + 1] != "value")
    throw FormatError("sample header must read x1..xN,weight,value[,g1..gN]");
  const bool grads = header.size() == 2 * du + 2;
  if (!grads && header.size() != du + 2) throw FormatError("sample header has an unexpected column count");
  if (grads)
    for (std::size_t k = 0; k < du; ++k)
      if (header[du + 2 + k] != "g" + std::to_string(k + 1)) throw FormatError("gradient columns must be g1..gN");

  WeightedSamples s;
  s.dimension = d;
  if (grads) s.gradients.emplace();
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw FormatError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " columns");
    std::vector<double> v(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      std::size_t used = 0;
      try {
        v[k] = std::stod(cells[k], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cells[k].size() || cells[k].empty())
        throw FormatError("row " + std::to_string(row) + ": '" + cells[k] + "' is not a number");
    }
    s.points.insert(s.points.end(), v.begin(), v.begin() + d);
    s.weights.push_back(v[du]);
    s.values.push_back(v[du + 1]);
    if (grads) s.gradients->insert(s.gradients->end(), v.begin() + static_cast<long>(du + 2), v.end());
  }
  s.validate();
  return s;
}

WeightedSamples read_samples_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open sample file " + path);
  return read_samples_csv(in);
}

}  // namespace vtrace
