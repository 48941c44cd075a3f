#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vtrace/exponents.hpp"

namespace vtrace {

/// Discrete carrier of a function for integrals over a region: atoms at
/// points with positive quadrature weights, values and optional gradients.
struct WeightedSamples {
  int dimension = 2;
  std::vector<double> points;   // row-major, dimension per atom
  std::vector<double> weights;  // > 0
  std::vector<double> values;
  std::optional<std::vector<double>> gradients;  // row-major, dimension per atom

  std::size_t size() const { return weights.size(); }
  std::span<const double> point(std::size_t i) const {
    return std::span<const double>(points).subspan(i * static_cast<std::size_t>(dimension),
                                                   static_cast<std::size_t>(dimension));
  }
  double total_weight() const;
  /// Throws FormatError when lengths disagree or a weight is not positive.
  void validate() const;
  /// Same atoms with values (and gradients) multiplied by c.
  WeightedSamples scaled(double c) const;
};

enum class ModularKind { Lebesgue, Sobolev };

struct ModularValue {
  double value = 0.0;
  ModularKind kind = ModularKind::Lebesgue;
};

/// Flat atom representation: sum_i w_i (a_i / lambda)^{p_i} with a_i >= 0.
struct AtomView {
  std::span<const double> weights;
  std::span<const double> magnitudes;
  std::span<const double> exponents;
};

/// sum_i w_i (a_i/lambda)^{p_i}, compensated, fixed index order.
double atom_modular(const AtomView& atoms, double lambda = 1.0);

struct NormResult {
  double norm = 0.0;
  int bisection_steps = 0;
  /// sum_i w_i p_i (a_i/norm)^{p_i}; the lambda-derivative of the modular
  /// is -weighted_exponent_sum / norm.
  double weighted_exponent_sum = 0.0;
};

/// Relative bracket width at which bisection hands over to the Newton
/// polish.
inline constexpr double kNormBracketTol = 1e-13;

/// The unique lambda > 0 with atom_modular(atoms, lambda) = 1 (0 when all
/// magnitudes vanish).
NormResult atom_norm(const AtomView& atoms);

/// Atoms of u for the given modular kind; exponents evaluated at the
/// sample points.
struct AtomBuffer {
  std::vector<double> weights;
  std::vector<double> magnitudes;
  std::vector<double> exponents;
  AtomView view() const { return {weights, magnitudes, exponents}; }
};
AtomBuffer make_atoms(const WeightedSamples& u, const ExponentField& p, ModularKind kind);

ModularValue modular(const WeightedSamples& u, const ExponentField& p, ModularKind kind);
double luxemburg_norm(const WeightedSamples& u, const ExponentField& p, ModularKind kind);

/// ||u||_{p(x)} + ||grad u||_{p(x)}; equivalent to the Sobolev norm.
double split_sobolev_norm(const WeightedSamples& u, const ExponentField& p);

struct HolderBound {
  double lhs = 0.0;  // ||f g||_{s(x)}
  double rhs = 0.0;  // ((s/p)+ + (s/q)+) ||f||_{p(x)} ||g||_{q(x)}
  ExponentField s;
};

/// Both sides of the Hölder-type inequality with 1/s = 1/p + 1/q.
/// f and g must share points and weights; throws ExponentMismatch when
/// s < 1 at some atom.
HolderBound holder_product_bound(const WeightedSamples& f, const WeightedSamples& g,
                                 const ExponentField& p, const ExponentField& q);

struct Relation {
  std::string name;
  bool applicable = true;
  double slack = 0.0;  // relative; >= 0 means the relation holds
};

struct NormModularReport {
  double norm = 0.0;
  double modular = 0.0;
  double p_lower = 0.0;
  double p_upper = 0.0;
  std::vector<Relation> relations;
  /// true iff every applicable relation has slack >= -tolerance
  bool all_hold(double tolerance = 1e-9) const;
};

/// Evaluates the unit-ball characterization, the trichotomy and the
/// power bounds between the Lebesgue modular and the Luxemburg norm.
NormModularReport verify_norm_modular_relations(const WeightedSamples& u, const ExponentField& p);

/// Columnar CSV: x1..xN,weight,value[,g1..gN] with a header row.
void write_samples_csv(std::ostream& out, const WeightedSamples& samples);
WeightedSamples read_samples_csv(std::istream& in);
WeightedSamples read_samples_csv_file(const std::string& path);

}  // namespace vtrace
