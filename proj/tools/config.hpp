#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vtrace/conditions.hpp"
#include "vtrace/geometry.hpp"
#include "vtrace/halfspace.hpp"
#include "vtrace/solver.hpp"

namespace vtrace::cli {

/// Flat "section.key" -> value view of a config file plus command-line
/// overrides. This is what the config hash is computed from.
using Settings = std::map<std::string, std::string>;

/// Reads an INI-style file. ConfigError (with the line) on syntax errors
/// and duplicate keys.
Settings read_settings(std::istream& in, const std::string& origin);
Settings read_settings_file(const std::string& path);

/// FNV-1a 64 over the canonical "key=value\n" listing (sorted keys).
std::uint64_t settings_hash(const Settings& s);
std::string hash_hex(std::uint64_t h);

struct DomainConfig {
  std::string shape = "disk";  // disk | polygon | arcs
  Point2 center{0.0, 0.0};
  double radius = 1.0;
  std::vector<Point2> vertices;
  std::vector<Arc> arcs;
  std::vector<int> gamma;
  double h = 0.1;
};

struct SolverConfig {
  std::string init = "constant";  // constant | random | bubble | multistart
  std::optional<Point2> bubble_x0;
  double bubble_lambda = 0.0;  // 0: two mesh sizes
  int max_iter = 200;
  double tol = 1e-7;
  std::vector<double> radii;  // empty: 1, 2, 5, 10, 20 mesh sizes
  double threshold = 0.9;
  int max_bubbles = 4;
};

struct ConditionsConfig {
  bool global = true;
  bool local = true;
  bool existence = true;
  bool compactness = false;
  std::optional<Point2> local_x0;
  CriticalLocus K;
  double s = 1.0;
  double C = 1.0;
  double r0 = 0.05;
  RateFunction phi = RateFunction::iterated_log(1);
  int bar_T_points = 8;
};

struct NormConfig {
  std::string samples;
  std::string p;
  std::string kind = "lebesgue";  // lebesgue | sobolev
};

struct ExpandConfig {
  ExpansionModel model;
  std::vector<double> epsilons{0.02, 0.014, 0.01, 0.007, 0.005};
};

struct ProblemConfig {
  DomainConfig domain;
  std::string p_expr = "1.5";
  std::string r_expr = "2";
  Regularity regularity = Regularity::C2;
  double critical_tol = 1e-9;
  SolverConfig solver;
  int halfspace_N = 3;
  double halfspace_p = 2.0;
  double truncation_R = 100.0;
  ConditionsConfig conditions;
  NormConfig norm;
  ExpandConfig expand;
};

/// Typed view of the settings. ConfigError naming the offending key on
/// unknown keys and malformed values.
ProblemConfig parse_config(const Settings& s);

PlanarDomain build_domain(const DomainConfig& d);
DiscreteTraceProblem build_problem(const ProblemConfig& c);
DiscreteTraceProblem build_problem(const ProblemConfig& c, PlanarDomain domain);

}  // namespace vtrace::cli
