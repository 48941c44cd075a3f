#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "config.hpp"
#include "vtrace/conditions.hpp"
#include "vtrace/errors.hpp"
#include "vtrace/halfspace.hpp"
#include "vtrace/luxemburg.hpp"
#include "vtrace/parallel.hpp"
#include "vtrace/solver.hpp"

#ifndef VTRACE_VERSION
#define VTRACE_VERSION "0.0.0"
#endif

namespace vtrace::cli {

using nlohmann::json;

const char* version() { return VTRACE_VERSION; }

namespace {

struct Outcome {
  json result;
  int exit_code = 0;
  std::string summary;
};

json point_json(Point2 p) { return json::array({p[0], p[1]}); }

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json verdict_json(const ConditionVerdict& v) {
  json details = json::object();
  for (const auto& [k, x] : v.details) details[k] = x;
  return {{"name", v.name},
          {"satisfied", to_string(v.satisfied)},
          {"lhs", v.lhs},
          {"rhs", v.rhs},
          {"margin", v.margin},
          {"provenance", v.provenance},
          {"details", details},
          {"notes", v.notes},
          {"label", v.label}};
}

json concentration_json(const ConcentrationVerdict& c) {
  json atoms = json::array();
  for (const auto& a : c.ranked_atoms)
    atoms.push_back({{"vertex", a.vertex}, {"location", point_json(a.location)}, {"score", a.score}});
  return {{"concentrated", c.concentrated},
          {"atom_location", c.atom_location ? point_json(*c.atom_location) : json(nullptr)},
          {"atom_vertex", c.atom_vertex},
          {"radii", c.radii},
          {"boundary_mass_profile", c.boundary_mass_profile},
          {"interior_gradient_mass", c.interior_gradient_mass},
          {"decision_radius", c.decision_radius},
          {"decision_fraction", c.decision_fraction},
          {"ranked_atoms", atoms},
          {"refinement_slack", optional_json(c.refinement_slack)}};
}

json run_summary(const SolverReport& r) {
  return {{"init", r.init_label},
          {"T_estimate", r.T_estimate},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"line_search_failure", r.line_search_failure},
          {"non_convergence", r.non_convergence}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << text;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits = 10) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::vector<double> default_radii(const SolverConfig& s, double h) {
  if (!s.radii.empty()) return s.radii;
  return {h, 2.0 * h, 5.0 * h, 10.0 * h, 20.0 * h};
}

SolverOptions solver_options(const ProblemConfig& c) {
  SolverOptions o;
  o.max_iter = c.solver.max_iter;
  o.tol = c.solver.tol;
  return o;
}

// Runs the configured initialization policy.
MultiStartReport solve_configured(const ProblemConfig& c, const DiscreteTraceProblem& pb, std::uint64_t seed) {
  const SolverOptions opt = solver_options(c);
  const auto& s = c.solver;
  if (s.init == "multistart") return minimize_multistart(pb, seed, opt, s.max_bubbles);
  InitSpec init;
  if (s.init == "random") {
    init.kind = InitKind::Random;
    init.seed = seed;
  } else if (s.init == "bubble") {
    init.kind = InitKind::Bubble;
    init.x0 = *s.bubble_x0;
    init.lambda = s.bubble_lambda > 0.0 ? s.bubble_lambda : 2.0 * pb.domain().target_h();
  }
  MultiStartReport out;
  out.best = minimize(pb, init, opt);
  out.runs.push_back(out.best);
  return out;
}

Outcome cmd_norm(const ProblemConfig& c) {
  if (c.norm.samples.empty()) throw ConfigError("norm.samples: a samples CSV is required");
  if (c.norm.p.empty()) throw ConfigError("norm.p: an exponent expression is required");
  const WeightedSamples u = read_samples_csv_file(c.norm.samples);
  ExponentField p = [&] {
    try {
      return ExponentField::parse(c.norm.p, u.dimension);
    } catch (const SyntaxError& e) {
      throw ConfigError(std::string("norm.p: ") + e.what());
    }
  }();
  const ModularKind kind = c.norm.kind == "sobolev" ? ModularKind::Sobolev : ModularKind::Lebesgue;
  if (kind == ModularKind::Sobolev && !u.gradients) throw ConfigError("norm.kind: sobolev needs gradient columns");
  const AtomBuffer atoms = make_atoms(u, p, kind);
  const NormResult nr = atom_norm(atoms.view());
  Outcome o;
  o.result = {{"kind", c.norm.kind},
              {"atoms", atoms.weights.size()},
              {"norm", nr.norm},
              {"bisection_steps", nr.bisection_steps},
              {"modular", modular(u, p, kind).value}};
  if (kind == ModularKind::Lebesgue) {
    const auto rep = verify_norm_modular_relations(u, p);
    json rel = json::array();
    for (const auto& r : rep.relations) rel.push_back({{"name", r.name}, {"applicable", r.applicable}, {"slack", r.slack}});
    o.result["p_lower"] = rep.p_lower;
    o.result["p_upper"] = rep.p_upper;
    o.result["relations"] = rel;
    o.result["relations_hold"] = rep.all_hold();
  }
  o.summary = "norm = " + fixed(nr.norm, 12);
  return o;
}

Outcome cmd_constants(const ProblemConfig& c) {
  QuadratureOptions q;
  q.truncation_R = c.truncation_R;
  const auto e = sharp_constant_quadrature(c.halfspace_N, c.halfspace_p, q);
  Outcome o;
  o.result = {{"N", e.N},
              {"p", e.p},
              {"p_star", trace_critical_value(e.p, e.N)},
              {"alpha", extremal_alpha(e.N, e.p)},
              {"truncation_R", q.truncation_R},
              {"K_inv", e.K_inv},
              {"tail_bound", e.tail_bound},
              {"gradient_integral", e.gradient_integral},
              {"trace_integral", e.trace_integral},
              {"formula", e.formula},
              {"formula_root", e.formula_root},
              {"reconciliation_defect", e.reconciliation_defect},
              {"note", e.note}};
  o.summary = "K_inv = " + fixed(e.K_inv) + ", formula = " + fixed(e.formula) + " (" + e.note + ")";
  return o;
}

json problem_json(const DiscreteTraceProblem& pb) {
  const auto& m = pb.domain().mesh();
  const auto crit = pb.critical_vertices(pb.critical_tol());
  return {{"vertices", m.vertices.size()},
          {"triangles", m.triangles.size()},
          {"boundary_edges", m.boundary_edges.size()},
          {"h", pb.domain().target_h()},
          {"p_bounds", json::array({pb.p_bounds().lower, pb.p_bounds().upper})},
          {"r_bounds", json::array({pb.r_bounds().lower, pb.r_bounds().upper})},
          {"p_upper_below_r_lower", pb.p_upper_below_r_lower()},
          {"critical_vertices", crit.indices.size()},
          {"critical_margin", crit.margin}};
}

struct SolveFiles {
  std::string minimizer;
  std::string history;
  std::string mesh;
};

Outcome cmd_solve(const ProblemConfig& c, std::uint64_t seed, const SolveFiles& files) {
  const DiscreteTraceProblem pb = build_problem(c);
  MultiStartReport ms = solve_configured(c, pb, seed);
  SolverReport& rep = ms.best;
  const auto radii = default_radii(c.solver, pb.domain().target_h());
  ConcentrationOptions copt;
  copt.threshold = c.solver.threshold;
  rep.concentration = concentration_diagnostic(rep.minimizer, pb, radii, copt);

  Outcome o;
  json runs = json::array();
  for (const auto& r : ms.runs) runs.push_back(run_summary(r));
  o.result = run_summary(rep);
  o.result["problem"] = problem_json(pb);
  o.result["quotient_history"] = rep.quotient_history;
  o.result["concentration"] = concentration_json(*rep.concentration);
  o.result["runs"] = runs;

  if (!files.minimizer.empty()) {
    std::ostringstream csv;
    csv << "x,y,value\n";
    const auto& v = pb.domain().mesh().vertices;
    for (std::size_t i = 0; i < v.size(); ++i) csv << num(v[i][0]) << ',' << num(v[i][1]) << ',' << num(rep.minimizer[i]) << '\n';
    write_text(files.minimizer, csv.str());
  }
  if (!files.history.empty()) {
    std::ostringstream csv;
    csv << "iteration,quotient\n";
    for (std::size_t i = 0; i < rep.quotient_history.size(); ++i) csv << i << ',' << num(rep.quotient_history[i]) << '\n';
    write_text(files.history, csv.str());
  }
  if (!files.mesh.empty()) {
    std::ostringstream node, ele;
    pb.domain().write_node(node);
    pb.domain().write_ele(ele);
    write_text(files.mesh + ".node", node.str());
    write_text(files.mesh + ".ele", ele.str());
  }
  o.summary = "T_estimate = " + fixed(rep.T_estimate) + " after " + std::to_string(rep.iterations) +
              " iterations (" + rep.init_label + "), concentrated = " +
              (rep.concentration->concentrated ? "yes" : "no");
  return o;
}

Outcome cmd_conditions(const ProblemConfig& c, std::uint64_t seed) {
  const DiscreteTraceProblem pb = build_problem(c);
  const auto& cc = c.conditions;
  const BarTEstimate bar = estimate_bar_T(pb, cc.bar_T_points, solver_options(c));
  std::vector<ConditionVerdict> verdicts;
  json skipped = json::array();

  if (cc.global) {
    if (!pb.domain().gamma_arcs().empty())
      skipped.push_back({{"name", "global"}, {"reason", "Dirichlet part is not empty"}});
    else
      verdicts.push_back(global_condition(pb.domain(), pb.p(), pb.r(), bar.value));
  }
  if (cc.local) {
    const std::optional<Point2> x0 = cc.local_x0 ? cc.local_x0 : bar.argmin;
    if (!x0) {
      skipped.push_back({{"name", "local"}, {"reason", "no critical point"}});
    } else {
      LocalConditionOptions lo;
      lo.critical_tol = c.critical_tol;
      try {
        verdicts.push_back(local_condition(pb.domain().boundary(), pb.p(), pb.r(), *x0, lo));
      } catch (const NotCritical& e) {
        skipped.push_back({{"name", "local"}, {"reason", e.what()}});
      } catch (const RegularityMissing& e) {
        skipped.push_back({{"name", "local"}, {"reason", e.what()}});
      } catch (const CornerError& e) {
        skipped.push_back({{"name", "local"}, {"reason", e.what()}});
      }
    }
  }
  if (cc.compactness)
    verdicts.push_back(compactness_rate_check(pb.domain().boundary(), pb.p(), pb.r(), cc.K, cc.s, cc.C, cc.r0, cc.phi));

  json T = nullptr;
  if (cc.existence) {
    const double t_fine = solve_configured(c, pb, seed).best.T_estimate;
    // discretization error bar from the mesh of twice the size
    ProblemConfig coarse = c;
    coarse.domain.h = 2.0 * c.domain.h;
    const DiscreteTraceProblem pc = build_problem(coarse);
    const double t_coarse = solve_configured(coarse, pc, seed).best.T_estimate;
    const Estimate est{t_fine, std::abs(t_fine - t_coarse)};
    verdicts.push_back(existence_verdict(est, bar.value));
    T = {{"value", est.value}, {"error", est.error}, {"coarse", t_coarse}};
  }

  Outcome o;
  json arr = json::array();
  bool any_false = false, any_ind = false;
  for (const auto& v : verdicts) {
    arr.push_back(verdict_json(v));
    any_false = any_false || v.satisfied == Truth::False;
    any_ind = any_ind || v.satisfied == Truth::Indeterminate;
  }
  o.result = {{"verdicts", arr},
              {"skipped", skipped},
              {"bar_T",
               {{"value", bar.value.value},
                {"error", bar.value.error},
                {"argmin", bar.argmin ? point_json(*bar.argmin) : json(nullptr)},
                {"sampled_points", bar.sampled_points},
                {"notes", bar.notes}}},
              {"T", T},
              {"problem", problem_json(pb)}};
  o.exit_code = any_false ? 2 : (any_ind ? 3 : 0);
  std::string s;
  for (const auto& v : verdicts) s += (s.empty() ? "" : ", ") + v.name + "=" + to_string(v.satisfied);
  o.summary = s.empty() ? "no conditions evaluated" : s;
  return o;
}

Outcome cmd_expand(const ProblemConfig& c, const std::string& csv_path) {
  const auto& m = c.expand.model;
  QuadratureOptions q;
  q.truncation_R = c.truncation_R;
  const ExpansionInputs in = m.inputs();
  const ExpansionCoefficients co = expansion_coefficients(in, q);
  const NormExpansionFit fit = norm_expansion_check(m, co, c.expand.epsilons);
  json coeffs = {{"C0", optional_json(co.C0)}, {"A0", optional_json(co.A0)}, {"A1", optional_json(co.A1)},
                 {"D0", optional_json(co.D0)}, {"D1", optional_json(co.D1)}, {"D2", optional_json(co.D2)},
                 {"D3", optional_json(co.D3)}, {"D4", optional_json(co.D4)}};
  json rej = json::array();
  for (const auto& r : co.rejections)
    rej.push_back({{"coefficient", r.coefficient}, {"inequality", r.inequality}, {"divergent", r.divergent}});
  Outcome o;
  o.result = {{"model",
               {{"N", m.N},
                {"p0", m.p0},
                {"dtp", m.dtp},
                {"dttp", m.dttp},
                {"lap_y_p", m.lap_y_p},
                {"lap_r", m.lap_r},
                {"ball_radius", std::isfinite(m.ball_radius) ? json(m.ball_radius) : json("inf")},
                {"delta", m.delta},
                {"H", in.H},
                {"hbar", in.hbar}}},
              {"coefficients", coeffs},
              {"rejections", rej},
              {"tail_bound", co.tail_bound},
              {"fit",
               {{"epsilons", fit.epsilons},
                {"sobolev_norm", fit.sobolev_norm},
                {"boundary_norm", fit.boundary_norm},
                {"D0_root", fit.D0_root},
                {"A0_root", fit.A0_root},
                {"fitted_eps_log_eps", fit.fitted_eps_log_eps},
                {"predicted_eps_log_eps", fit.predicted_eps_log_eps},
                {"fitted_eps", fit.fitted_eps},
                {"predicted_eps", optional_json(fit.predicted_eps)},
                {"fitted_boundary", fit.fitted_boundary},
                {"predicted_boundary", optional_json(fit.predicted_boundary)},
                {"defects", fit.defects},
                {"residual", fit.residual}}}};
  if (!csv_path.empty()) {
    std::ostringstream csv;
    csv << "eps,sobolev_norm,boundary_norm\n";
    for (std::size_t i = 0; i < fit.epsilons.size(); ++i)
      csv << num(fit.epsilons[i]) << ',' << num(fit.sobolev_norm[i]) << ',' << num(fit.boundary_norm[i]) << '\n';
    write_text(csv_path, csv.str());
  }
  o.summary = "D0 = " + fixed(co.D0.value_or(0.0)) + ", fitted eps ln eps = " + fixed(fit.fitted_eps_log_eps, 6) +
              " (predicted " + fixed(fit.predicted_eps_log_eps, 6) + ")";
  return o;
}

bool is_input_error(const Error& e) {
  return dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
         dynamic_cast<const SyntaxError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
         dynamic_cast<const ExponentRangeError*>(&e) || dynamic_cast<const SupercriticalError*>(&e) ||
         dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const GammaNotEmpty*>(&e) ||
         dynamic_cast<const GeometryError*>(&e);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Variable-exponent Sobolev trace toolkit", "vtrace"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_path;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  app.add_option("--config", config_path, "Problem configuration file");
  app.add_option("--out", out_path, "Write the JSON report here instead of stdout");
  app.add_option("--seed", seed, "Seed for random initializations");
  app.add_option("--threads", threads, "Worker threads for quadrature and assembly")->check(CLI::PositiveNumber);

  // flag -> settings key
  std::vector<std::pair<CLI::Option*, std::string>> overrides;
  std::map<std::string, std::string> values;
  auto bind = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    overrides.emplace_back(sub->add_option(flag, values[key], help), key);
  };

  auto* norm = app.add_subcommand("norm", "Luxemburg norm of weighted samples");
  bind(norm, "--samples", "norm.samples", "CSV with x1..xN,weight,value[,g1..gN]");
  bind(norm, "--p", "norm.p", "Exponent expression in x1..xN");
  bind(norm, "--kind", "norm.kind", "lebesgue or sobolev");

  auto* constants = app.add_subcommand("constants", "Half-space trace constant and extremal quotient");
  bind(constants, "--N", "halfspace.N", "Dimension");
  bind(constants, "--p", "halfspace.p", "Exponent, 1 < p < N");
  bind(constants, "--truncation-R", "halfspace.truncation_R", "Quadrature box size");

  auto* solve = app.add_subcommand("solve", "Minimize the discrete trace quotient");
  bind(solve, "--init", "solver.init", "constant, random, bubble or multistart");
  bind(solve, "--max-iter", "solver.max_iter", "Iteration limit");
  bind(solve, "--tol", "solver.tol", "Relative decrease that stops the descent");
  bind(solve, "--radii", "solver.radii", "Concentration profile radii (comma separated)");
  bind(solve, "--mesh-size", "domain.h", "Mesh size");
  SolveFiles files;
  solve->add_option("--minimizer", files.minimizer, "Write the minimizer as x,y,value CSV");
  solve->add_option("--history", files.history, "Write iteration,quotient CSV");
  solve->add_option("--mesh", files.mesh, "Write PREFIX.node and PREFIX.ele");

  auto* conditions = app.add_subcommand("conditions", "Evaluate the existence conditions");
  bind(conditions, "--mesh-size", "domain.h", "Mesh size");

  auto* expand = app.add_subcommand("expand", "Expansion coefficients and test-function norm fit");
  bind(expand, "--N", "expand.N", "Dimension");
  bind(expand, "--p0", "expand.p0", "Exponent at the base point");
  bind(expand, "--dtp", "expand.dtp", "Normal derivative of p");
  bind(expand, "--ball-radius", "expand.ball_radius", "Model ball radius (inf for the half space)");
  bind(expand, "--eps", "expand.epsilons", "Scales (comma separated, decreasing)");
  std::string expand_csv;
  expand->add_option("--csv", expand_csv, "Write eps,sobolev_norm,boundary_norm CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    set_thread_count(threads);
    Settings settings = config_path.empty() ? Settings{} : read_settings_file(config_path);
    for (const auto& [opt, key] : overrides)
      if (opt->count() > 0) settings[key] = values[key];
    const ProblemConfig cfg = parse_config(settings);

    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    Settings hashed = settings;
    hashed["run.command"] = command;
    hashed["run.seed"] = std::to_string(seed);

    Outcome o;
    if (command == "norm")
      o = cmd_norm(cfg);
    else if (command == "constants")
      o = cmd_constants(cfg);
    else if (command == "solve")
      o = cmd_solve(cfg, seed, files);
    else if (command == "conditions")
      o = cmd_conditions(cfg, seed);
    else
      o = cmd_expand(cfg, expand_csv);

    const json report = {{"tool", "vtrace"},
                         {"version", version()},
                         {"schema_version", kSchemaVersion},
                         {"command", command},
                         {"config_hash", hash_hex(settings_hash(hashed))},
                         {"seed", seed},
                         {"result", o.result}};
    const std::string text = report.dump(2) + "\n";
    if (out_path.empty())
      out << text;
    else
      write_text(out_path, text);
    err << command << ": " << o.summary << "\n";
    return o.exit_code;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_input_error(e) ? 1 : 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace vtrace::cli
