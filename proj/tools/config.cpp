#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "vtrace/errors.hpp"

namespace vtrace::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

double to_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "infinity") return std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  if (pos != t.size()) throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

std::vector<double> to_numbers(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::string t = text;
  for (auto& ch : t)
    if (ch == ',') ch = ' ';
  std::istringstream in(t);
  std::string tok;
  while (in >> tok) out.push_back(to_number(key, tok));
  return out;
}

Point2 to_point(const std::string& key, const std::string& text) {
  const auto v = to_numbers(key, text);
  if (v.size() != 2) throw ConfigError(key + ": expected two coordinates, got '" + text + "'");
  return {v[0], v[1]};
}

std::vector<Point2> to_points(const std::string& key, const std::string& text) {
  std::vector<Point2> out;
  for (const auto& part : split(text, ';'))
    if (!part.empty()) out.push_back(to_point(key, part));
  return out;
}

class Reader {
 public:
  explicit Reader(const Settings& s) : s_(s) {}

  const std::string* raw(const std::string& key) {
    used_.insert(key);
    const auto it = s_.find(key);
    return it == s_.end() ? nullptr : &it->second;
  }
  void number(const std::string& key, double& out) {
    if (const auto* v = raw(key)) out = to_number(key, *v);
  }
  void positive(const std::string& key, double& out) {
    number(key, out);
    if (!(out > 0.0)) throw ConfigError(key + ": must be positive");
  }
  void integer(const std::string& key, int& out) {
    if (const auto* v = raw(key)) {
      const double d = to_number(key, *v);
      if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError(key + ": expected an integer");
      out = static_cast<int>(d);
    }
  }
  void text(const std::string& key, std::string& out) {
    if (const auto* v = raw(key)) out = trim(*v);
  }
  void flag(const std::string& key, bool& out) {
    if (const auto* v = raw(key)) {
      const std::string t = trim(*v);
      if (t == "true" || t == "yes" || t == "on" || t == "1")
        out = true;
      else if (t == "false" || t == "no" || t == "off" || t == "0")
        out = false;
      else
        throw ConfigError(key + ": expected true or false");
    }
  }
  void finish() const {
    for (const auto& [k, v] : s_)
      if (!used_.count(k)) throw ConfigError(k + ": unknown setting");
  }

 private:
  const Settings& s_;
  std::set<std::string> used_;
};

Arc parse_arc(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  std::string kind;
  in >> kind;
  std::string rest;
  std::getline(in, rest);
  const auto v = to_numbers(key, rest);
  if (kind == "segment") {
    if (v.size() != 4) throw ConfigError(key + ": segment needs x0 y0 x1 y1");
    return Arc::segment({v[0], v[1]}, {v[2], v[3]});
  }
  if (kind == "arc") {
    if (v.size() != 5) throw ConfigError(key + ": arc needs cx cy radius angle0 angle1");
    return Arc::circle({v[0], v[1]}, v[2], v[3], v[4]);
  }
  throw ConfigError(key + ": unknown arc kind '" + kind + "'");
}

RateFunction parse_phi(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  std::string kind;
  in >> kind;
  std::string rest;
  std::getline(in, rest);
  try {
    if (kind == "iterated_log") {
      const auto v = to_numbers(key, rest);
      if (v.empty() || v.size() > 2) throw ConfigError(key + ": iterated_log needs depth [c]");
      return RateFunction::iterated_log(static_cast<int>(v[0]), v.size() > 1 ? v[1] : 1.0);
    }
    if (kind == "log_power") {
      const auto v = to_numbers(key, rest);
      if (v.empty() || v.size() > 2) throw ConfigError(key + ": log_power needs a [c]");
      return RateFunction::log_power(v[0], v.size() > 1 ? v[1] : 1.0);
    }
    if (kind == "table") {
      std::vector<std::pair<double, double>> t;
      std::istringstream items(rest);
      std::string item;
      while (items >> item) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError(key + ": table entries are rho:phi");
        t.emplace_back(to_number(key, item.substr(0, colon)), to_number(key, item.substr(colon + 1)));
      }
      return RateFunction::custom(std::move(t));
    }
  } catch (const DomainError& e) {
    throw ConfigError(key + ": " + e.what());
  }
  throw ConfigError(key + ": unknown rate function '" + kind + "'");
}

}  // namespace

Settings read_settings(std::istream& in, const std::string& origin) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  Settings s;
  for (const auto& [section, body] : pt) {
    if (body.empty()) throw ConfigError(origin + ": setting '" + section + "' outside a section");
    for (const auto& [key, value] : body) s[section + "." + key] = trim(value.data());
  }
  return s;
}

Settings read_settings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return read_settings(in, path);
}

std::uint64_t settings_hash(const Settings& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const std::string& t) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [k, v] : s) feed(k + "=" + v + "\n");
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ProblemConfig parse_config(const Settings& s) {
  Reader r(s);
  ProblemConfig c;

  auto& d = c.domain;
  r.text("domain.shape", d.shape);
  if (const auto* v = r.raw("domain.center")) d.center = to_point("domain.center", *v);
  r.number("domain.radius", d.radius);
  if (const auto* v = r.raw("domain.vertices")) d.vertices = to_points("domain.vertices", *v);
  if (const auto* v = r.raw("domain.arcs"))
    for (const auto& part : split(*v, ';'))
      if (!part.empty()) d.arcs.push_back(parse_arc("domain.arcs", part));
  if (const auto* v = r.raw("domain.gamma"))
    for (double g : to_numbers("domain.gamma", *v)) {
      if (g != std::floor(g) || g < 0) throw ConfigError("domain.gamma: arc indices are nonnegative integers");
      d.gamma.push_back(static_cast<int>(g));
    }
  r.positive("domain.h", d.h);
  if (d.shape == "disk") {
    if (!(d.radius > 0.0)) throw ConfigError("domain.radius: must be positive");
  } else if (d.shape == "polygon") {
    if (d.vertices.size() < 3) throw ConfigError("domain.vertices: a polygon needs at least three vertices");
  } else if (d.shape == "arcs") {
    if (d.arcs.empty()) throw ConfigError("domain.arcs: no arcs given");
  } else {
    throw ConfigError("domain.shape: expected disk, polygon or arcs");
  }

  r.text("exponents.p_expr", c.p_expr);
  r.text("exponents.r_expr", c.r_expr);
  std::string reg = "C2";
  r.text("exponents.regularity", reg);
  if (reg == "C0")
    c.regularity = Regularity::C0;
  else if (reg == "C1")
    c.regularity = Regularity::C1;
  else if (reg == "C2")
    c.regularity = Regularity::C2;
  else
    throw ConfigError("exponents.regularity: expected C0, C1 or C2");
  r.positive("exponents.critical_tol", c.critical_tol);

  auto& so = c.solver;
  r.text("solver.init", so.init);
  if (so.init != "constant" && so.init != "random" && so.init != "bubble" && so.init != "multistart")
    throw ConfigError("solver.init: expected constant, random, bubble or multistart");
  if (const auto* v = r.raw("solver.bubble_x0")) so.bubble_x0 = to_point("solver.bubble_x0", *v);
  r.number("solver.bubble_lambda", so.bubble_lambda);
  r.integer("solver.max_iter", so.max_iter);
  if (so.max_iter < 0) throw ConfigError("solver.max_iter: must be nonnegative");
  r.positive("solver.tol", so.tol);
  if (const auto* v = r.raw("solver.radii")) so.radii = to_numbers("solver.radii", *v);
  for (double x : so.radii)
    if (!(x > 0.0)) throw ConfigError("solver.radii: radii must be positive");
  r.number("solver.threshold", so.threshold);
  r.integer("solver.max_bubbles", so.max_bubbles);
  if (so.init == "bubble" && !so.bubble_x0) throw ConfigError("solver.bubble_x0: required for bubble init");

  r.integer("halfspace.N", c.halfspace_N);
  r.number("halfspace.p", c.halfspace_p);
  r.positive("halfspace.truncation_R", c.truncation_R);

  auto& co = c.conditions;
  r.flag("conditions.global", co.global);
  r.flag("conditions.local", co.local);
  r.flag("conditions.existence", co.existence);
  r.flag("conditions.compactness", co.compactness);
  if (const auto* v = r.raw("conditions.local_x0")) co.local_x0 = to_point("conditions.local_x0", *v);
  if (const auto* v = r.raw("conditions.K_points")) co.K.points = to_points("conditions.K_points", *v);
  if (const auto* v = r.raw("conditions.K_arcs"))
    for (double g : to_numbers("conditions.K_arcs", *v)) co.K.arcs.push_back(static_cast<int>(g));
  r.number("conditions.s", co.s);
  r.number("conditions.C", co.C);
  r.number("conditions.r0", co.r0);
  if (const auto* v = r.raw("conditions.phi")) co.phi = parse_phi("conditions.phi", *v);
  r.integer("conditions.bar_T_points", co.bar_T_points);

  r.text("norm.samples", c.norm.samples);
  r.text("norm.p", c.norm.p);
  r.text("norm.kind", c.norm.kind);
  if (c.norm.kind != "lebesgue" && c.norm.kind != "sobolev") throw ConfigError("norm.kind: expected lebesgue or sobolev");

  auto& m = c.expand.model;
  r.integer("expand.N", m.N);
  r.number("expand.p0", m.p0);
  r.number("expand.dtp", m.dtp);
  r.number("expand.dttp", m.dttp);
  r.number("expand.lap_y_p", m.lap_y_p);
  r.number("expand.lap_r", m.lap_r);
  r.positive("expand.ball_radius", m.ball_radius);
  r.positive("expand.delta", m.delta);
  if (const auto* v = r.raw("expand.epsilons")) c.expand.epsilons = to_numbers("expand.epsilons", *v);

  r.finish();
  return c;
}

PlanarDomain build_domain(const DomainConfig& d) {
  try {
    if (d.shape == "disk") return PlanarDomain::mesh_domain(Boundary::disk(d.center, d.radius), d.h, d.gamma);
    if (d.shape == "polygon") return PlanarDomain::mesh_domain(Boundary::polygon(d.vertices), d.h, d.gamma);
    return PlanarDomain::mesh_domain(Boundary(d.arcs), d.h, d.gamma);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("domain: ") + e.what());
  } catch (const GeometryError& e) {
    throw ConfigError(std::string("domain: ") + e.what());
  }
}

DiscreteTraceProblem build_problem(const ProblemConfig& c, PlanarDomain domain) {
  auto field = [&](const char* key, const std::string& text) {
    try {
      return ExponentField::parse(text, 2, c.regularity);
    } catch (const SyntaxError& e) {
      throw ConfigError(std::string(key) + ": " + e.what());
    }
  };
  ExponentField p = field("exponents.p_expr", c.p_expr);
  ExponentField r = field("exponents.r_expr", c.r_expr);
  return DiscreteTraceProblem(std::move(domain), std::move(p), std::move(r), c.critical_tol);
}

DiscreteTraceProblem build_problem(const ProblemConfig& c) { return build_problem(c, build_domain(c.domain)); }

}  // namespace vtrace::cli
