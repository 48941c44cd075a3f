#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "config.hpp"
#include "json.hpp"
#include "vtrace/errors.hpp"

namespace vtrace::cli {
namespace {

const std::string kData = VTRACE_TEST_DATA_DIR;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "vtrace");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

TEST(Settings, ParsesSectionsAndComments) {
  std::istringstream in(
      "# comment\n; another\n[domain]\nshape = disk\nvertices = 0 0; 1 0; 0 1\nradius = 2\n\n[exponents]\np = 1.4 + 0.1*x1\n");
  const auto s = read_settings(in, "test");
  EXPECT_EQ(s.at("domain.shape"), "disk");
  EXPECT_EQ(s.at("domain.vertices"), "0 0; 1 0; 0 1");  // ';' inside a value is not a comment
  EXPECT_EQ(s.at("domain.radius"), "2");
  EXPECT_EQ(s.at("exponents.p"), "1.4 + 0.1*x1");
}

TEST(Settings, DuplicateKeyRejected) {
  std::istringstream in("[domain]\nradius = 1\nradius = 2\n");
  EXPECT_THROW(read_settings(in, "test"), ConfigError);
}

TEST(Settings, HashIsOrderFree) {
  Settings a{{"domain.radius", "1"}, {"exponents.p", "1.5"}};
  Settings b{{"exponents.p", "1.5"}, {"domain.radius", "1"}};
  EXPECT_EQ(settings_hash(a), settings_hash(b));
  b["exponents.p"] = "1.6";
  EXPECT_NE(settings_hash(a), settings_hash(b));
  EXPECT_EQ(hash_hex(0xabcull).size(), 16u);
}

TEST(Config, TypedViewAndErrors) {
  const auto c = parse_config({{"domain.shape", "polygon"},
                               {"domain.vertices", "0 0; 2 0; 2 1; 0 1"},
                               {"domain.gamma", "0"},
                               {"conditions.phi", "log_power 0.5 2"},
                               {"solver.radii", "0.1, 0.2"}});
  EXPECT_EQ(c.domain.vertices.size(), 4u);
  EXPECT_EQ(c.domain.gamma, std::vector<int>{0});
  EXPECT_EQ(c.conditions.phi.kind, RateFunction::Kind::LogPower);
  EXPECT_EQ(c.solver.radii.size(), 2u);
  EXPECT_NEAR(build_domain(c.domain).boundary().area(), 2.0, 1e-14);
  const auto half = parse_config({{"domain.shape", "arcs"},
                                  {"domain.arcs", "arc 0 0 1 0 3.141592653589793; segment -1 0 1 0"}});
  EXPECT_NEAR(build_domain(half.domain).boundary().area(), 3.141592653589793 / 2, 1e-12);
  EXPECT_THROW(parse_config({{"domain.shape", "arcs"}, {"domain.arcs", "spline 0 0 1 1"}}), ConfigError);
  EXPECT_THROW(parse_config({{"domain.radiuss", "1"}}), ConfigError);
  EXPECT_THROW(parse_config({{"domain.radius", "abc"}}), ConfigError);
  EXPECT_THROW(parse_config({{"solver.init", "magic"}}), ConfigError);
}

TEST(Cli, NormEnvelope) {
  const auto r = invoke({"norm", "--samples", kData + "/golden_ratio.csv", "--p", "2+2*x1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["tool"], "vtrace");
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["command"], "norm");
  EXPECT_EQ(j["config_hash"].get<std::string>().size(), 16u);
  EXPECT_NEAR(j["result"]["norm"].get<double>(), 1.2720196495140688, 1e-10);
  EXPECT_TRUE(j["result"]["relations_hold"].get<bool>());
}

TEST(Cli, ConstantsReportsFormulaNote) {
  const auto r = invoke({"constants", "--N", "3", "--p", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["result"]["K_inv"].get<double>(), 1.3313354, 1e-2);
  EXPECT_FALSE(j["result"]["note"].get<std::string>().empty());
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(invoke({"constants", "--N", "3", "--p", "5"}).code, 1);
  EXPECT_EQ(invoke({"--config", "/nonexistent.ini", "solve"}).code, 1);
  EXPECT_EQ(invoke({"frobnicate"}).code, 1);
  EXPECT_EQ(invoke({"norm", "--samples", kData + "/golden_ratio.csv", "--p", "2+"}).code, 1);
}

TEST(Cli, SolveIsReproducible) {
  const std::vector<std::string> args{"--config", kData + "/square_mixed.ini", "--seed", "3", "solve",
                                      "--max-iter", "15"};
  const auto a = invoke(args);
  ASSERT_EQ(a.code, 0) << a.err;
  auto threaded = args;
  threaded.insert(threaded.begin(), {"--threads", "4"});
  const auto b = invoke(threaded);
  EXPECT_EQ(a.out, b.out);
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_EQ(j["seed"], 3);
  EXPECT_GT(j["result"]["T_estimate"].get<double>(), 0.0);
  auto other = args;
  other[3] = "4";
  EXPECT_NE(nlohmann::json::parse(invoke(other).out)["config_hash"], j["config_hash"]);
}

}  // namespace
}  // namespace vtrace::cli
