#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "random_samples.hpp"
#include "vtrace/errors.hpp"
#include "vtrace/luxemburg.hpp"

namespace vtrace {
namespace {

WeightedSamples two_atoms(double v0, double v1) {
  WeightedSamples s;
  s.dimension = 1;
  s.points = {0.0, 1.0};
  s.weights = {1.0, 1.0};
  s.values = {v0, v1};
  return s;
}

TEST(Luxemburg, ConstantExponentIsLebesgueNorm) {
  auto s = two_atoms(1.0, 2.0);
  s.weights = {0.5, 2.0};
  const auto p = ExponentField::constant(3.0, 1);
  EXPECT_NEAR(luxemburg_norm(s, p, ModularKind::Lebesgue), std::cbrt(0.5 + 16.0), 1e-13);
}

TEST(Luxemburg, GoldenRatio) {
  // 1/l^2 + 1/l^4 = 1  =>  l^-2 = (sqrt5 - 1)/2
  const auto s = two_atoms(1.0, 1.0);
  const auto p = ExponentField::parse("2 + 2*x1", 1);
  const double expect = std::pow((std::sqrt(5.0) - 1.0) / 2.0, -0.5);
  EXPECT_NEAR(luxemburg_norm(s, p, ModularKind::Lebesgue), expect, 1e-13);
}

TEST(Luxemburg, Homogeneity) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const auto u = testing::random_samples(rng, 30);
    const auto p = testing::random_exponent(rng, 1.1, 4.0);
    const double n = luxemburg_norm(u, p, ModularKind::Lebesgue);
    for (double c : {-3.0, 0.01, 7.5}) {
      EXPECT_NEAR(luxemburg_norm(u.scaled(c), p, ModularKind::Lebesgue), std::abs(c) * n, 1e-11 * std::abs(c) * n);
    }
  }
}

TEST(Luxemburg, ModularAtNormIsOne) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    const auto u = testing::random_samples(rng, 25);
    const auto p = testing::random_exponent(rng, 1.1, 4.0);
    for (auto kind : {ModularKind::Lebesgue, ModularKind::Sobolev}) {
      const auto atoms = make_atoms(u, p, kind);
      const auto res = atom_norm(atoms.view());
      EXPECT_NEAR(atom_modular(atoms.view(), res.norm), 1.0, 1e-12);
    }
  }
}

TEST(Luxemburg, ZeroFunction) {
  const auto s = two_atoms(0.0, 0.0);
  EXPECT_EQ(luxemburg_norm(s, ExponentField::constant(2.0, 1), ModularKind::Lebesgue), 0.0);
}

TEST(Luxemburg, SobolevBetweenSplitNorms) {
  // modular-based norm <= split norm <= 2 * modular-based norm
  std::mt19937_64 rng(5);
  for (int k = 0; k < 30; ++k) {
    const auto u = testing::random_samples(rng, 20);
    const auto p = testing::random_exponent(rng, 1.1, 4.0);
    const double joint = luxemburg_norm(u, p, ModularKind::Sobolev);
    const double split = split_sobolev_norm(u, p);
    EXPECT_LE(joint, split * (1 + 1e-12));
    EXPECT_LE(split, 2.0 * joint * (1 + 1e-12));
  }
}

TEST(Luxemburg, NormModularRelations) {
  std::mt19937_64 rng(19);
  for (int k = 0; k < 100; ++k) {
    const auto u = testing::random_samples(rng, 15);
    const auto p = testing::random_exponent(rng, 1.1, 4.0);
    const auto rep = verify_norm_modular_relations(u, p);
    EXPECT_TRUE(rep.all_hold()) << "case " << k;
  }
}

TEST(Luxemburg, HolderRejectsSBelowOne) {
  auto f = two_atoms(1.0, 2.0);
  auto g = two_atoms(3.0, 1.0);
  const auto p = ExponentField::constant(1.5, 1);
  EXPECT_THROW(holder_product_bound(f, g, p, p), ExponentMismatch);
  const auto q = ExponentField::constant(6.0, 1);
  const auto b = holder_product_bound(f, g, ExponentField::constant(2.0, 1), q);
  EXPECT_LE(b.lhs, b.rhs);
}

TEST(Luxemburg, Errors) {
  auto s = two_atoms(1.0, 1.0);
  s.weights[1] = 0.0;
  EXPECT_THROW(s.validate(), FormatError);
  auto t = two_atoms(1.0, 1.0);
  EXPECT_THROW(luxemburg_norm(t, ExponentField::constant(2.0, 1), ModularKind::Sobolev), MissingGradient);
  EXPECT_THROW(luxemburg_norm(t, ExponentField::constant(2.0, 2), ModularKind::Lebesgue), DimensionError);
}

TEST(Luxemburg, CsvRoundTrip) {
  std::mt19937_64 rng(2);
  const auto u = testing::random_samples(rng, 12);
  std::stringstream ss;
  write_samples_csv(ss, u);
  const auto back = read_samples_csv(ss);
  EXPECT_EQ(back.points, u.points);
  EXPECT_EQ(back.weights, u.weights);
  EXPECT_EQ(back.values, u.values);
  ASSERT_TRUE(back.gradients);
  EXPECT_EQ(*back.gradients, *u.gradients);
}

TEST(Luxemburg, CsvFixtureAndErrors) {
  const auto s = read_samples_csv_file(std::string(VTRACE_TEST_DATA_DIR) + "/golden_ratio.csv");
  EXPECT_EQ(s.size(), 2u);
  std::stringstream bad("x1,weight,value\n0,1\n");
  EXPECT_THROW(read_samples_csv(bad), FormatError);
  std::stringstream header("a,b\n");
  EXPECT_THROW(read_samples_csv(header), FormatError);
  std::stringstream number("x1,weight,value\n0,1,abc\n");
  EXPECT_THROW(read_samples_csv(number), FormatError);
}

}  // namespace
}  // namespace vtrace
