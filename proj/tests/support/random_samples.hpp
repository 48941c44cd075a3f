#pragma once

// Random fixtures shared by the property tests and the acceptance runner.

#include <cmath>
#include <random>
#include <string>

#include "vtrace/exponents.hpp"
#include "vtrace/luxemburg.hpp"

namespace vtrace::testing {

/// n atoms on [0,1]^2 with weights in (0.05, 1], values spread over a few
/// decades (some zero) and gradients.
inline WeightedSamples random_samples(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  WeightedSamples s;
  s.dimension = 2;
  s.gradients.emplace();
  const double scale = std::pow(10.0, 4.0 * U(rng) - 2.0);
  for (int i = 0; i < n; ++i) {
    s.points.push_back(U(rng));
    s.points.push_back(U(rng));
    s.weights.push_back(0.05 + 0.95 * U(rng));
    s.values.push_back(U(rng) < 0.1 ? 0.0 : scale * (2.0 * U(rng) - 1.0));
    s.gradients->push_back(scale * (2.0 * U(rng) - 1.0));
    s.gradients->push_back(scale * (2.0 * U(rng) - 1.0));
  }
  return s;
}

/// Smooth exponent a + b*x1 + c*x2 (+ a bounded oscillation) with range
/// inside [lo, hi].
inline ExponentField random_exponent(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double a = lo + (hi - lo) * U(rng);
  const double b = lo + (hi - lo) * U(rng);
  if (U(rng) < 0.2) return ExponentField::constant(a, 2);
  const double mid = 0.5 * (a + b);
  const double amp = 0.5 * std::abs(b - a);
  // mid + amp*sin-like profile through a bounded rational
  const std::string text = std::to_string(mid) + " + " + std::to_string(amp) + "*(x1 - x2)/(1 + (x1 - x2)^2)*2";
  return ExponentField::parse(text, 2);
}

}  // namespace vtrace::testing
