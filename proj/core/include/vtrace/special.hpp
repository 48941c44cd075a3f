#pragma once

#include <vector>

namespace vtrace {

/// Surface area of the unit sphere S^k in R^{k+1}; |S^0| = 2.
double sphere_area(int k);

/// Euler Beta function via log-Gamma.
double beta_function(double a, double b);

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1]; cached per n.
const GaussRule& gauss_legendre(int n);

}  // namespace vtrace
