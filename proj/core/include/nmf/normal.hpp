#pragma once

#include <vector>

namespace nmf {

/// Standard normal CDF.
double normal_cdf(double x);
/// Standard normal quantile; t must lie in (0, 1).
double normal_quantile(double t);
double normal_pdf(double x);

/// Quadrature rule: nodes and weights, weights summing to one for
/// probability rules.
struct NodeSet {
  std::vector<double> x;
  std::vector<double> w;

  std::size_t size() const { return x.size(); }
};

/// n-point Gauss-Hermite rule for expectations under N(0, 1).
NodeSet gauss_hermite_normal(int n);

}  // namespace nmf
