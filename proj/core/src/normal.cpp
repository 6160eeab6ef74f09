#include "nmf/normal.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>

#include "nmf/errors.hpp"

namespace nmf {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_quantile(double t) {
  if (!(t > 0.0 && t < 1.0)) {
    throw InvalidArgument("normal_quantile: probability must lie in (0,1)");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * t);
}

// Roots of the physicists' Hermite polynomial by Newton iteration on the
// orthonormal three-term recurrence, then rescaled to N(0, 1).
NodeSet gauss_hermite_normal(int n) {
  if (n < 1) throw InvalidArgument("gauss_hermite_normal: n must be positive");
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  std::vector<double> x(n), w(n);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 0.0;
    int it = 0;
    for (; it < 100; ++it) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    if (it == 100) throw NoConvergence("gauss_hermite_normal: Newton failed");
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  NodeSet rule;
  rule.x.resize(n);
  rule.w.resize(n);
  // ascending order, exact zero at the centre for odd n
  for (int i = 0; i < n; ++i) {
    rule.x[i] = std::numbers::sqrt2 * x[n - 1 - i];
    rule.w[i] = w[n - 1 - i] / std::sqrt(std::numbers::pi);
  }
  if (n % 2 == 1) rule.x[n / 2] = 0.0;
  return rule;
}

}  // namespace nmf
