#pragma once

#include "nmf/meanfield.hpp"

namespace nmf {

struct ProxPoint {
  /// eta(x, t)
  double w = 0.0;
  /// h(w, 1/sigma2), the tilt whose mean is w
  double natural = 0.0;
  /// variance of that tilt
  double variance = 0.0;
  /// (w - x)/t + F'(w)
  double residual = 0.0;
  int iterations = 0;
};

/// Minimizer of (w - x)^2/(2t) + F(w). Throws NotConvexCertified when the
/// penalty is not certified and NoConvergence after 200 iterations.
ProxPoint prox(const Penalty& penalty, double x, double t);

double eta(const Penalty& penalty, double x, double t);
/// d eta / dx = 1 / (1 + t F''(eta)).
double eta_prime(const Penalty& penalty, double x, double t);
/// The x with eta(x, t) = w, for w interior to the support.
double eta_inverse(const Penalty& penalty, double w, double t);

/// Convenience overloads; these certify convexity on every call.
double eta(const PriorSpec& prior, double sigma2, double x, double t);
double eta_prime(const PriorSpec& prior, double sigma2, double x, double t);

}  // namespace nmf
