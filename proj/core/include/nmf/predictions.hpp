#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nmf/fixedpoint.hpp"

namespace nmf {

/// alpha (tau*^2 - sigma2). Throws VerificationFailed if E[(eta - B)^2]
/// disagrees by more than 1e-8.
double predict_mse(const ScalarModel& model, const FixedPointSolution& sol);

/// Limit of -(1/p) log Z^NMF.
double predict_neg_log_z(const ScalarModel& model, const FixedPointSolution& sol);

/// Limit of the average coverage of the level 1 - zeta mean-field credible
/// intervals (closed intervals).
double predict_coverage(const ScalarModel& model, const FixedPointSolution& sol, double zeta);

/// t-th quantile of B given eta(tau* Z + B, kappa*) = x.
double conditional_quantile(const ScalarModel& model, const FixedPointSolution& sol, double t, double x);

std::pair<double, double> corrected_interval(const ScalarModel& model, const FixedPointSolution& sol,
                                             double zeta, double x);

/// Coverage of the corrected intervals under the limit law.
double corrected_coverage(const ScalarModel& model, const FixedPointSolution& sol, double zeta);

struct Predictions {
  double mse = 0.0;
  double neg_log_z_per_p = 0.0;
  std::vector<double> zeta_list;
  /// coverage[k] belongs to zeta_list[k]
  std::vector<double> coverage;
  std::vector<double> corrected_coverage;
  std::vector<std::string> warnings;

  double coverage_at(double zeta) const;
};

Predictions predict(const ScalarModel& model, const FixedPointSolution& sol,
                    const std::vector<double>& zetas);

/// q,delta2,alpha,sigma2,b_star,tau_star,mse,neg_log_z,coverage_95
std::string predictions_csv_header();
std::string predictions_csv_row(const ScalarModel& model, const FixedPointSolution& sol,
                                const Predictions& pred);

}  // namespace nmf
