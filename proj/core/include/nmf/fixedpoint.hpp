#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nmf/channel.hpp"

namespace nmf {

/// phi(b, tau) with the inner minimum evaluated at the prox point.
double phi(const ScalarModel& model, double b, double tau);

struct FpStep {
  double b_next;
  double tau_next;
  /// b from the E[Z eta] form of the second equation
  double b_next_alt;
  /// E[(eta - B)^2]
  double sq_error;
  /// E[eta']
  double mean_eta_prime;
};

/// One application of the fixed-point map. Throws NonPositiveB when the
/// b-update is not positive.
FpStep fp_step(const ScalarModel& model, double b, double tau);

/// min over tau in [sigma, tau_max] of phi(b, tau).
struct PsiValue {
  double value;
  double tau;
};
PsiValue psi(const ScalarModel& model, double b);
/// Local search for the minimizer starting from `tau_hint`; assumes phi(b, .) is unimodal near it.
PsiValue psi(const ScalarModel& model, double b, double tau_hint);
double tau_max(const ProblemSpec& problem);

struct Iterate {
  double b;
  double tau;
};

struct SolveOptions {
  double damping = 0.5;
  double tol = 1e-9;
  int max_iter = 500;
  std::vector<Iterate> inits;  // empty: defaults scaled by sigma

  void validate() const;
};

std::vector<Iterate> default_inits(double sigma);

struct StartRecord {
  Iterate init;
  bool converged = false;
  int iterations = 0;
  Iterate final{0.0, 0.0};
  double psi = 0.0;
  std::string failure;
  std::vector<Iterate> trace;
};

struct FixedPointSolution {
  double b_star = 0.0;
  double tau_star = 0.0;
  double kappa_star = 0.0;
  double phi_value = 0.0;
  double residual_tau = 0.0;
  double residual_b = 0.0;
  /// b from the E[Z eta] form minus b_star
  double residual_b_alt = 0.0;
  int iterations = 0;
  bool converged = false;
  Iterate init_used{0.0, 0.0};
  bool multi_start_agreement = false;
  int starts_converged = 0;
  int starts_failed = 0;
  std::vector<StartRecord> starts;
};

/// Raised by solve when no start converges; carries every start's trace.
class FixedPointNoConvergence : public NoConvergence {
 public:
  FixedPointNoConvergence(const std::string& what, std::vector<StartRecord> starts)
      : NoConvergence(what), starts_(std::move(starts)) {}
  const std::vector<StartRecord>& starts() const { return starts_; }

 private:
  std::vector<StartRecord> starts_;
};

/// Damped iteration from every init; picks the converged candidate with the
/// largest psi. Throws NoConvergence (message lists each start) if none converge.
FixedPointSolution solve(const ScalarModel& model, const SolveOptions& opts = {});

struct Diagnostics {
  double grad_b = 0.0;
  double grad_tau = 0.0;
  double max_second_difference = 0.0;
  double dphi_dtau_at_sigma = 0.0;
  bool stationary = false;
  bool psi_concave = false;
  bool tau_edge_negative = false;
  bool ok() const { return stationary && psi_concave && tau_edge_negative; }
};

Diagnostics diagnose(const ScalarModel& model, double b, double tau);
/// Throws VerificationFailed naming the failed checks.
Diagnostics verify(const ScalarModel& model, const FixedPointSolution& sol);

}  // namespace nmf
