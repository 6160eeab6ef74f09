#pragma once

#include <memory>
#include <string>

#include "nmf/priors.hpp"

namespace nmf {

/// Fitted prior, true law of the coefficients, noise variance and n/p.
class ProblemSpec {
 public:
  ProblemSpec(PriorSpec prior, PriorSpec truth, double sigma2, double alpha);

  const PriorSpec& prior() const { return prior_; }
  const PriorSpec& truth() const { return truth_; }
  double sigma2() const { return sigma2_; }
  double sigma() const;
  double alpha() const { return alpha_; }
  /// E[B^2] under the truth.
  double s2() const { return s2_; }

 private:
  PriorSpec prior_;
  PriorSpec truth_;
  double sigma2_;
  double alpha_;
  double s2_;
};

enum class Certificate { NicePrior, DiscreteGHS, LowSNR, SpikeSlabCondition, NumericalSweep, Failed };

const char* to_string(Certificate c);
Certificate certificate_from_string(const std::string& s);

struct ConvexityReport {
  bool certified = false;
  Certificate certificate = Certificate::Failed;
  double min_F_second = 0.0;
  std::string sweep_grid;
  /// Value of the sufficient condition that was tried, when it has one.
  double condition_value = 0.0;
};

/// KL divergence between the mean-u tilt and the (0, d) tilt.
/// +inf at a boundary point carrying no atom.
double G(const PriorSpec& prior, double u, double d);

double F(const PriorSpec& prior, double sigma2, double u);
double F_prime(const PriorSpec& prior, double sigma2, double u);
double F_second(const PriorSpec& prior, double sigma2, double u);

/// (1 + 2q/(1-q) sqrt(1 + delta2/sigma2)) delta2 / (sigma2 + delta2).
double spike_slab_condition_lhs(const GaussianSpikeSlab& p, double sigma2);

struct MaxVariance {
  double gamma1;
  double variance;
};
/// sup over gamma1 in [0, 50] of the variance of the (gamma1, 1/sigma2) tilt.
MaxVariance spike_slab_max_tilted_variance(const GaussianSpikeSlab& p, double sigma2);

/// Smallest F'' over the sweep grid used by check_convexity.
double sweep_min_F_second(const PriorSpec& prior, double sigma2, std::string* grid_description = nullptr);

ConvexityReport check_convexity(const PriorSpec& prior, double sigma2);

namespace detail {
class TiltTable;
}

/// F for a fixed (prior, sigma2) with c(0, 1/sigma2) cached. Grid priors also
/// cache their (g, 1/sigma2) tilts on a table.
class Penalty {
 public:
  Penalty(PriorSpec prior, double sigma2);
  Penalty(PriorSpec prior, double sigma2, ConvexityReport report);

  const PriorSpec& prior() const { return prior_; }
  double sigma2() const { return sigma2_; }
  /// 1 / sigma2, the second tilt coordinate of F.
  double precision() const { return d_; }
  double c0() const { return c0_; }
  const ConvexityReport& report() const { return report_; }
  /// Throws NotConvexCertified unless the report certifies.
  void require_certified() const;

  double value(double u) const;
  double prime(double u) const;
  double second(double u) const;
  /// F(u) when the natural parameter g = h(u, 1/sigma2) is already known.
  double value_from_natural(double u, double g) const;
  /// Moments of the (g, 1/sigma2) tilt.
  TiltedMoments tilt(double g) const;
  /// h(u, 1/sigma2).
  double natural(double u) const;

 private:
  PriorSpec prior_;
  double sigma2_;
  double d_;
  double c0_;
  ConvexityReport report_;
  std::shared_ptr<const detail::TiltTable> table_;
};

}  // namespace nmf
