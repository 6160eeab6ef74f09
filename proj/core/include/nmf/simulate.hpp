#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nmf/predictions.hpp"

namespace nmf {

enum class Design { GaussianIID, LaplaceIID };

const char* to_string(Design d);
Design design_from_string(const std::string& s);

struct OptimizerOptions {
  double grad_tol = 1e-8;
  int max_iter = 5000;
  double armijo_c = 1e-4;
  double shrink = 0.5;
};

struct SimConfig {
  std::size_t n = 4000;
  std::size_t p = 2000;
  std::uint64_t seed = 1;
  Design design = Design::GaussianIID;
  int replicates = 1;
  OptimizerOptions optimizer;
  std::vector<double> zeta_list{0.05};
  /// channel draws compared against each replicate's empirical joint law
  std::size_t channel_samples = 100000;
  int projections = 128;
  /// exact -(1/p) log Z_p for Gaussian priors, O(p^3)
  bool exact_evidence = true;

  void validate() const;
};

struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd beta_star;
  Eigen::VectorXd epsilon;
  /// (X^T X)_ii / sigma2
  Eigen::VectorXd d;
};

/// beta* iid from the truth, then X (entry variance 1/n), then noise.
Dataset gen_data(const ProblemSpec& problem, const SimConfig& cfg);
Dataset gen_data(const ProblemSpec& problem, const SimConfig& cfg, std::uint64_t seed);

/// Writes "NMFD1", u32 n, u32 p, then X (row-major), y, beta_star as little-endian f64.
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path, double sigma2);

/// M_p(u) = |y - Xu|^2/(2 sigma2) + sum_i [G(u_i, d_i) - d_i u_i^2/2].
class NmfObjective {
 public:
  NmfObjective(const ProblemSpec& problem, const Dataset& ds);

  struct Value {
    double value;
    Eigen::VectorXd gradient;
  };
  /// Throws OutOfSupport if some u_i is not interior to the prior support.
  Value operator()(const Eigen::VectorXd& u) const;
  /// +inf instead of throwing.
  double value_or_inf(const Eigen::VectorXd& u) const;
  /// sum_i c(0, d_i)
  double sum_c0() const { return c0_.sum(); }

 private:
  const ProblemSpec& problem_;
  const Dataset& ds_;
  Eigen::VectorXd c0_;
};

NmfObjective::Value nmf_objective(const ProblemSpec& problem, const Dataset& ds, const Eigen::VectorXd& u);

struct MinimizeResult {
  Eigen::VectorXd u;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// accepted steps that raised M_p beyond round-off
  int objective_increases = 0;
  double lipschitz_estimate = 0.0;
};

/// Gradient descent with Armijo backtracking from u = 0.
MinimizeResult minimize_nmf(const ProblemSpec& problem, const Dataset& ds, const OptimizerOptions& opts);

/// Squared 1-D Wasserstein-2 distance between two empirical measures.
double w2_squared_1d(std::vector<double> a, std::vector<double> b);

/// Average over random unit directions of the squared 1-D W2 between
/// projections of the point sets (ax, ay) and (bx, by).
double w2_sliced(const std::vector<double>& ax, const std::vector<double>& ay,
                 const std::vector<double>& bx, const std::vector<double>& by, int projections,
                 std::uint64_t seed);

/// Exact -(1/p) log Z_p under a N(0, delta2) prior.
double exact_logz_gaussian(const Dataset& ds, double delta2, double sigma2);
/// Throws NotGaussianPrior for other priors.
double exact_logz_gaussian(const Dataset& ds, const PriorSpec& prior, double sigma2);

struct SimResult {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t p = 0;
  Eigen::VectorXd u_hat;
  double mse_emp = 0.0;
  double neg_log_z_nmf_per_p = 0.0;
  std::optional<double> neg_log_z_exact_per_p;
  std::vector<double> zeta_list;
  std::vector<double> coverage_emp;
  std::vector<double> coverage_corrected_emp;
  double w2_sliced = 0.0;
  double w2_marginal = 0.0;
  double d_max_deviation = 0.0;
  double grad_norm_final = 0.0;
  int iterations = 0;
  bool converged = false;
  int objective_increases = 0;
};

SimResult empirical_metrics(const ScalarModel& model, const Dataset& ds, const MinimizeResult& fit,
                            const FixedPointSolution& sol, const SimConfig& cfg,
                            const ChannelSample& channel);

/// Replicate r uses seed cfg.seed + r. The channel sample is drawn once with
/// seed cfg.seed.
std::vector<SimResult> run_replicates(const ScalarModel& model, const FixedPointSolution& sol,
                                      const SimConfig& cfg);

}  // namespace nmf
