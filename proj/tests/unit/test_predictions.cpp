#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "nmf/errors.hpp"
#include "nmf/predictions.hpp"

using nmf::PriorSpec;

namespace {

struct Solved {
  nmf::ScalarModel model;
  nmf::FixedPointSolution sol;
};

Solved solved(const PriorSpec& prior, const PriorSpec& truth, double sigma2, double alpha) {
  nmf::ScalarModel m(nmf::ProblemSpec(prior, truth, sigma2, alpha));
  auto sol = nmf::solve(m);
  return {std::move(m), std::move(sol)};
}

Solved ridge() { return solved(PriorSpec::gaussian(1.0), PriorSpec::gaussian(1.0), 1.0, 2.0); }

Solved spike_slab() {
  const PriorSpec p = PriorSpec::spike_slab(0.5, 0.2);
  return solved(p, p, 1.0, 2.0);
}

// 1.95996 * sqrt(kappa / (1 + kappa)) with tau^2 = kappa
const double kRidgeHalfWidth = 1.4687348317685114;

}  // namespace

TEST(Predictions, RidgeClosedForms) {
  const auto r = ridge();
  EXPECT_NEAR(nmf::predict_mse(r.model, r.sol), 0.5615528128088298, 1e-7);
  EXPECT_NEAR(nmf::predict_neg_log_z(r.model, r.sol), 1.3465735902799725, 1e-7);
  EXPECT_NEAR(nmf::predict_coverage(r.model, r.sol, 0.05), 0.9356041865066125, 1e-6);
}

TEST(Predictions, CoverageExtremes) {
  const auto r = ridge();
  EXPECT_LE(nmf::predict_coverage(r.model, r.sol, 0.999), 0.05);
  EXPECT_GE(nmf::predict_coverage(r.model, r.sol, 1e-6), 0.999);
  EXPECT_THROW(nmf::predict_coverage(r.model, r.sol, 0.0), nmf::InvalidArgument);
}

TEST(Predictions, RidgeConditionalQuantiles) {
  const auto r = ridge();
  for (double x : {-1.0, 0.3, 2.0}) EXPECT_NEAR(nmf::conditional_quantile(r.model, r.sol, 0.5, x), x, 1e-7);
  EXPECT_NEAR(nmf::conditional_quantile(r.model, r.sol, 0.975, 0.0), kRidgeHalfWidth, 1e-6);
  const auto iv = nmf::corrected_interval(r.model, r.sol, 0.05, 0.0);
  EXPECT_NEAR(iv.first, -kRidgeHalfWidth, 1e-6);
  EXPECT_NEAR(iv.second, kRidgeHalfWidth, 1e-6);
  EXPECT_NEAR(nmf::corrected_coverage(r.model, r.sol, 0.05), 0.95, 1e-6);
}

TEST(Predictions, CorrectedIntervalsNest) {
  const auto s = spike_slab();
  for (double x : {0.0, 0.4, 1.5}) {
    const auto wide = nmf::corrected_interval(s.model, s.sol, 0.01, x);
    const auto narrow = nmf::corrected_interval(s.model, s.sol, 0.2, x);
    EXPECT_LE(wide.first, narrow.first);
    EXPECT_GE(wide.second, narrow.second);
  }
  EXPECT_EQ(nmf::conditional_quantile(s.model, s.sol, 0.5, 0.0), 0.0);
  const auto small = nmf::corrected_interval(s.model, s.sol, 0.05, 0.05);
  EXPECT_LE(small.first, 0.0);
  EXPECT_GE(small.second, 0.0);
}

TEST(Predictions, SpikeSlabMatchesOracle) {
  // independent dense-grid evaluation of the same limits
  const auto s = spike_slab();
  EXPECT_NEAR(nmf::predict_mse(s.model, s.sol), 0.09119053959, 1e-7);
  EXPECT_NEAR(nmf::predict_neg_log_z(s.model, s.sol), 1.04763785816, 1e-7);
  EXPECT_NEAR(nmf::predict_coverage(s.model, s.sol, 0.05), 0.94928946, 1e-5);
  EXPECT_NEAR(nmf::corrected_coverage(s.model, s.sol, 0.05), 0.95, 1e-4);
}

TEST(Predictions, HugeNoiseGivesSignalEnergy) {
  const PriorSpec p = PriorSpec::spike_slab(0.5, 1.0);
  const auto s = solved(p, p, 1e4, 1.0);
  EXPECT_NEAR(nmf::predict_mse(s.model, s.sol), 0.5, 0.01);
}

TEST(Predictions, NearPointMassTruthKeepsRidgeVariance) {
  // B = 0: kappa is the ridge root and tau^2 = 1 / (1 - 1/(2 (1 + kappa)^2))
  const auto s = solved(PriorSpec::gaussian(1.0), PriorSpec::spike_slab(0.999999, 1.0), 1.0, 2.0);
  const double k = (1.0 + std::sqrt(17.0)) / 4.0;
  const double tau2 = 1.0 / (1.0 - 1.0 / (2.0 * (1.0 + k) * (1.0 + k)));
  EXPECT_NEAR(nmf::predict_mse(s.model, s.sol), 2.0 * (tau2 - 1.0), 1e-5);
  EXPECT_NEAR(s.sol.kappa_star, k, 1e-5);
}

TEST(Predictions, BundleAndCsv) {
  const auto s = spike_slab();
  const auto p = nmf::predict(s.model, s.sol, {0.05, 0.1});
  ASSERT_EQ(p.coverage.size(), 2u);
  EXPECT_GT(p.coverage[0], p.coverage[1]);
  EXPECT_DOUBLE_EQ(p.coverage_at(0.05), p.coverage[0]);
  EXPECT_THROW(p.coverage_at(0.5), nmf::InvalidArgument);
  EXPECT_EQ(p.warnings.size(), 1u);
  EXPECT_EQ(nmf::predictions_csv_header(), "q,delta2,alpha,sigma2,b_star,tau_star,mse,neg_log_z,coverage_95");
  const std::string row = nmf::predictions_csv_row(s.model, s.sol, p);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 8);
  EXPECT_EQ(row.rfind("0.5,0.2,2,1,", 0), 0u) << row;
}
