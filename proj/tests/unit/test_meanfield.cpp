#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "nmf/errors.hpp"
#include "nmf/meanfield.hpp"

using nmf::Certificate;
using nmf::PriorSpec;

TEST(ProblemSpec, ValidatesInputs) {
  const PriorSpec g = PriorSpec::gaussian(1.0);
  EXPECT_THROW(nmf::ProblemSpec(g, g, 0.0, 2.0), nmf::InvalidArgument);
  EXPECT_THROW(nmf::ProblemSpec(g, g, 1.0, -1.0), nmf::InvalidArgument);
  // truth outside the prior support
  EXPECT_THROW(nmf::ProblemSpec(PriorSpec::three_point(0.5), g, 1.0, 2.0), nmf::InvalidArgument);
  const nmf::ProblemSpec p(PriorSpec::spike_slab(0.5, 1.0), PriorSpec::spike_slab(0.5, 1.0), 4.0, 2.0);
  EXPECT_DOUBLE_EQ(p.sigma(), 2.0);
  EXPECT_DOUBLE_EQ(p.s2(), 0.5);
}

TEST(Penalty, GExamples) {
  EXPECT_EQ(nmf::G(PriorSpec::spike_slab(0.3, 2.0), 0.0, 1.0), 0.0);
  EXPECT_NEAR(nmf::G(PriorSpec::gaussian(1.0), 0.3, 1.0), 0.09, 1e-15);
  const PriorSpec tp = PriorSpec::three_point(0.8);
  EXPECT_NEAR(nmf::G(tp, 1.0, 0.0), std::log(10.0), 1e-12);
  EXPECT_NEAR(nmf::G(tp, 1.0 - 1e-8, 0.0), std::log(10.0), 1e-5);
  EXPECT_LT(nmf::G(tp, 1.0 - 1e-8, 0.0), std::log(10.0));
  EXPECT_NEAR(nmf::G(tp, -1.0, 0.0), std::log(10.0), 1e-12);
  const PriorSpec grid = PriorSpec::grid(1.0, 257, [](double x) { return x * x; });
  EXPECT_TRUE(std::isinf(nmf::G(grid, 1.0, 0.0)));
}

TEST(Penalty, FExamples) {
  const PriorSpec g = PriorSpec::gaussian(1.0);
  EXPECT_NEAR(nmf::F(g, 1.0, 0.3), 0.045, 1e-15);
  EXPECT_NEAR(nmf::F_prime(g, 1.0, 0.3), 0.3, 1e-14);
  EXPECT_NEAR(nmf::F_second(g, 1.0, 0.3), 1.0, 1e-12);
  const PriorSpec ss = PriorSpec::spike_slab(0.5, 0.2);
  EXPECT_EQ(nmf::F(ss, 1.0, 0.0), 0.0);
  EXPECT_EQ(nmf::F_prime(ss, 1.0, 0.0), 0.0);
  for (double u = -3.0; u <= 3.0; u += 0.05) EXPECT_GT(nmf::F_second(ss, 1.0, u), 0.0) << u;
}

TEST(Penalty, CachedPenaltyMatchesFreeFunctions) {
  const PriorSpec ss = PriorSpec::spike_slab(0.5, 0.2);
  const nmf::Penalty pen(ss, 1.0);
  EXPECT_DOUBLE_EQ(pen.precision(), 1.0);
  for (double u : {-1.2, 0.1, 0.7}) {
    EXPECT_NEAR(pen.value(u), nmf::F(ss, 1.0, u), 1e-14);
    EXPECT_NEAR(pen.prime(u), nmf::F_prime(ss, 1.0, u), 1e-12);
    EXPECT_NEAR(pen.second(u), nmf::F_second(ss, 1.0, u), 1e-10);
    const double g = nmf::invert_mean(ss, u, 1.0);
    EXPECT_NEAR(pen.value_from_natural(u, g), pen.value(u), 1e-14);
  }
}

TEST(Convexity, SpikeSlabCondition) {
  const nmf::GaussianSpikeSlab p{0.5, 0.2};
  const double lhs = nmf::spike_slab_condition_lhs(p, 1.0);
  EXPECT_NEAR(lhs, (1.0 + 2.0 * std::sqrt(1.2)) * 0.2 / 1.2, 1e-14);
  EXPECT_NEAR(lhs, 0.531815, 1e-6);
  const auto r = nmf::check_convexity(PriorSpec::spike_slab(0.5, 0.2), 1.0);
  EXPECT_TRUE(r.certified);
  EXPECT_EQ(r.certificate, Certificate::SpikeSlabCondition);
  EXPECT_NEAR(r.condition_value, lhs, 1e-14);
  EXPECT_GT(r.min_F_second, 0.0);
}

TEST(Convexity, ThreePointCertificates) {
  const auto ghs = nmf::check_convexity(PriorSpec::three_point(0.8), 1.0);
  EXPECT_TRUE(ghs.certified);
  EXPECT_EQ(ghs.certificate, Certificate::DiscreteGHS);
  const auto low = nmf::check_convexity(PriorSpec::three_point(0.5), 2.0);
  EXPECT_TRUE(low.certified);
  EXPECT_EQ(low.certificate, Certificate::LowSNR);
}

TEST(Convexity, GaussianIsNice) {
  const auto r = nmf::check_convexity(PriorSpec::gaussian(3.0), 0.5);
  EXPECT_TRUE(r.certified);
  EXPECT_EQ(r.certificate, Certificate::NicePrior);
}

TEST(Convexity, LogConcaveGridIsNice) {
  const auto r = nmf::check_convexity(PriorSpec::grid(2.0, 257, [](double x) { return std::abs(x); }), 0.1);
  EXPECT_TRUE(r.certified);
  EXPECT_EQ(r.certificate, Certificate::NicePrior);
}

TEST(Convexity, StrongSpikeFailsAtHighSnr) {
  // a tall spike and a wide slab at small noise produce a nonconvex F
  const PriorSpec p = PriorSpec::spike_slab(0.9, 25.0);
  const auto r = nmf::check_convexity(p, 0.05);
  EXPECT_FALSE(r.certified);
  EXPECT_EQ(r.certificate, Certificate::Failed);
  EXPECT_LE(r.min_F_second, 0.0);
  const nmf::Penalty pen(p, 0.05, r);
  EXPECT_THROW(pen.require_certified(), nmf::NotConvexCertified);
}

TEST(Convexity, CertificateNamesRoundTrip) {
  for (auto c : {Certificate::NicePrior, Certificate::DiscreteGHS, Certificate::LowSNR,
                 Certificate::SpikeSlabCondition, Certificate::NumericalSweep, Certificate::Failed}) {
    EXPECT_EQ(nmf::certificate_from_string(nmf::to_string(c)), c);
  }
  EXPECT_THROW(nmf::certificate_from_string("bogus"), nmf::InvalidArgument);
}
