#include <cmath>

#include <gtest/gtest.h>

#include "nmf/errors.hpp"
#include "nmf/normal.hpp"

TEST(Normal, CdfAndQuantileRoundTrip) {
  for (double t : {1e-10, 0.001, 0.025, 0.3, 0.5, 0.8, 0.975, 1 - 1e-10}) {
    EXPECT_NEAR(nmf::normal_cdf(nmf::normal_quantile(t)), t, 1e-14 + 1e-12 * t);
  }
  EXPECT_NEAR(nmf::normal_quantile(0.975), 1.959963984540054, 1e-13);
  EXPECT_THROW(nmf::normal_quantile(0.0), nmf::InvalidArgument);
  EXPECT_THROW(nmf::normal_quantile(1.0), nmf::InvalidArgument);
}

TEST(Normal, HermiteRuleIntegratesMoments) {
  const nmf::NodeSet r = nmf::gauss_hermite_normal(61);
  ASSERT_EQ(r.size(), 61u);
  double m0 = 0, m2 = 0, m4 = 0, m1 = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    m0 += r.w[i];
    m1 += r.w[i] * r.x[i];
    m2 += r.w[i] * r.x[i] * r.x[i];
    m4 += r.w[i] * std::pow(r.x[i], 4);
  }
  EXPECT_NEAR(m0, 1.0, 1e-13);
  EXPECT_NEAR(m1, 0.0, 1e-13);
  EXPECT_NEAR(m2, 1.0, 1e-12);
  EXPECT_NEAR(m4, 3.0, 1e-11);
  EXPECT_EQ(r.x[30], 0.0);
}

TEST(Normal, HermiteRuleIntegratesSmoothFunction) {
  // E cos(Z) = exp(-1/2)
  const nmf::NodeSet r = nmf::gauss_hermite_normal(21);
  double s = 0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.w[i] * std::cos(r.x[i]);
  EXPECT_NEAR(s, std::exp(-0.5), 1e-14);
}
