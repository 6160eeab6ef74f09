#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "nmf/meanfield.hpp"
#include "nmf/prox.hpp"

using nmf::PriorSpec;

namespace {

struct Case {
  std::string name;
  PriorSpec prior;
  double sigma2;
};

std::vector<Case> certified_cases() {
  return {
      {"gaussian", PriorSpec::gaussian(1.0), 1.0},
      {"spike_slab", PriorSpec::spike_slab(0.5, 0.2), 1.0},
      {"spike_slab_sweep", PriorSpec::spike_slab(0.7, 1.0), 1.0},
      {"three_point_ghs", PriorSpec::three_point(0.8), 1.0},
      {"three_point_low_snr", PriorSpec::three_point(0.5), 2.0},
      {"grid_laplace", PriorSpec::grid(3.0, 513, [](double x) { return 2.0 * std::abs(x); }), 0.5},
  };
}

std::vector<double> xs() {
  std::vector<double> out;
  for (double x = -6.0; x <= 6.0; x += 0.1) out.push_back(x);
  return out;
}

}  // namespace

class PenaltyProperty : public ::testing::TestWithParam<Case> {
 protected:
  void SetUp() override {
    report_ = nmf::check_convexity(GetParam().prior, GetParam().sigma2);
    ASSERT_TRUE(report_.certified) << nmf::to_string(report_.certificate);
  }
  nmf::Penalty penalty() const { return nmf::Penalty(GetParam().prior, GetParam().sigma2, report_); }
  nmf::ConvexityReport report_;
};

TEST_P(PenaltyProperty, DerivativesMatchFiniteDifferences) {
  const nmf::Penalty pen = penalty();
  const auto s = nmf::support(pen.prior());
  const double lim = std::isinf(s.hi) ? 3.0 : 0.95 * s.hi;
  const double h = 1e-5;
  for (double u = -lim; u <= lim; u += lim / 15) {
    const double d1 = (pen.value(u + h) - pen.value(u - h)) / (2 * h);
    EXPECT_NEAR(pen.prime(u), d1, 1e-6 * (1 + std::abs(d1))) << u;
    const double d2 = (pen.prime(u + h) - pen.prime(u - h)) / (2 * h);
    EXPECT_NEAR(pen.second(u), d2, 1e-6 * (1 + std::abs(d2))) << u;
  }
}

TEST_P(PenaltyProperty, GNonnegativeAndZeroOnlyAtOrigin) {
  const PriorSpec& p = GetParam().prior;
  const double d = 1.0 / GetParam().sigma2;
  EXPECT_EQ(nmf::G(p, 0.0, d), 0.0);
  const auto s = nmf::support(p);
  const double lim = std::isinf(s.hi) ? 3.0 : 0.95 * s.hi;
  for (double u = lim / 10; u <= lim; u += lim / 10) {
    EXPECT_GT(nmf::G(p, u, d), 0.0);
    EXPECT_GT(nmf::G(p, -u, d), 0.0);
  }
}

TEST_P(PenaltyProperty, CurvatureBoundedBelowOnSweep) {
  const nmf::Penalty pen = penalty();
  EXPECT_GT(report_.min_F_second, 0.0);
  const auto s = nmf::support(pen.prior());
  const double lim = std::isinf(s.hi) ? 3.0 : 0.99 * s.hi;
  for (double u = -lim; u <= lim; u += lim / 50) EXPECT_GT(pen.second(u), 0.0) << u;
}

TEST_P(PenaltyProperty, ProxMonotoneNonexpansiveOdd) {
  const nmf::Penalty pen = penalty();
  const double edge = nmf::support(pen.prior()).hi;
  for (double t : {0.1, 0.7, 2.0}) {
    double prev_x = 0, prev_w = 0;
    bool first = true;
    for (double x : xs()) {
      const double w = nmf::eta(pen, x, t);
      EXPECT_NEAR(nmf::eta(pen, -x, t), -w, 1e-12);
      if (!first) {
        // on bounded supports w may round to the endpoint
        if (std::abs(w) < edge) {
          EXPECT_GT(w, prev_w) << x;
        } else {
          EXPECT_GE(w, prev_w) << x;
        }
        EXPECT_LE(w - prev_w, x - prev_x + 1e-12) << x;
      }
      prev_x = x;
      prev_w = w;
      first = false;
    }
  }
}

TEST_P(PenaltyProperty, ShrinkageGrowsWithStep) {
  const nmf::Penalty pen = penalty();
  for (double x : {0.3, 1.0, 2.5, 5.0}) {
    double prev = 0;
    for (double t : {0.01, 0.1, 0.3, 0.7, 1.5, 4.0}) {
      const double gap = std::abs(x - nmf::eta(pen, x, t));
      EXPECT_GE(gap, prev - 1e-12) << "x=" << x << " t=" << t;
      prev = gap;
    }
  }
}

TEST_P(PenaltyProperty, DerivativeInUnitInterval) {
  const nmf::Penalty pen = penalty();
  for (double t : {0.05, 0.7, 3.0}) {
    for (double x : xs()) {
      const double e = nmf::eta_prime(pen, x, t);
      EXPECT_GT(e, 0.0);
      EXPECT_LT(e, 1.0);
    }
  }
}

TEST_P(PenaltyProperty, StationarityResidual) {
  const nmf::Penalty pen = penalty();
  for (double t : {0.05, 0.7, 3.0}) {
    for (double x : xs()) {
      const auto pp = nmf::prox(pen, x, t);
      // F'(w) = h(w) - w/sigma2, with h(w) carried by the prox point
      const double r = (pp.w - x) / t + pp.natural - pp.w * pen.precision();
      EXPECT_LT(std::abs(r), 1e-9 * (1 + std::abs(x) / t)) << x;
      // h is ill-conditioned once 1 - |w| nears round-off
      if (std::abs(pp.w) < nmf::support(pen.prior()).hi - 1e-6) {
        EXPECT_NEAR(pp.natural, nmf::invert_mean(pen.prior(), pp.w, pen.precision()),
                    1e-7 * (1 + std::abs(pp.natural)));
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Certified, PenaltyProperty, ::testing::ValuesIn(certified_cases()),
                         [](const auto& info) { return info.param.name; });

TEST(SpikeSlabConditions, EasyConditionImpliesVarianceCondition) {
  for (double q : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    for (double d2 : {0.05, 0.2, 1.0, 5.0}) {
      for (double s2 : {0.25, 1.0, 4.0}) {
        const nmf::GaussianSpikeSlab p{q, d2};
        if (nmf::spike_slab_condition_lhs(p, s2) < 1.0) {
          EXPECT_LT(nmf::spike_slab_max_tilted_variance(p, s2).variance, s2)
              << "q=" << q << " delta2=" << d2 << " sigma2=" << s2;
        }
      }
    }
  }
}
