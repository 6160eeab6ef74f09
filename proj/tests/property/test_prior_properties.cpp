#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "nmf/meanfield.hpp"
#include "nmf/priors.hpp"

using nmf::PriorSpec;
using nmf::Tilt;

namespace {

struct Named {
  std::string name;
  PriorSpec prior;
};

std::vector<Named> all_priors() {
  return {
      {"gaussian", PriorSpec::gaussian(1.7)},
      {"spike_slab", PriorSpec::spike_slab(0.5, 0.2)},
      {"spike_slab_wide", PriorSpec::spike_slab(0.8, 4.0)},
      {"three_point", PriorSpec::three_point(0.3)},
      {"three_point_heavy", PriorSpec::three_point(0.8)},
      {"grid_laplace", PriorSpec::grid(3.0, 513, [](double x) { return 2.0 * std::abs(x); })},
      {"grid_bimodal", PriorSpec::grid(2.0, 257, [](double x) { return (x * x - 1) * (x * x - 1); })},
  };
}

std::vector<double> interior_grid(const PriorSpec& p) {
  const auto s = nmf::support(p);
  std::vector<double> out;
  if (std::isinf(s.hi)) {
    for (double u = -4.0; u <= 4.0; u += 0.25) out.push_back(u);
  } else {
    for (int k = -19; k <= 19; ++k) out.push_back(s.hi * k / 20.0);
    out.push_back(s.hi * 0.999);
    out.push_back(-s.hi * 0.999);
  }
  return out;
}

}  // namespace

class PriorProperty : public ::testing::TestWithParam<Named> {};

TEST_P(PriorProperty, InvertMeanRoundTrip) {
  const PriorSpec& p = GetParam().prior;
  for (double d : {0.5, 1.0, 2.0}) {
    for (double u : interior_grid(p)) {
      const double h = nmf::invert_mean(p, u, d);
      EXPECT_LT(std::abs(nmf::tilted_moments(p, Tilt{h, d}).mean - u), 1e-9) << "u=" << u << " d=" << d;
    }
  }
}

TEST_P(PriorProperty, TiltedMeanIncreasing) {
  const PriorSpec& p = GetParam().prior;
  for (double g2 : {0.0, 1.0}) {
    double prev = -INFINITY;
    for (double g1 = -12.0; g1 <= 12.0; g1 += 0.5) {
      const double m = nmf::tilted_moments(p, Tilt{g1, g2}).mean;
      EXPECT_GT(m, prev) << g1;
      prev = m;
    }
  }
}

TEST_P(PriorProperty, Symmetry) {
  const PriorSpec& p = GetParam().prior;
  for (double g1 : {0.3, 1.0, 4.0}) {
    for (double g2 : {0.0, 0.7}) {
      const auto a = nmf::tilted_moments(p, Tilt{g1, g2});
      const auto b = nmf::tilted_moments(p, Tilt{-g1, g2});
      EXPECT_NEAR(a.cgf, b.cgf, 1e-12 * (1 + std::abs(a.cgf)));
      EXPECT_NEAR(a.mean, -b.mean, 1e-12);
    }
  }
}

TEST_P(PriorProperty, QuantileCdfConsistency) {
  const PriorSpec& p = GetParam().prior;
  for (const Tilt t : {Tilt{0.0, 1.0}, Tilt{0.8, 1.0}, Tilt{-2.0, 0.3}}) {
    for (double u = 0.01; u < 1.0; u += 0.01) {
      const double x = nmf::tilted_quantile(p, t, u);
      EXPECT_GE(nmf::tilted_cdf(p, t, x), u - 1e-10) << u;
      EXPECT_LE(nmf::tilted_cdf_left(p, t, x), u + 1e-10) << u;
    }
  }
}

TEST_P(PriorProperty, VarianceMatchesMeanDerivative) {
  const PriorSpec& p = GetParam().prior;
  const double h = 1e-5;
  for (double g1 : {0.0, 0.6, 2.5}) {
    const double fd =
        (nmf::tilted_moments(p, Tilt{g1 + h, 1.0}).mean - nmf::tilted_moments(p, Tilt{g1 - h, 1.0}).mean) / (2 * h);
    EXPECT_NEAR(nmf::tilted_moments(p, Tilt{g1, 1.0}).variance, fd, 1e-6 * (1 + fd));
  }
}

INSTANTIATE_TEST_SUITE_P(AllKinds, PriorProperty, ::testing::ValuesIn(all_priors()),
                         [](const auto& info) { return info.param.name; });

TEST(PriorClosedForms, GaussianKindsMatchQuadrature) {
  // a wide grid carrying the same density as the closed-form kind
  for (const double d2 : {0.2, 1.0, 3.0}) {
    const double a = 14.0 * std::sqrt(d2);
    const PriorSpec grid = PriorSpec::grid(a, 40001, [d2](double x) { return x * x / (2 * d2); });
    const PriorSpec closed = PriorSpec::gaussian(d2);
    for (const Tilt t : {Tilt{0.0, 0.0}, Tilt{0.7, 1.0}, Tilt{-1.5, 0.25}}) {
      const auto c = nmf::tilted_moments(closed, t);
      const auto g = nmf::tilted_moments(grid, t);
      // the grid cgf is log(integral of exp(-V)) relative, so compare differences
      const auto c0 = nmf::tilted_moments(closed, Tilt{});
      const auto g0 = nmf::tilted_moments(grid, Tilt{});
      EXPECT_NEAR(c.cgf - c0.cgf, g.cgf - g0.cgf, 1e-6);
      EXPECT_NEAR(c.mean, g.mean, 1e-6 * std::sqrt(d2));
      EXPECT_NEAR(c.variance, g.variance, 1e-6 * d2);
    }
  }
}

TEST(PriorClosedForms, SpikeSlabMatchesDirectQuadrature) {
  // mixture integral by composite Simpson on a wide interval
  const double q = 0.4, d2 = 2.0;
  const PriorSpec p = PriorSpec::spike_slab(q, d2);
  for (const Tilt t : {Tilt{0.9, 1.0}, Tilt{-0.3, 0.1}}) {
    const int n = 200000;
    const double lo = -40.0, hi = 40.0, h = (hi - lo) / n;
    double z = 0, m1 = 0, m2 = 0;
    for (int i = 0; i <= n; ++i) {
      const double x = lo + h * i;
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      const double f = w * std::exp(t.gamma1 * x - t.gamma2 * x * x / 2 - x * x / (2 * d2)) / std::sqrt(2 * M_PI * d2);
      z += f;
      m1 += f * x;
      m2 += f * x * x;
    }
    z *= h / 3 * (1 - q);
    m1 *= h / 3 * (1 - q);
    m2 *= h / 3 * (1 - q);
    z += q;
    const auto m = nmf::tilted_moments(p, t);
    EXPECT_NEAR(m.cgf, std::log(z), 1e-8);
    EXPECT_NEAR(m.mean, m1 / z, 1e-8);
    EXPECT_NEAR(m.variance, m2 / z - (m1 / z) * (m1 / z), 1e-8);
  }
}
