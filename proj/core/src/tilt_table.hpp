#pragma once

#include <cmath>
#include <vector>

#include "nmf/priors.hpp"

namespace nmf::detail {

struct Cumulants {
  double cgf;
  double mean;
  double variance;
  double k3;
  double k4;
};

/// First four cumulants of a tilted grid density, by adaptive quadrature.
Cumulants grid_cumulants(const GridDensity& g, Tilt t);

/// The (g, d) tilts of a grid density for one fixed d, tabulated on a uniform
/// g-grid and read back by quintic Hermite interpolation. Covers |g| <= g_max.
class TiltTable {
 public:
  TiltTable(const GridDensity& g, double d);

  bool covers(double g) const { return std::abs(g) <= g_max_; }
  /// Requires covers(g).
  TiltedMoments at(double g) const;
  /// g with at(g).mean == u; NaN when |u| is beyond the tabulated range.
  double natural(double u) const;

 private:
  double step_;
  double g_max_;
  std::vector<double> cgf_, mean_, var_, k3_, k4_;
};

}  // namespace nmf::detail
