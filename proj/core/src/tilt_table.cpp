#include "tilt_table.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace nmf::detail {
namespace {

constexpr std::size_t kNodes = 4096;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Quintic Hermite on one cell from values, first and second derivatives.
double quintic(double f0, double d0, double s0, double f1, double d1, double s1, double h, double t) {
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
  const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
  const double h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
  const double h3 = 0.5 * t3 - t4 + 0.5 * t5;
  const double h4 = -4 * t3 + 7 * t4 - 3 * t5;
  const double h5 = 10 * t3 - 15 * t4 + 6 * t5;
  return f0 * h0 + h * d0 * h1 + h * h * s0 * h2 + h * h * s1 * h3 + h * d1 * h4 + f1 * h5;
}

}  // namespace

TiltTable::TiltTable(const GridDensity& g, double d)
    : cgf_(kNodes), mean_(kNodes), var_(kNodes), k3_(kNodes), k4_(kNodes) {
  const double sd0 = std::sqrt(grid_cumulants(g, Tilt{0.0, d}).variance);
  step_ = 0.02 / sd0;
  g_max_ = step_ * static_cast<double>(kNodes - 1);
  std::vector<std::exception_ptr> errors(kNodes);
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < kNodes; ++k) {
    try {
      const Cumulants c = grid_cumulants(g, Tilt{step_ * static_cast<double>(k), d});
      cgf_[k] = c.cgf;
      mean_[k] = c.mean;
      var_[k] = c.variance;
      k3_[k] = c.k3;
      k4_[k] = c.k4;
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  mean_[0] = 0.0;
  k3_[0] = 0.0;
  // keep the table strictly increasing where round-off flattens the mean
  for (std::size_t k = 1; k < kNodes; ++k) {
    if (!(mean_[k] > mean_[k - 1])) {
      g_max_ = step_ * static_cast<double>(k - 1);
      break;
    }
  }
}

TiltedMoments TiltTable::at(double g) const {
  const double ag = std::abs(g);
  const double pos = ag / step_;
  const std::size_t k = std::min(static_cast<std::size_t>(pos), kNodes - 2);
  const double t = pos - static_cast<double>(k);
  const double h = step_;
  TiltedMoments out;
  out.cgf = quintic(cgf_[k], mean_[k], var_[k], cgf_[k + 1], mean_[k + 1], var_[k + 1], h, t);
  out.mean = quintic(mean_[k], var_[k], k3_[k], mean_[k + 1], var_[k + 1], k3_[k + 1], h, t);
  out.variance = quintic(var_[k], k3_[k], k4_[k], var_[k + 1], k3_[k + 1], k4_[k + 1], h, t);
  out.variance = std::max(out.variance, 0.0);
  if (g < 0.0) out.mean = -out.mean;
  return out;
}

double TiltTable::natural(double u) const {
  const double au = std::abs(u);
  const std::size_t last = static_cast<std::size_t>(std::llround(g_max_ / step_));
  if (au >= mean_[last]) return std::numeric_limits<double>::quiet_NaN();
  if (au == 0.0) return 0.0;
  const auto it = std::upper_bound(mean_.begin(), mean_.begin() + static_cast<std::ptrdiff_t>(last) + 1, au);
  const std::size_t k = static_cast<std::size_t>(it - mean_.begin()) - 1;
  double lo = step_ * static_cast<double>(k);
  double hi = step_ * static_cast<double>(k + 1);
  // start from linear interpolation of the node means
  double g = lo + step_ * (au - mean_[k]) / (mean_[k + 1] - mean_[k]);
  for (int it2 = 0; it2 < 100; ++it2) {
    const TiltedMoments m = at(g);
    const double f = m.mean - au;
    if (std::abs(f) <= 2.0 * kEps * au) break;
    if (f < 0.0) {
      lo = g;
    } else {
      hi = g;
    }
    if (hi - lo <= 4.0 * kEps * hi) break;
    double next = g - f / m.variance;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    g = next;
  }
  return u < 0.0 ? -g : g;
}

}  // namespace nmf::detail
