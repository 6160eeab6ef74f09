#include "nmf/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "nmf/errors.hpp"
#include "tilt_table.hpp"

namespace nmf {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_interior(const PriorSpec& prior, double u) {
  const Support s = support(prior);
  if (!(u > s.lo && u < s.hi)) {
    std::ostringstream os;
    os << "u=" << u << " is not interior to the support of " << prior.name();
    throw OutOfSupport(os.str());
  }
}

// log of the (0, d)-tilted mass sitting exactly at the boundary point x.
double boundary_log_mass(const PriorSpec& prior, double x, double d) {
  if (const auto* p = prior.as<ThreePointDiscrete>()) {
    return std::log((1.0 - p->q) / 2.0) - 0.5 * d * x * x - cgf(prior, Tilt{0.0, d});
  }
  return -kInf;
}

bool grid_is_nice(const GridDensity& g) {
  const auto& v = g.potential();
  const std::size_t n = v.size();
  // cells lying in [0, a]
  const std::size_t first = n / 2;
  std::vector<double> slope;
  for (std::size_t i = first; i + 1 < n; ++i) slope.push_back((v[i + 1] - v[i]) / g.spacing());
  const double scale =
      1.0 + std::abs(*std::max_element(slope.begin(), slope.end(),
                                       [](double a, double b) { return std::abs(a) < std::abs(b); }));
  const double tol = 1e-9 * scale;
  for (double s : slope) {
    if (s < -tol) return false;
  }
  for (std::size_t i = 1; i + 1 < slope.size(); ++i) {
    if (slope[i + 1] - 2.0 * slope[i] + slope[i - 1] < -tol) return false;
  }
  return true;
}

ConvexityReport finish(const PriorSpec& prior, double sigma2, Certificate cert, double condition) {
  ConvexityReport r;
  r.condition_value = condition;
  r.min_F_second = sweep_min_F_second(prior, sigma2, &r.sweep_grid);
  if (r.min_F_second > 0.0 && std::isfinite(r.min_F_second)) {
    r.certified = true;
    r.certificate = cert;
  } else {
    r.certified = false;
    r.certificate = Certificate::Failed;
  }
  return r;
}

}  // namespace

ProblemSpec::ProblemSpec(PriorSpec prior, PriorSpec truth, double sigma2, double alpha)
    : prior_(std::move(prior)), truth_(std::move(truth)), sigma2_(sigma2), alpha_(alpha) {
  if (!(sigma2_ > 0.0) || !std::isfinite(sigma2_)) throw InvalidArgument("sigma2 must be positive");
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) throw InvalidArgument("alpha must be positive");
  const Support sp = support(prior_);
  const Support st = support(truth_);
  if (st.lo < sp.lo || st.hi > sp.hi) {
    throw InvalidArgument("truth support " + truth_.name() + " is not contained in the support of " +
                          prior_.name());
  }
  s2_ = truth_.second_moment();
}

double ProblemSpec::sigma() const { return std::sqrt(sigma2_); }

const char* to_string(Certificate c) {
  switch (c) {
    case Certificate::NicePrior:
      return "NicePrior";
    case Certificate::DiscreteGHS:
      return "DiscreteGHS";
    case Certificate::LowSNR:
      return "LowSNR";
    case Certificate::SpikeSlabCondition:
      return "SpikeSlabCondition";
    case Certificate::NumericalSweep:
      return "NumericalSweep";
    case Certificate::Failed:
      return "Failed";
  }
  return "Failed";
}

Certificate certificate_from_string(const std::string& s) {
  for (auto c : {Certificate::NicePrior, Certificate::DiscreteGHS, Certificate::LowSNR,
                 Certificate::SpikeSlabCondition, Certificate::NumericalSweep, Certificate::Failed}) {
    if (s == to_string(c)) return c;
  }
  throw InvalidArgument("unknown certificate " + s);
}

double G(const PriorSpec& prior, double u, double d) {
  const Support s = support(prior);
  if (u < s.lo || u > s.hi || std::isnan(u)) {
    std::ostringstream os;
    os << "G: u=" << u << " outside the support of " << prior.name();
    throw OutOfSupport(os.str());
  }
  if (u == s.lo || u == s.hi) return -boundary_log_mass(prior, u, d);
  if (u == 0.0) return 0.0;
  const double h = invert_mean(prior, u, d);
  const double g = u * h - cgf(prior, Tilt{h, d}) + cgf(prior, Tilt{0.0, d});
  return std::max(g, 0.0);
}

double F(const PriorSpec& prior, double sigma2, double u) {
  return G(prior, u, 1.0 / sigma2) - u * u / (2.0 * sigma2);
}

double F_prime(const PriorSpec& prior, double sigma2, double u) {
  require_interior(prior, u);
  return invert_mean(prior, u, 1.0 / sigma2) - u / sigma2;
}

double F_second(const PriorSpec& prior, double sigma2, double u) {
  require_interior(prior, u);
  const double d = 1.0 / sigma2;
  const double h = invert_mean(prior, u, d);
  return 1.0 / tilted_moments(prior, Tilt{h, d}).variance - d;
}

double spike_slab_condition_lhs(const GaussianSpikeSlab& p, double sigma2) {
  return (1.0 + 2.0 * p.q / (1.0 - p.q) * std::sqrt(1.0 + p.delta2 / sigma2)) * p.delta2 /
         (sigma2 + p.delta2);
}

MaxVariance spike_slab_max_tilted_variance(const GaussianSpikeSlab& p, double sigma2) {
  const PriorSpec prior = PriorSpec::spike_slab(p.q, p.delta2);
  const double d = 1.0 / sigma2;
  auto var = [&](double h) { return tilted_moments(prior, Tilt{h, d}).variance; };
  constexpr int kCoarse = 500;
  constexpr double kHi = 50.0;
  int best = 0;
  double best_v = var(0.0);
  for (int i = 1; i <= kCoarse; ++i) {
    const double v = var(kHi * i / kCoarse);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  const double lo = kHi * std::max(best - 1, 0) / kCoarse;
  const double hi = kHi * std::min(best + 1, kCoarse) / kCoarse;
  const auto r = boost::math::tools::brent_find_minima([&](double h) { return -var(h); }, lo, hi,
                                                       std::numeric_limits<double>::digits / 2);
  if (-r.second > best_v) return {r.first, -r.second};
  return {kHi * best / kCoarse, best_v};
}

double sweep_min_F_second(const PriorSpec& prior, double sigma2, std::string* grid_description) {
  const Support s = support(prior);
  double lo;
  double hi;
  if (std::isfinite(s.lo)) {
    const double shrink = 1e-6 * (s.hi - s.lo) / 2.0;
    lo = s.lo + shrink;
    hi = s.hi - shrink;
  } else {
    lo = tilted_quantile(prior, Tilt{}, 5e-7);
    hi = tilted_quantile(prior, Tilt{}, 1.0 - 5e-7);
  }
  constexpr int kPoints = 2048;
  std::vector<double> grid;
  grid.reserve(kPoints + 64);
  for (int i = 0; i < kPoints; ++i) grid.push_back(lo + (hi - lo) * i / (kPoints - 1));
  // dense refinement near the origin
  for (int k = 1; k <= 32; ++k) {
    const double r = hi * std::pow(10.0, -k / 4.0);
    grid.push_back(r);
    grid.push_back(-r);
  }
  double m = kInf;
  for (double u : grid) {
    if (!(u > s.lo && u < s.hi)) continue;
    const double f2 = F_second(prior, sigma2, u);
    if (std::isnan(f2)) return f2;
    m = std::min(m, f2);
  }
  if (grid_description) {
    std::ostringstream os;
    os << kPoints << " uniform points on [" << lo << ", " << hi << "] plus 64 geometric points near 0";
    *grid_description = os.str();
  }
  return m;
}

ConvexityReport check_convexity(const PriorSpec& prior, double sigma2) {
  if (!(sigma2 > 0.0)) throw InvalidArgument("sigma2 must be positive");
  if (prior.as<GaussianMeanZero>()) return finish(prior, sigma2, Certificate::NicePrior, 0.0);
  if (const auto* p = prior.as<GaussianSpikeSlab>()) {
    if (p->q == 0.0) return finish(prior, sigma2, Certificate::NicePrior, 0.0);
    const double lhs = spike_slab_condition_lhs(*p, sigma2);
    if (lhs < 1.0) return finish(prior, sigma2, Certificate::SpikeSlabCondition, lhs);
    const MaxVariance mv = spike_slab_max_tilted_variance(*p, sigma2);
    if (mv.variance < sigma2) {
      return finish(prior, sigma2, Certificate::SpikeSlabCondition, mv.variance / sigma2);
    }
    return finish(prior, sigma2, Certificate::NumericalSweep, mv.variance / sigma2);
  }
  if (const auto* p = prior.as<ThreePointDiscrete>()) {
    if (p->q > 2.0 / 3.0 && p->q < 1.0) return finish(prior, sigma2, Certificate::DiscreteGHS, p->q);
    if (sigma2 > 1.0) return finish(prior, sigma2, Certificate::LowSNR, 1.0 / sigma2);
    return finish(prior, sigma2, Certificate::NumericalSweep, 0.0);
  }
  const auto& g = std::get<GridDensity>(prior.kind());
  if (grid_is_nice(g)) return finish(prior, sigma2, Certificate::NicePrior, 0.0);
  const double a2 = g.half_width() * g.half_width();
  if (sigma2 > a2) return finish(prior, sigma2, Certificate::LowSNR, a2 / sigma2);
  return finish(prior, sigma2, Certificate::NumericalSweep, 0.0);
}

Penalty::Penalty(PriorSpec prior, double sigma2)
    : Penalty(prior, sigma2, check_convexity(prior, sigma2)) {}

Penalty::Penalty(PriorSpec prior, double sigma2, ConvexityReport report)
    : prior_(std::move(prior)),
      sigma2_(sigma2),
      d_(1.0 / sigma2),
      c0_(cgf(prior_, Tilt{0.0, 1.0 / sigma2})),
      report_(std::move(report)) {
  if (const auto* g = prior_.as<GridDensity>()) table_ = std::make_shared<const detail::TiltTable>(*g, d_);
}

void Penalty::require_certified() const {
  if (!report_.certified) {
    throw NotConvexCertified("effective penalty of " + prior_.name() +
                             " is not certified strongly convex");
  }
}

double Penalty::value(double u) const {
  const Support s = support(prior_);
  if (u == s.lo || u == s.hi) return -boundary_log_mass(prior_, u, d_) - u * u * d_ / 2.0;
  require_interior(prior_, u);
  if (u == 0.0) return 0.0;
  return value_from_natural(u, natural(u));
}

double Penalty::prime(double u) const {
  if (!table_) return F_prime(prior_, sigma2_, u);
  require_interior(prior_, u);
  return natural(u) - u * d_;
}

double Penalty::second(double u) const {
  if (!table_) return F_second(prior_, sigma2_, u);
  require_interior(prior_, u);
  return 1.0 / tilt(natural(u)).variance - d_;
}

double Penalty::value_from_natural(double u, double g) const {
  const double kl = std::max(u * g - tilt(g).cgf + c0_, 0.0);
  return kl - u * u * d_ / 2.0;
}

TiltedMoments Penalty::tilt(double g) const {
  if (table_ && table_->covers(g)) return table_->at(g);
  return tilted_moments(prior_, Tilt{g, d_});
}

double Penalty::natural(double u) const {
  if (table_) {
    const double g = table_->natural(u);
    if (!std::isnan(g)) return g;
  }
  return invert_mean(prior_, u, d_);
}

}  // namespace nmf
