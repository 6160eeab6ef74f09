#include "nmf/prox.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "nmf/errors.hpp"

namespace nmf {
namespace {

constexpr int kMaxIter = 200;
constexpr double kResidualTol = 1e-10;
constexpr double kEps = std::numeric_limits<double>::epsilon();

}  // namespace

// The stationarity condition (w - x)/t + h(w) - w/sigma2 = 0 is solved in the
// natural parameter g = h(w): with w = mean(g) it reads
//   f(g) = mean(g) (1 - t/sigma2) + t g - x = 0,
// and f'(g) = var(g) (1 - t/sigma2) + t > 0 whenever F'' > 0.
ProxPoint prox(const Penalty& penalty, double x, double t) {
  penalty.require_certified();
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("prox: t must be positive and finite");
  if (!std::isfinite(x)) throw NonFinite("prox: non-finite input");
  const PriorSpec& prior = penalty.prior();
  const double d = penalty.precision();
  const double shrink = 1.0 - t * d;
  const double target = std::abs(x);
  const double sign = x < 0.0 ? -1.0 : 1.0;

  ProxPoint out;
  TiltedMoments m = penalty.tilt(0.0);
  if (target == 0.0) {
    out.variance = m.variance;
    return out;
  }
  auto f_of = [&](const TiltedMoments& mm, double g) { return mm.mean * shrink + t * g - target; };
  auto df_of = [&](const TiltedMoments& mm) { return mm.variance * shrink + t; };

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double g = target / df_of(m);
  for (int it = 1; it <= kMaxIter; ++it) {
    m = penalty.tilt(g);
    const double f = f_of(m, g);
    const double floor_tol = 8.0 * kEps * (target + t * std::abs(g) + std::abs(m.mean));
    if (std::abs(f) <= std::max(kResidualTol * t, floor_tol)) {
      out.w = sign * m.mean;
      out.natural = sign * g;
      out.variance = m.variance;
      out.residual = sign * f / t;
      out.iterations = it;
      return out;
    }
    if (f < 0.0) {
      lo = g;
    } else {
      hi = g;
    }
    if (std::isfinite(hi) && hi - lo <= 4.0 * kEps * hi) {
      out.w = sign * m.mean;
      out.natural = sign * g;
      out.variance = m.variance;
      out.residual = sign * f / t;
      out.iterations = it;
      return out;
    }
    const double fp = df_of(m);
    double next = g - f / fp;
    if (!(next > lo && next < hi) || !(fp > 0.0)) {
      next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * std::max(g, 1.0);
    }
    g = next;
  }
  std::ostringstream os;
  os << "prox did not converge for x=" << x << ", t=" << t << " under " << prior.name();
  throw NoConvergence(os.str());
}

double eta(const Penalty& penalty, double x, double t) { return prox(penalty, x, t).w; }

double eta_prime(const Penalty& penalty, double x, double t) {
  const ProxPoint p = prox(penalty, x, t);
  return p.variance / (p.variance * (1.0 - t * penalty.precision()) + t);
}

double eta_inverse(const Penalty& penalty, double w, double t) {
  const Support s = support(penalty.prior());
  if (!(w > s.lo && w < s.hi)) {
    std::ostringstream os;
    os << "eta_inverse: w=" << w << " outside the range of eta";
    throw OutOfRange(os.str());
  }
  if (w == 0.0) return 0.0;
  const double d = penalty.precision();
  return w + t * (penalty.natural(w) - w * d);
}

double eta(const PriorSpec& prior, double sigma2, double x, double t) {
  return eta(Penalty(prior, sigma2), x, t);
}

double eta_prime(const PriorSpec& prior, double sigma2, double x, double t) {
  return eta_prime(Penalty(prior, sigma2), x, t);
}

}  // namespace nmf
