#include "nmf/priors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "nmf/errors.hpp"
#include "nmf/normal.hpp"
#include "tilt_table.hpp"

namespace nmf {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// ---------------------------------------------------------------------------
// Gaussian slab pieces

double slab_precision(double delta2, double gamma2) {
  const double a = 1.0 / delta2 + gamma2;
  if (!(a > 0.0)) {
    std::ostringstream os;
    os << "tilt gamma2=" << gamma2 << " is not normalizable for slab variance " << delta2;
    throw NonNormalizable(os.str());
  }
  return a;
}

// Tilted spike-and-slab: atom weight w0 at 0, slab weight w1 on N(m, s^2).
struct SpikeSlabTilt {
  double cgf;
  double w0;
  double w1;
  double m;
  double s;
};

SpikeSlabTilt tilt_spike_slab(const GaussianSpikeSlab& p, Tilt t) {
  const double a = slab_precision(p.delta2, t.gamma2);
  const double log_slab =
      std::log1p(-p.q) - 0.5 * std::log(p.delta2 * a) + t.gamma1 * t.gamma1 / (2.0 * a);
  const double log_atom = p.q > 0.0 ? std::log(p.q) : -kInf;
  const double c = log_add_exp(log_atom, log_slab);
  SpikeSlabTilt r;
  r.cgf = c;
  r.w1 = std::exp(log_slab - c);
  r.w0 = log_atom == -kInf ? 0.0 : std::exp(log_atom - c);
  r.m = t.gamma1 / a;
  r.s = 1.0 / std::sqrt(a);
  return r;
}

// Tilted three-point law on {-1, 0, 1}.
struct ThreePointTilt {
  double cgf;
  double pm;
  double p0;
  double pp;
};

ThreePointTilt tilt_three_point(const ThreePointDiscrete& p, Tilt t) {
  const double l0 = std::log(p.q);
  const double side = std::log((1.0 - p.q) / 2.0) - 0.5 * t.gamma2;
  const double lp = side + t.gamma1;
  const double lm = side - t.gamma1;
  const double mx = std::max({l0, lp, lm});
  const double c = mx + std::log(std::exp(l0 - mx) + std::exp(lp - mx) + std::exp(lm - mx));
  return {c, std::exp(lm - c), std::exp(l0 - c), std::exp(lp - c)};
}

// ---------------------------------------------------------------------------
// Grid density integration: adaptive Gauss-Kronrod (7, 15) per grid cell.

constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr double kGridRelTol = 1e-10;

struct Moments3 {
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;
  double s4 = 0.0;
};

class GridIntegrator {
 public:
  GridIntegrator(const GridDensity& g, Tilt t) : g_(g), t_(t) {
    // Shift by the maximum of the exponent: on each cell the exponent is a
    // quadratic, so the maximum is at an endpoint or the vertex.
    shift_ = -kInf;
    centre_ = 0.0;
    auto consider = [&](double x) {
      const double e = exponent_raw(x);
      if (e > shift_) {
        shift_ = e;
        centre_ = x;
      }
    };
    for (std::size_t i = 0; i <= g.cells(); ++i) consider(g.node(i));
    if (t.gamma2 > 0.0) {
      for (std::size_t i = 0; i < g.cells(); ++i) {
        const double slope = (g.potential()[i + 1] - g.potential()[i]) / g.spacing();
        const double xv = (t.gamma1 - slope) / t.gamma2;
        if (xv > g.node(i) && xv < g.node(i + 1)) consider(xv);
      }
    }
  }

  double shift() const { return shift_; }
  double centre() const { return centre_; }

  Moments3 integrate(double lo, double hi) const {
    Moments3 acc;
    if (!(hi > lo)) return acc;
    const double a = g_.half_width();
    const double h = g_.spacing();
    const std::size_t first = static_cast<std::size_t>(
        std::clamp(std::floor((lo + a) / h), 0.0, static_cast<double>(g_.cells() - 1)));
    for (std::size_t i = first; i < g_.cells(); ++i) {
      const double l = std::max(lo, g_.node(i));
      const double r = std::min(hi, g_.node(i + 1));
      if (l >= hi) break;
      if (r > l) add(acc, adaptive(l, r, 0));
    }
    return acc;
  }

  double cell_mass(std::size_t i) const { return adaptive(g_.node(i), g_.node(i + 1), 0).s0; }

 private:
  double exponent_raw(double x) const {
    return t_.gamma1 * x - 0.5 * t_.gamma2 * x * x - g_.potential_at(x);
  }

  static void add(Moments3& a, const Moments3& b) {
    a.s0 += b.s0;
    a.s1 += b.s1;
    a.s2 += b.s2;
    a.s3 += b.s3;
    a.s4 += b.s4;
  }

  Moments3 adaptive(double l, double r, int depth) const {
    const double c = 0.5 * (l + r);
    const double hw = 0.5 * (r - l);
    Moments3 k, gs;
    for (std::size_t j = 0; j < kXgk.size(); ++j) {
      const double dx = hw * kXgk[j];
      const int count = j == kXgk.size() - 1 ? 1 : 2;
      const std::array<double, 2> pts = {c - dx, c + dx};
      for (int s = 0; s < count; ++s) {
        const double x = pts[s];
        const double f = std::exp(exponent_raw(x) - shift_);
        const double y = x - centre_;
        k.s0 += kWgk[j] * f;
        k.s1 += kWgk[j] * f * y;
        k.s2 += kWgk[j] * f * y * y;
        k.s3 += kWgk[j] * f * y * y * y;
        k.s4 += kWgk[j] * f * y * y * y * y;
        if (j % 2 == 1) {
          const double wg = kWg[j / 2];
          gs.s0 += wg * f;
          gs.s2 += wg * f * y * y;
        }
      }
    }
    k.s0 *= hw;
    k.s1 *= hw;
    k.s2 *= hw;
    k.s3 *= hw;
    k.s4 *= hw;
    gs.s0 *= hw;
    gs.s2 *= hw;
    const double tol0 = kGridRelTol * std::abs(k.s0) + 1e-15 * (r - l);
    const double tol2 = kGridRelTol * std::abs(k.s2) + 1e-15 * (r - l);
    if (depth >= 30 || (std::abs(k.s0 - gs.s0) <= tol0 && std::abs(k.s2 - gs.s2) <= tol2)) {
      return k;
    }
    Moments3 left = adaptive(l, c, depth + 1);
    add(left, adaptive(c, r, depth + 1));
    return left;
  }

  const GridDensity& g_;
  Tilt t_;
  double shift_;
  double centre_;
};

TiltedMoments grid_moments(const GridDensity& g, Tilt t) {
  GridIntegrator integ(g, t);
  const Moments3 m = integ.integrate(-g.half_width(), g.half_width());
  const double d1 = m.s1 / m.s0;
  TiltedMoments out;
  out.cgf = std::log(m.s0) + integ.shift() - g.log_mass();
  out.mean = integ.centre() + d1;
  out.variance = std::max(m.s2 / m.s0 - d1 * d1, 0.0);
  return out;
}

}  // namespace

namespace detail {

Cumulants grid_cumulants(const GridDensity& g, Tilt t) {
  GridIntegrator integ(g, t);
  const Moments3 m = integ.integrate(-g.half_width(), g.half_width());
  // raw moments about the centre, then central moments
  const double r1 = m.s1 / m.s0, r2 = m.s2 / m.s0, r3 = m.s3 / m.s0, r4 = m.s4 / m.s0;
  const double c2 = std::max(r2 - r1 * r1, 0.0);
  const double c3 = r3 - 3.0 * r1 * r2 + 2.0 * r1 * r1 * r1;
  const double c4 = r4 - 4.0 * r1 * r3 + 6.0 * r1 * r1 * r2 - 3.0 * r1 * r1 * r1 * r1;
  Cumulants out;
  out.cgf = std::log(m.s0) + integ.shift() - g.log_mass();
  out.mean = integ.centre() + r1;
  out.variance = c2;
  out.k3 = c3;
  out.k4 = c4 - 3.0 * c2 * c2;
  return out;
}

}  // namespace detail

namespace {

double grid_cdf(const GridDensity& g, Tilt t, double x) {
  if (x <= -g.half_width()) return 0.0;
  if (x >= g.half_width()) return 1.0;
  GridIntegrator integ(g, t);
  const double total = integ.integrate(-g.half_width(), g.half_width()).s0;
  return std::clamp(integ.integrate(-g.half_width(), x).s0 / total, 0.0, 1.0);
}

double grid_quantile(const GridDensity& g, Tilt t, double p) {
  GridIntegrator integ(g, t);
  std::vector<double> mass(g.cells());
  double total = 0.0;
  for (std::size_t i = 0; i < g.cells(); ++i) {
    mass[i] = integ.cell_mass(i);
    total += mass[i];
  }
  const double target = p * total;
  double cum = 0.0;
  std::size_t cell = g.cells() - 1;
  for (std::size_t i = 0; i < g.cells(); ++i) {
    if (cum + mass[i] >= target) {
      cell = i;
      break;
    }
    cum += mass[i];
  }
  double lo = g.node(cell);
  double hi = g.node(cell + 1);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cum + integ.integrate(g.node(cell), mid).s0 >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_probability(double t) {
  if (!(t > 0.0 && t < 1.0)) throw InvalidArgument("probability must lie in (0,1)");
}

}  // namespace

// ---------------------------------------------------------------------------

GridDensity::GridDensity(double half_width, std::vector<double> potential)
    : half_width_(half_width), potential_(std::move(potential)) {
  if (!(half_width_ > 0.0) || !std::isfinite(half_width_)) {
    throw InvalidArgument("grid density: half width must be positive and finite");
  }
  if (potential_.size() < 128) throw InvalidArgument("grid density: need at least 128 nodes");
  const std::size_t n = potential_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(potential_[i])) throw InvalidArgument("grid density: non-finite potential");
    const double scale = std::max(1.0, std::abs(potential_[i]));
    if (std::abs(potential_[i] - potential_[n - 1 - i]) > 1e-10 * scale) {
      throw InvalidArgument("grid density: potential must be even");
    }
  }
  spacing_ = 2.0 * half_width_ / static_cast<double>(n - 1);
  log_mass_ = 0.0;
  GridIntegrator integ(*this, Tilt{0.0, 0.0});
  log_mass_ = std::log(integ.integrate(-half_width_, half_width_).s0) + integ.shift();
}

double GridDensity::potential_at(double x) const {
  const double pos = (x + half_width_) / spacing_;
  const double cell = std::clamp(std::floor(pos), 0.0, static_cast<double>(cells() - 1));
  const auto i = static_cast<std::size_t>(cell);
  const double frac = pos - cell;
  return potential_[i] + frac * (potential_[i + 1] - potential_[i]);
}

PriorSpec PriorSpec::spike_slab(double q, double delta2) {
  if (!(q >= 0.0 && q < 1.0)) throw InvalidArgument("spike-and-slab: q must lie in [0,1)");
  if (!(delta2 > 0.0) || !std::isfinite(delta2)) {
    throw InvalidArgument("spike-and-slab: delta2 must be positive");
  }
  return PriorSpec(GaussianSpikeSlab{q, delta2});
}

PriorSpec PriorSpec::gaussian(double delta2) {
  if (!(delta2 > 0.0) || !std::isfinite(delta2)) {
    throw InvalidArgument("gaussian: delta2 must be positive");
  }
  return PriorSpec(GaussianMeanZero{delta2});
}

PriorSpec PriorSpec::three_point(double q) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("three-point: q must lie in (0,1)");
  return PriorSpec(ThreePointDiscrete{q});
}

PriorSpec PriorSpec::grid(double half_width, std::vector<double> potential) {
  return PriorSpec(GridDensity(half_width, std::move(potential)));
}

PriorSpec PriorSpec::grid(double half_width, std::size_t nodes,
                          const std::function<double(double)>& potential) {
  if (nodes < 2) throw InvalidArgument("grid density: need at least 128 nodes");
  std::vector<double> v(nodes);
  const double h = 2.0 * half_width / static_cast<double>(nodes - 1);
  for (std::size_t i = 0; i < nodes; ++i) v[i] = potential(-half_width + h * static_cast<double>(i));
  // symmetrize round-off in the node positions
  for (std::size_t i = 0; i < nodes / 2; ++i) v[nodes - 1 - i] = v[i];
  return grid(half_width, std::move(v));
}

std::string PriorSpec::name() const {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const GaussianSpikeSlab& p) {
                   os << "spike_slab(q=" << p.q << ", delta2=" << p.delta2 << ")";
                 },
                 [&](const GaussianMeanZero& p) { os << "gaussian(delta2=" << p.delta2 << ")"; },
                 [&](const ThreePointDiscrete& p) { os << "three_point(q=" << p.q << ")"; },
                 [&](const GridDensity& p) {
                   os << "grid(a=" << p.half_width() << ", nodes=" << p.potential().size() << ")";
                 },
             },
             kind_);
  return os.str();
}

bool PriorSpec::has_atoms() const {
  if (const auto* p = as<GaussianSpikeSlab>()) return p->q > 0.0;
  return std::holds_alternative<ThreePointDiscrete>(kind_);
}

bool PriorSpec::bounded() const {
  return std::holds_alternative<ThreePointDiscrete>(kind_) ||
         std::holds_alternative<GridDensity>(kind_);
}

double PriorSpec::second_moment() const {
  return std::visit(Overloaded{
                        [](const GaussianSpikeSlab& p) { return (1.0 - p.q) * p.delta2; },
                        [](const GaussianMeanZero& p) { return p.delta2; },
                        [](const ThreePointDiscrete& p) { return 1.0 - p.q; },
                        [](const GridDensity& p) { return grid_moments(p, Tilt{}).variance; },
                    },
                    kind_);
}

Support support(const PriorSpec& prior) {
  return std::visit(Overloaded{
                        [](const GaussianSpikeSlab&) { return Support{-kInf, kInf}; },
                        [](const GaussianMeanZero&) { return Support{-kInf, kInf}; },
                        [](const ThreePointDiscrete&) { return Support{-1.0, 1.0}; },
                        [](const GridDensity& p) {
                          return Support{-p.half_width(), p.half_width()};
                        },
                    },
                    prior.kind());
}

bool normalizable(const PriorSpec& prior, double gamma2) {
  if (const auto* p = prior.as<GaussianSpikeSlab>()) return 1.0 / p->delta2 + gamma2 > 0.0;
  if (const auto* p = prior.as<GaussianMeanZero>()) return 1.0 / p->delta2 + gamma2 > 0.0;
  return std::isfinite(gamma2);
}

TiltedMoments tilted_moments(const PriorSpec& prior, Tilt tilt) {
  return std::visit(
      Overloaded{
          [&](const GaussianSpikeSlab& p) {
            const SpikeSlabTilt s = tilt_spike_slab(p, tilt);
            const double mean = s.w1 * s.m;
            const double var = s.w1 * s.s * s.s + s.w0 * s.w1 * s.m * s.m;
            return TiltedMoments{s.cgf, mean, var};
          },
          [&](const GaussianMeanZero& p) {
            const double a = slab_precision(p.delta2, tilt.gamma2);
            const double c = -0.5 * std::log(p.delta2 * a) + tilt.gamma1 * tilt.gamma1 / (2.0 * a);
            return TiltedMoments{c, tilt.gamma1 / a, 1.0 / a};
          },
          [&](const ThreePointDiscrete& p) {
            const ThreePointTilt s = tilt_three_point(p, tilt);
            const double mean = s.pp - s.pm;
            const double var = s.pp * (s.p0 + s.pm) + s.pm * (s.p0 + s.pp) + 2.0 * s.pp * s.pm;
            return TiltedMoments{s.cgf, mean, var};
          },
          [&](const GridDensity& p) { return grid_moments(p, tilt); },
      },
      prior.kind());
}

double cgf(const PriorSpec& prior, Tilt tilt) {
  if (const auto* p = prior.as<GaussianSpikeSlab>()) return tilt_spike_slab(*p, tilt).cgf;
  if (const auto* p = prior.as<ThreePointDiscrete>()) return tilt_three_point(*p, tilt).cgf;
  return tilted_moments(prior, tilt).cgf;
}

double invert_mean(const PriorSpec& prior, double u, double d) {
  const Support s = support(prior);
  if (!(u > s.lo && u < s.hi) || !std::isfinite(u)) {
    std::ostringstream os;
    os << "invert_mean: u=" << u << " outside the open support of " << prior.name();
    throw OutOfSupport(os.str());
  }
  if (!normalizable(prior, d)) throw NonNormalizable("invert_mean: d is not normalizable");
  if (u == 0.0) return 0.0;
  if (const auto* p = prior.as<GaussianMeanZero>()) return u * (1.0 / p->delta2 + d);

  // Symmetric prior: solve for |u| on gamma1 >= 0 and restore the sign.
  const double target = std::abs(u);
  const double sign = u > 0.0 ? 1.0 : -1.0;
  double lo = 0.0;
  double hi = 1.0;
  TiltedMoments mh = tilted_moments(prior, Tilt{hi, d});
  int expand = 0;
  while (mh.mean < target) {
    lo = hi;
    hi *= 2.0;
    mh = tilted_moments(prior, Tilt{hi, d});
    if (++expand > 80) throw NoConvergence("invert_mean: could not bracket the root");
  }
  const double v0 = tilted_moments(prior, Tilt{0.0, d}).variance;
  double g = std::clamp(target / v0, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const TiltedMoments m = tilted_moments(prior, Tilt{g, d});
    const double f = m.mean - target;
    if (std::abs(f) <= 1e-15 * std::max(1.0, target)) return sign * g;
    if (f < 0.0) {
      lo = g;
    } else {
      hi = g;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return sign * g;
    double next = m.variance > 0.0 ? g - f / m.variance : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    g = next;
  }
  throw NoConvergence("invert_mean: Newton iteration did not converge");
}

double tilted_cdf(const PriorSpec& prior, Tilt tilt, double x) {
  return std::visit(
      Overloaded{
          [&](const GaussianSpikeSlab& p) {
            const SpikeSlabTilt s = tilt_spike_slab(p, tilt);
            return (x >= 0.0 ? s.w0 : 0.0) + s.w1 * normal_cdf((x - s.m) / s.s);
          },
          [&](const GaussianMeanZero& p) {
            const double a = slab_precision(p.delta2, tilt.gamma2);
            return normal_cdf((x - tilt.gamma1 / a) * std::sqrt(a));
          },
          [&](const ThreePointDiscrete& p) {
            const ThreePointTilt s = tilt_three_point(p, tilt);
            if (x < -1.0) return 0.0;
            if (x < 0.0) return s.pm;
            if (x < 1.0) return s.pm + s.p0;
            return 1.0;
          },
          [&](const GridDensity& p) { return grid_cdf(p, tilt, x); },
      },
      prior.kind());
}

double tilted_cdf_left(const PriorSpec& prior, Tilt tilt, double x) {
  return std::visit(
      Overloaded{
          [&](const GaussianSpikeSlab& p) {
            const SpikeSlabTilt s = tilt_spike_slab(p, tilt);
            return (x > 0.0 ? s.w0 : 0.0) + s.w1 * normal_cdf((x - s.m) / s.s);
          },
          [&](const GaussianMeanZero&) { return tilted_cdf(prior, tilt, x); },
          [&](const ThreePointDiscrete& p) {
            const ThreePointTilt s = tilt_three_point(p, tilt);
            if (x <= -1.0) return 0.0;
            if (x <= 0.0) return s.pm;
            if (x <= 1.0) return s.pm + s.p0;
            return 1.0;
          },
          [&](const GridDensity& p) { return grid_cdf(p, tilt, x); },
      },
      prior.kind());
}

double tilted_quantile(const PriorSpec& prior, Tilt tilt, double t) {
  require_probability(t);
  return std::visit(
      Overloaded{
          [&](const GaussianSpikeSlab& p) {
            const SpikeSlabTilt s = tilt_spike_slab(p, tilt);
            if (s.w1 <= 0.0) return 0.0;
            const double below = s.w1 * normal_cdf(-s.m / s.s);  // P(X < 0)
            if (t <= below) return s.m + s.s * normal_quantile(std::min(t / s.w1, 1.0 - 1e-17));
            if (t <= below + s.w0) return 0.0;
            const double r = (t - s.w0) / s.w1;
            if (r >= 1.0) return 0.0;
            return std::max(0.0, s.m + s.s * normal_quantile(r));
          },
          [&](const GaussianMeanZero& p) {
            const double a = slab_precision(p.delta2, tilt.gamma2);
            return tilt.gamma1 / a + normal_quantile(t) / std::sqrt(a);
          },
          [&](const ThreePointDiscrete& p) {
            const ThreePointTilt s = tilt_three_point(p, tilt);
            if (t <= s.pm) return -1.0;
            if (t <= s.pm + s.p0) return 0.0;
            return 1.0;
          },
          [&](const GridDensity& p) { return grid_quantile(p, tilt, t); },
      },
      prior.kind());
}

void sample(const PriorSpec& prior, std::mt19937_64& rng, std::span<double> out) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::visit(Overloaded{
                 [&](const GaussianSpikeSlab& p) {
                   const double sd = std::sqrt(p.delta2);
                   for (double& x : out) x = unif(rng) < p.q ? 0.0 : sd * normal(rng);
                 },
                 [&](const GaussianMeanZero& p) {
                   const double sd = std::sqrt(p.delta2);
                   for (double& x : out) x = sd * normal(rng);
                 },
                 [&](const ThreePointDiscrete& p) {
                   for (double& x : out) {
                     const double v = unif(rng);
                     x = v < p.q ? 0.0 : (v < p.q + 0.5 * (1.0 - p.q) ? -1.0 : 1.0);
                   }
                 },
                 [&](const GridDensity& p) {
                   // rejection from the uniform proposal on [-a, a]
                   const auto& v = p.potential();
                   const double vmin = *std::min_element(v.begin(), v.end());
                   std::uniform_real_distribution<double> prop(-p.half_width(), p.half_width());
                   for (double& x : out) {
                     for (;;) {
                       const double c = prop(rng);
                       if (unif(rng) <= std::exp(vmin - p.potential_at(c))) {
                         x = c;
                         break;
                       }
                     }
                   }
                 },
             },
             prior.kind());
}

std::vector<double> sample(const PriorSpec& prior, std::uint64_t seed, std::size_t m) {
  std::mt19937_64 rng(seed);
  std::vector<double> out(m);
  sample(prior, rng, out);
  return out;
}

}  // namespace nmf
