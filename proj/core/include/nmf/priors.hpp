#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace nmf {

/// q * delta_0 + (1 - q) * N(0, delta2).
struct GaussianSpikeSlab {
  double q;
  double delta2;
};

/// N(0, delta2).
struct GaussianMeanZero {
  double delta2;
};

/// q * delta_0 + (1 - q)/2 * (delta_{-1} + delta_{+1}).
struct ThreePointDiscrete {
  double q;
};

/// Density proportional to exp(-V(x)) on [-a, a], where V is given at
/// equally spaced nodes and interpolated linearly in between.
class GridDensity {
 public:
  GridDensity(double half_width, std::vector<double> potential);

  double half_width() const { return half_width_; }
  const std::vector<double>& potential() const { return potential_; }
  std::size_t cells() const { return potential_.size() - 1; }
  double spacing() const { return spacing_; }
  double node(std::size_t i) const { return -half_width_ + spacing_ * static_cast<double>(i); }
  /// Linear interpolant of V.
  double potential_at(double x) const;
  /// log of the integral of exp(-V) over [-a, a].
  double log_mass() const { return log_mass_; }

 private:
  double half_width_;
  std::vector<double> potential_;
  double spacing_;
  double log_mass_ = 0.0;
};

struct Tilt {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
};

struct TiltedMoments {
  double cgf;
  double mean;
  double variance;
};

struct Support {
  double lo;
  double hi;
};

/// A symmetric prior on the real line or on a bounded interval.
class PriorSpec {
 public:
  using Kind = std::variant<GaussianSpikeSlab, GaussianMeanZero, ThreePointDiscrete, GridDensity>;

  static PriorSpec spike_slab(double q, double delta2);
  static PriorSpec gaussian(double delta2);
  static PriorSpec three_point(double q);
  static PriorSpec grid(double half_width, std::vector<double> potential);
  /// Samples V on `nodes` equally spaced points of [-a, a].
  static PriorSpec grid(double half_width, std::size_t nodes,
                        const std::function<double(double)>& potential);

  const Kind& kind() const { return kind_; }
  template <class T>
  const T* as() const {
    return std::get_if<T>(&kind_);
  }

  std::string name() const;
  bool has_atoms() const;
  bool bounded() const;
  /// E[X^2] under the untilted prior.
  double second_moment() const;

 private:
  explicit PriorSpec(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

/// (m(pi), M(pi)); infinite endpoints for unbounded kinds.
Support support(const PriorSpec& prior);

/// True when gamma2 gives a finite tilted measure.
bool normalizable(const PriorSpec& prior, double gamma2);

/// c(gamma) = log of the integral of exp(gamma1 x - gamma2 x^2 / 2) pi(dx).
double cgf(const PriorSpec& prior, Tilt tilt);

/// cgf together with the mean and variance of the tilted law.
TiltedMoments tilted_moments(const PriorSpec& prior, Tilt tilt);

/// h(u, d): the gamma1 whose (gamma1, d)-tilt has mean u.
double invert_mean(const PriorSpec& prior, double u, double d);

/// P(X <= x) under the tilted law.
double tilted_cdf(const PriorSpec& prior, Tilt tilt, double x);
/// P(X < x) under the tilted law.
double tilted_cdf_left(const PriorSpec& prior, Tilt tilt, double x);

/// Generalized inverse inf{x : CDF(x) >= t}.
double tilted_quantile(const PriorSpec& prior, Tilt tilt, double t);

/// m iid draws, deterministic in seed.
std::vector<double> sample(const PriorSpec& prior, std::uint64_t seed, std::size_t m);
/// Fills `out` with iid draws from the caller's stream.
void sample(const PriorSpec& prior, std::mt19937_64& rng, std::span<double> out);

}  // namespace nmf
