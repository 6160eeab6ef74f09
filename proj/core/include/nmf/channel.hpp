#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <sstream>
#include <vector>

#include "nmf/errors.hpp"
#include "nmf/meanfield.hpp"
#include "nmf/normal.hpp"
#include "nmf/prox.hpp"

namespace nmf {

enum class SlabStrategy { GaussHermite, MonteCarlo };

struct QuadratureScheme {
  int hermite_nodes = 61;
  SlabStrategy slab = SlabStrategy::GaussHermite;
  int slab_nodes = 61;
  std::size_t mc_samples = 20000;
  std::uint64_t seed = 20240601;

  /// Throws InvalidArgument: node counts must be odd and >= 21, mc_samples >= 1e4.
  void validate() const;
};

/// Gauss-Hermite rule for Z ~ N(0, 1).
NodeSet z_nodes(const QuadratureScheme& scheme);
/// Rule for B ~ truth: exact atoms, Gauss-Hermite on Gaussian slabs, seeded
/// Monte Carlo for grid densities (and for slabs when requested).
NodeSet b_nodes(const PriorSpec& truth, const QuadratureScheme& scheme);

/// sum_i sum_j wb_i wz_j f(i, b_i, z_j) for K outputs at once. Rows in b are
/// evaluated in parallel and summed in node order.
template <std::size_t K, class Fn>
std::array<double, K> expect_indexed(const NodeSet& bn, const NodeSet& zn, Fn&& f) {
  const std::size_t nb = bn.size();
  std::vector<std::array<double, K>> rows(nb);
  std::vector<int> bad(nb, 0);
  std::vector<std::exception_ptr> errors(nb);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < nb; ++i) {
    try {
      std::array<double, K> acc{};
      for (std::size_t j = 0; j < zn.size(); ++j) {
        const std::array<double, K> v = f(i, bn.x[i], zn.x[j]);
        for (std::size_t k = 0; k < K; ++k) {
          if (!std::isfinite(v[k])) bad[i] = 1;
          acc[k] += zn.w[j] * v[k];
        }
      }
      rows[i] = acc;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  std::array<double, K> total{};
  for (std::size_t i = 0; i < nb; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    if (bad[i]) {
      std::ostringstream os;
      os << "non-finite integrand at B=" << bn.x[i];
      throw NonFinite(os.str());
    }
    for (std::size_t k = 0; k < K; ++k) total[k] += bn.w[i] * rows[i][k];
  }
  return total;
}

/// E f(B, Z) for (B, Z) ~ truth x N(0, 1).
double expect_bz(const ProblemSpec& problem, const QuadratureScheme& scheme,
                 const std::function<double(double, double)>& f);

/// Problem, certified penalty, and cached quadrature nodes.
class ScalarModel {
 public:
  ScalarModel(ProblemSpec problem, QuadratureScheme scheme = {});
  ScalarModel(ProblemSpec problem, QuadratureScheme scheme, ConvexityReport report);

  const ProblemSpec& problem() const { return problem_; }
  const Penalty& penalty() const { return penalty_; }
  const QuadratureScheme& scheme() const { return scheme_; }
  const NodeSet& bnodes() const { return bnodes_; }
  const NodeSet& znodes() const { return znodes_; }
  /// F(B) at the i-th B node.
  double penalty_at_b(std::size_t i) const { return f_at_b_[i]; }

  template <std::size_t K, class Fn>
  std::array<double, K> expect(Fn&& f) const {
    return expect_indexed<K>(bnodes_, znodes_, std::forward<Fn>(f));
  }
  double expect(const std::function<double(double, double)>& f) const;

 private:
  void cache();

  ProblemSpec problem_;
  QuadratureScheme scheme_;
  Penalty penalty_;
  NodeSet bnodes_;
  NodeSet znodes_;
  std::vector<double> f_at_b_;
};

/// Limit law of (eta(tau* Z + B, kappa*), B).
struct ChannelLaw {
  double tau_star;
  double kappa_star;
};

struct ChannelSample {
  std::vector<double> eta;
  std::vector<double> b;
};

/// m iid draws of (eta(tau* Z + B, kappa*), B), deterministic in seed.
ChannelSample sample_channel(const ScalarModel& model, const ChannelLaw& law, std::uint64_t seed,
                             std::size_t m);

}  // namespace nmf
