#include "nmf/channel.hpp"

#include <cmath>
#include <random>

namespace nmf {
namespace {

void append_gaussian(NodeSet& out, double variance, double mass, const QuadratureScheme& scheme,
                     std::uint64_t seed) {
  const double sd = std::sqrt(variance);
  if (scheme.slab == SlabStrategy::GaussHermite) {
    const NodeSet gh = gauss_hermite_normal(scheme.slab_nodes);
    for (std::size_t i = 0; i < gh.size(); ++i) {
      out.x.push_back(sd * gh.x[i]);
      out.w.push_back(mass * gh.w[i]);
    }
    return;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double w = mass / static_cast<double>(scheme.mc_samples);
  for (std::size_t i = 0; i < scheme.mc_samples; ++i) {
    out.x.push_back(sd * normal(rng));
    out.w.push_back(w);
  }
}

}  // namespace

void QuadratureScheme::validate() const {
  auto check_nodes = [](int n, const char* what) {
    if (n < 21 || n % 2 == 0) {
      throw InvalidArgument(std::string(what) + " must be odd and at least 21");
    }
  };
  check_nodes(hermite_nodes, "quad.hermite_nodes");
  if (slab == SlabStrategy::GaussHermite) check_nodes(slab_nodes, "quad.slab_nodes");
  if (mc_samples < 10000) throw InvalidArgument("quad.mc_samples must be at least 10000");
}

NodeSet z_nodes(const QuadratureScheme& scheme) { return gauss_hermite_normal(scheme.hermite_nodes); }

NodeSet b_nodes(const PriorSpec& truth, const QuadratureScheme& scheme) {
  NodeSet out;
  if (const auto* p = truth.as<GaussianSpikeSlab>()) {
    if (p->q > 0.0) {
      out.x.push_back(0.0);
      out.w.push_back(p->q);
    }
    append_gaussian(out, p->delta2, 1.0 - p->q, scheme, scheme.seed);
  } else if (const auto* p = truth.as<GaussianMeanZero>()) {
    append_gaussian(out, p->delta2, 1.0, scheme, scheme.seed);
  } else if (const auto* p = truth.as<ThreePointDiscrete>()) {
    out.x = {-1.0, 0.0, 1.0};
    out.w = {(1.0 - p->q) / 2.0, p->q, (1.0 - p->q) / 2.0};
  } else {
    out.x = sample(truth, scheme.seed, scheme.mc_samples);
    out.w.assign(out.x.size(), 1.0 / static_cast<double>(out.x.size()));
  }
  return out;
}

double expect_bz(const ProblemSpec& problem, const QuadratureScheme& scheme,
                 const std::function<double(double, double)>& f) {
  scheme.validate();
  const NodeSet bn = b_nodes(problem.truth(), scheme);
  const NodeSet zn = z_nodes(scheme);
  return expect_indexed<1>(bn, zn, [&](std::size_t, double b, double z) {
    return std::array<double, 1>{f(b, z)};
  })[0];
}

ScalarModel::ScalarModel(ProblemSpec problem, QuadratureScheme scheme)
    : problem_(std::move(problem)),
      scheme_(scheme),
      penalty_(problem_.prior(), problem_.sigma2()) {
  cache();
}

ScalarModel::ScalarModel(ProblemSpec problem, QuadratureScheme scheme, ConvexityReport report)
    : problem_(std::move(problem)),
      scheme_(scheme),
      penalty_(problem_.prior(), problem_.sigma2(), std::move(report)) {
  cache();
}

void ScalarModel::cache() {
  scheme_.validate();
  bnodes_ = b_nodes(problem_.truth(), scheme_);
  znodes_ = z_nodes(scheme_);
  f_at_b_.resize(bnodes_.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < bnodes_.size(); ++i) f_at_b_[i] = penalty_.value(bnodes_.x[i]);
}

double ScalarModel::expect(const std::function<double(double, double)>& f) const {
  return expect<1>([&](std::size_t, double b, double z) { return std::array<double, 1>{f(b, z)}; })[0];
}

ChannelSample sample_channel(const ScalarModel& model, const ChannelLaw& law, std::uint64_t seed,
                             std::size_t m) {
  if (m < 1) throw InvalidArgument("sample_channel: m must be at least 1");
  std::mt19937_64 rng(seed);
  ChannelSample out;
  out.b.resize(m);
  out.eta.resize(m);
  sample(model.problem().truth(), rng, out.b);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(m);
  for (double& v : z) v = normal(rng);
  std::vector<std::exception_ptr> errors(m);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < m; ++i) {
    try {
      out.eta[i] = eta(model.penalty(), law.tau_star * z[i] + out.b[i], law.kappa_star);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace nmf
