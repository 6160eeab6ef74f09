#include "nmf/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>

#include "nmf/errors.hpp"

namespace nmf {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double laplace_draw(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  double v = unif(rng);
  while (v == -0.5) v = unif(rng);
  return -scale * std::copysign(1.0, v) * std::log1p(-2.0 * std::abs(v));
}

// Largest curvature of u -> G(u, d) - d u^2 / 2 over a probe grid, for d at the
// extremes of the observed d_i.
double penalty_curvature_bound(const PriorSpec& prior, double dmin, double dmax) {
  const Support s = support(prior);
  double lo;
  double hi;
  if (std::isfinite(s.lo)) {
    lo = s.lo + 1e-3 * (s.hi - s.lo);
    hi = s.hi - 1e-3 * (s.hi - s.lo);
  } else {
    lo = tilted_quantile(prior, Tilt{}, 1e-3);
    hi = -lo;
  }
  double best = 0.0;
  for (double d : {dmin, dmax}) {
    for (int i = 0; i <= 200; ++i) {
      const double u = lo + (hi - lo) * i / 200.0;
      const double h = invert_mean(prior, u, d);
      best = std::max(best, 1.0 / tilted_moments(prior, Tilt{h, d}).variance - d);
    }
  }
  return best;
}

double operator_norm_sq(const Eigen::MatrixXd& X) {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(X.cols(), 1.0 / std::sqrt(static_cast<double>(X.cols())));
  double lambda = 0.0;
  for (int it = 0; it < 60; ++it) {
    Eigen::VectorXd w = X.transpose() * (X * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    lambda = nw;
    v = w / nw;
  }
  return lambda;
}

}  // namespace

const char* to_string(Design d) { return d == Design::GaussianIID ? "gaussian" : "laplace"; }

Design design_from_string(const std::string& s) {
  if (s == "gaussian" || s == "GaussianIID") return Design::GaussianIID;
  if (s == "laplace" || s == "LaplaceIID") return Design::LaplaceIID;
  throw InvalidArgument("unknown design " + s);
}

void SimConfig::validate() const {
  if (n < 1 || p < 1) throw InvalidArgument("sim: n and p must be positive");
  if (replicates < 1) throw InvalidArgument("sim.replicates must be positive");
  if (!(optimizer.grad_tol > 0.0)) throw InvalidArgument("sim.grad_tol must be positive");
  if (optimizer.max_iter < 1) throw InvalidArgument("sim.max_iter must be positive");
  if (channel_samples < 2) throw InvalidArgument("sim.channel_samples must be at least 2");
  if (projections < 1) throw InvalidArgument("sim.projections must be positive");
  for (double z : zeta_list) {
    if (!(z > 0.0 && z < 1.0)) throw InvalidArgument("coverage zetas must lie in (0, 1)");
  }
}

Dataset gen_data(const ProblemSpec& problem, const SimConfig& cfg) {
  return gen_data(problem, cfg, cfg.seed);
}

Dataset gen_data(const ProblemSpec& problem, const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(cfg.n);
  const auto p = static_cast<Eigen::Index>(cfg.p);
  std::mt19937_64 rng(seed);
  Dataset ds;
  ds.beta_star.resize(p);
  sample(problem.truth(), rng, std::span<double>(ds.beta_star.data(), cfg.p));
  ds.X.resize(n, p);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(cfg.n));
  if (cfg.design == Design::GaussianIID) {
    std::normal_distribution<double> normal(0.0, inv_sqrt_n);
    for (Eigen::Index j = 0; j < p; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) ds.X(i, j) = normal(rng);
    }
  } else {
    const double scale = inv_sqrt_n / std::sqrt(2.0);
    for (Eigen::Index j = 0; j < p; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) ds.X(i, j) = laplace_draw(rng, scale);
    }
  }
  std::normal_distribution<double> noise(0.0, problem.sigma());
  ds.epsilon.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) ds.epsilon(i) = noise(rng);
  ds.y = ds.X * ds.beta_star + ds.epsilon;
  ds.d = ds.X.colwise().squaredNorm().transpose() / problem.sigma2();
  return ds;
}

NmfObjective::NmfObjective(const ProblemSpec& problem, const Dataset& ds) : problem_(problem), ds_(ds) {
  c0_.resize(ds.d.size());
  for (Eigen::Index i = 0; i < ds.d.size(); ++i) c0_(i) = cgf(problem.prior(), Tilt{0.0, ds.d(i)});
}

NmfObjective::Value NmfObjective::operator()(const Eigen::VectorXd& u) const {
  const PriorSpec& prior = problem_.prior();
  const Support s = support(prior);
  const Eigen::Index p = u.size();
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!(u(i) > s.lo && u(i) < s.hi)) throw OutOfSupport("NMF objective: coordinate outside the support");
  }
  const double s2 = problem_.sigma2();
  const Eigen::VectorXd r = ds_.X * u - ds_.y;
  Value out;
  out.gradient = ds_.X.transpose() * r / s2;
  Eigen::VectorXd pen(p);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(p));
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < p; ++i) {
    try {
      const double ui = u(i);
      const double di = ds_.d(i);
      if (ui == 0.0) {
        pen(i) = 0.0;
        continue;
      }
      const double h = invert_mean(prior, ui, di);
      const double g = std::max(ui * h - cgf(prior, Tilt{h, di}) + c0_(i), 0.0);
      pen(i) = g - di * ui * ui / 2.0;
      out.gradient(i) += h - di * ui;
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  out.value = r.squaredNorm() / (2.0 * s2) + pen.sum();
  return out;
}

double NmfObjective::value_or_inf(const Eigen::VectorXd& u) const {
  try {
    return (*this)(u).value;
  } catch (const OutOfSupport&) {
    return kInf;
  }
}

NmfObjective::Value nmf_objective(const ProblemSpec& problem, const Dataset& ds, const Eigen::VectorXd& u) {
  return NmfObjective(problem, ds)(u);
}

MinimizeResult minimize_nmf(const ProblemSpec& problem, const Dataset& ds, const OptimizerOptions& opts) {
  const NmfObjective obj(problem, ds);
  const double curvature = penalty_curvature_bound(problem.prior(), ds.d.minCoeff(), ds.d.maxCoeff());
  MinimizeResult res;
  res.lipschitz_estimate = 1.02 * operator_norm_sq(ds.X) / problem.sigma2() + curvature;
  const double step0 = 1.0 / res.lipschitz_estimate;

  Eigen::VectorXd u = Eigen::VectorXd::Zero(ds.X.cols());
  NmfObjective::Value cur = obj(u);
  for (int it = 0; it < opts.max_iter; ++it) {
    const double gn2 = cur.gradient.squaredNorm();
    res.iterations = it;
    if (std::sqrt(gn2) < opts.grad_tol) break;
    const double slack = 1e-12 * std::max(1.0, std::abs(cur.value));
    double step = step0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      const Eigen::VectorXd trial = u - step * cur.gradient;
      try {
        NmfObjective::Value next = obj(trial);
        if (next.value <= cur.value - opts.armijo_c * step * gn2 + slack) {
          if (next.value > cur.value + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(cur.value)) {
            ++res.objective_increases;
          }
          u = trial;
          cur = std::move(next);
          accepted = true;
          break;
        }
      } catch (const OutOfSupport&) {
      }
      step *= opts.shrink;
    }
    res.iterations = it + 1;
    if (!accepted) break;
  }
  res.u = std::move(u);
  res.value = cur.value;
  res.grad_norm = cur.gradient.norm();
  res.converged = res.grad_norm < opts.grad_tol;
  return res;
}

double w2_squared_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("w2: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  // quantile functions are constant on [i/na, (i+1)/na) and [j/nb, (j+1)/nb);
  // positions are tracked in units of 1/(na nb)
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t pos = 0;
  double acc = 0.0;
  while (i < na && j < nb) {
    const std::size_t ea = (i + 1) * nb;
    const std::size_t eb = (j + 1) * na;
    const std::size_t next = std::min(ea, eb);
    const double diff = a[i] - b[j];
    acc += diff * diff * static_cast<double>(next - pos);
    pos = next;
    if (ea == next) ++i;
    if (eb == next) ++j;
  }
  return acc / (static_cast<double>(na) * static_cast<double>(nb));
}

double w2_sliced(const std::vector<double>& ax, const std::vector<double>& ay,
                 const std::vector<double>& bx, const std::vector<double>& by, int projections,
                 std::uint64_t seed) {
  if (ax.size() != ay.size() || bx.size() != by.size()) throw InvalidArgument("w2_sliced: size mismatch");
  if (ax.size() < 2 || bx.size() < 2) throw InvalidArgument("w2_sliced: need at least two points");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::vector<double> thetas(static_cast<std::size_t>(projections));
  for (double& t : thetas) t = angle(rng);
  std::vector<double> vals(thetas.size());
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    const double c = std::cos(thetas[k]);
    const double s = std::sin(thetas[k]);
    std::vector<double> pa(ax.size());
    std::vector<double> pb(bx.size());
    for (std::size_t i = 0; i < ax.size(); ++i) pa[i] = c * ax[i] + s * ay[i];
    for (std::size_t i = 0; i < bx.size(); ++i) pb[i] = c * bx[i] + s * by[i];
    vals[k] = w2_squared_1d(std::move(pa), std::move(pb));
  }
  double total = 0.0;
  for (double v : vals) total += v;
  return total / static_cast<double>(vals.size());
}

double exact_logz_gaussian(const Dataset& ds, double delta2, double sigma2) {
  const Eigen::Index p = ds.X.cols();
  const double ratio = delta2 / sigma2;
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(p, p);
  M.selfadjointView<Eigen::Lower>().rankUpdate(ds.X.transpose(), ratio);
  const Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw NonFinite("exact_logz_gaussian: factorization failed");
  const Eigen::VectorXd v = ds.X.transpose() * ds.y;
  const double quad = v.dot(llt.solve(v));
  const Eigen::MatrixXd L = llt.matrixL();
  const double logdet = 2.0 * L.diagonal().array().log().sum();
  const double pd = static_cast<double>(p);
  return (ds.y.squaredNorm() - ratio * quad) / (2.0 * pd * sigma2) + logdet / (2.0 * pd);
}

double exact_logz_gaussian(const Dataset& ds, const PriorSpec& prior, double sigma2) {
  const auto* g = prior.as<GaussianMeanZero>();
  if (!g) throw NotGaussianPrior("exact evidence needs a Gaussian prior, got " + prior.name());
  return exact_logz_gaussian(ds, g->delta2, sigma2);
}

SimResult empirical_metrics(const ScalarModel& model, const Dataset& ds, const MinimizeResult& fit,
                            const FixedPointSolution& sol, const SimConfig& cfg,
                            const ChannelSample& channel) {
  const ProblemSpec& pr = model.problem();
  const PriorSpec& prior = pr.prior();
  const Eigen::VectorXd& u = fit.u;
  const auto p = static_cast<std::size_t>(u.size());
  SimResult r;
  r.n = static_cast<std::size_t>(ds.X.rows());
  r.p = p;
  r.u_hat = u;
  r.mse_emp = (u - ds.beta_star).squaredNorm() / static_cast<double>(p);
  const NmfObjective obj(pr, ds);
  r.neg_log_z_nmf_per_p = (obj(u).value - obj.sum_c0()) / static_cast<double>(p);
  if (cfg.exact_evidence && prior.as<GaussianMeanZero>()) r.neg_log_z_exact_per_p = exact_logz_gaussian(ds, prior, pr.sigma2());

  r.zeta_list = cfg.zeta_list;
  for (double zeta : cfg.zeta_list) {
    std::size_t hit = 0;
    std::size_t hit_corrected = 0;
    for (std::size_t i = 0; i < p; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double di = ds.d(ii);
      const double h = invert_mean(prior, u(ii), di);
      const double lo = tilted_quantile(prior, Tilt{h, di}, zeta / 2.0);
      const double hi = tilted_quantile(prior, Tilt{h, di}, 1.0 - zeta / 2.0);
      const double b = ds.beta_star(ii);
      if (lo <= b && b <= hi) ++hit;
      const auto ci = corrected_interval(model, sol, zeta, u(ii));
      if (ci.first <= b && b <= ci.second) ++hit_corrected;
    }
    r.coverage_emp.push_back(static_cast<double>(hit) / static_cast<double>(p));
    r.coverage_corrected_emp.push_back(static_cast<double>(hit_corrected) / static_cast<double>(p));
  }

  const std::vector<double> uh(u.data(), u.data() + p);
  const std::vector<double> bs(ds.beta_star.data(), ds.beta_star.data() + p);
  r.w2_sliced = w2_sliced(uh, bs, channel.eta, channel.b, cfg.projections, cfg.seed + 7919);
  r.w2_marginal = w2_squared_1d(uh, channel.eta);
  r.d_max_deviation = (ds.d.array() - 1.0 / pr.sigma2()).abs().maxCoeff();
  r.grad_norm_final = fit.grad_norm;
  r.iterations = fit.iterations;
  r.converged = fit.converged;
  r.objective_increases = fit.objective_increases;
  return r;
}

std::vector<SimResult> run_replicates(const ScalarModel& model, const FixedPointSolution& sol,
                                      const SimConfig& cfg) {
  cfg.validate();
  const ChannelSample channel =
      sample_channel(model, ChannelLaw{sol.tau_star, sol.kappa_star}, cfg.seed, cfg.channel_samples);
  std::vector<SimResult> out(static_cast<std::size_t>(cfg.replicates));
  std::vector<std::exception_ptr> errors(out.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t r = 0; r < out.size(); ++r) {
    try {
      const std::uint64_t seed = cfg.seed + r;
      const Dataset ds = gen_data(model.problem(), cfg, seed);
      const MinimizeResult fit = minimize_nmf(model.problem(), ds, cfg.optimizer);
      out[r] = empirical_metrics(model, ds, fit, sol, cfg, channel);
      out[r].seed = seed;
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace nmf
