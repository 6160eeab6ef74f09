#include "nmf/predictions.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <sstream>

namespace nmf {
namespace {

constexpr double kZLimit = 40.0;
constexpr int kBisect = 64;

void require_converged(const FixedPointSolution& sol) {
  if (!sol.converged) throw InvalidArgument("prediction needs a converged fixed point");
}

void require_zeta(double zeta) {
  if (!(zeta > 0.0 && zeta < 1.0)) throw InvalidArgument("zeta must lie in (0, 1)");
}

// Largest z in [-L, L] with pred(z) true, for pred true on a left ray.
double right_edge(const std::function<bool(double)>& pred) {
  if (pred(kZLimit)) return std::numeric_limits<double>::infinity();
  if (!pred(-kZLimit)) return -std::numeric_limits<double>::infinity();
  double lo = -kZLimit;
  double hi = kZLimit;
  for (int i = 0; i < kBisect; ++i) {
    const double mid = 0.5 * (lo + hi);
    (pred(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Smallest z with pred(z) true, for pred true on a right ray.
double left_edge(const std::function<bool(double)>& pred) {
  return -right_edge([&](double z) { return pred(-z); });
}

double phi_cdf(double z) {
  if (z == std::numeric_limits<double>::infinity()) return 1.0;
  if (z == -std::numeric_limits<double>::infinity()) return 0.0;
  return normal_cdf(z);
}

// E over B of P_Z(lower(B, Z) <= B <= upper(B, Z)) where lower and upper are
// nondecreasing in Z: the covered Z set is an interval.
double interval_probability(const NodeSet& bn,
                            const std::function<double(double, double)>& lower,
                            const std::function<double(double, double)>& upper) {
  std::vector<double> part(bn.size());
  std::vector<std::exception_ptr> errors(bn.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < bn.size(); ++i) {
    try {
      const double b = bn.x[i];
      const double za = right_edge([&](double z) { return lower(b, z) <= b; });
      const double zc = left_edge([&](double z) { return upper(b, z) >= b; });
      part[i] = std::max(0.0, phi_cdf(za) - phi_cdf(zc));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < bn.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    total += bn.w[i] * part[i];
  }
  return total;
}

}  // namespace

double predict_mse(const ScalarModel& model, const FixedPointSolution& sol) {
  require_converged(sol);
  const ProblemSpec& pr = model.problem();
  const double mse = pr.alpha() * (sol.tau_star * sol.tau_star - pr.sigma2());
  const double t = sol.kappa_star;
  const double direct = model.expect([&](double b, double z) {
    const double w = eta(model.penalty(), sol.tau_star * z + b, t);
    return (w - b) * (w - b);
  });
  if (std::abs(direct - mse) > 1e-8 * std::max(1.0, mse)) {
    std::ostringstream os;
    os << std::setprecision(12) << "alpha (tau*^2 - sigma2) = " << mse << " but E(eta - B)^2 = " << direct;
    throw VerificationFailed(os.str());
  }
  return mse;
}

double predict_neg_log_z(const ScalarModel& model, const FixedPointSolution& sol) {
  require_converged(sol);
  const ProblemSpec& pr = model.problem();
  const Penalty& pen = model.penalty();
  const double ef = model.expect([&](double b, double z) {
    const ProxPoint p = prox(pen, b + sol.tau_star * z, sol.kappa_star);
    return pen.value_from_natural(p.w, p.natural);
  });
  return pr.alpha() * sol.b_star * sol.b_star / (2.0 * pr.sigma2()) + ef - pen.c0();
}

double predict_coverage(const ScalarModel& model, const FixedPointSolution& sol, double zeta) {
  require_converged(sol);
  require_zeta(zeta);
  const Penalty& pen = model.penalty();
  const double d = pen.precision();
  auto quant = [&](double b, double z, double t) {
    const double g = prox(pen, sol.tau_star * z + b, sol.kappa_star).natural;
    return tilted_quantile(pen.prior(), Tilt{g, d}, t);
  };
  return interval_probability(
      model.bnodes(), [&](double b, double z) { return quant(b, z, zeta / 2.0); },
      [&](double b, double z) { return quant(b, z, 1.0 - zeta / 2.0); });
}

double conditional_quantile(const ScalarModel& model, const FixedPointSolution& sol, double t,
                            double x) {
  require_converged(sol);
  const double s = eta_inverse(model.penalty(), x, sol.kappa_star);
  const double v = sol.tau_star * sol.tau_star;
  return tilted_quantile(model.problem().truth(), Tilt{s / v, 1.0 / v}, t);
}

std::pair<double, double> corrected_interval(const ScalarModel& model, const FixedPointSolution& sol,
                                             double zeta, double x) {
  require_zeta(zeta);
  return {conditional_quantile(model, sol, zeta / 2.0, x),
          conditional_quantile(model, sol, 1.0 - zeta / 2.0, x)};
}

double corrected_coverage(const ScalarModel& model, const FixedPointSolution& sol, double zeta) {
  require_converged(sol);
  require_zeta(zeta);
  const PriorSpec& truth = model.problem().truth();
  const double tau = sol.tau_star;
  const double v = tau * tau;
  // eta is increasing, so conditioning on eta(s) is conditioning on s = tau Z + B.
  auto quant = [&](double b, double z, double t) {
    return tilted_quantile(truth, Tilt{(tau * z + b) / v, 1.0 / v}, t);
  };
  return interval_probability(
      model.bnodes(), [&](double b, double z) { return quant(b, z, zeta / 2.0); },
      [&](double b, double z) { return quant(b, z, 1.0 - zeta / 2.0); });
}

double Predictions::coverage_at(double zeta) const {
  for (std::size_t k = 0; k < zeta_list.size(); ++k) {
    if (std::abs(zeta_list[k] - zeta) < 1e-12) return coverage[k];
  }
  throw InvalidArgument("no coverage prediction stored for this zeta");
}

Predictions predict(const ScalarModel& model, const FixedPointSolution& sol,
                    const std::vector<double>& zetas) {
  Predictions out;
  out.mse = predict_mse(model, sol);
  out.neg_log_z_per_p = predict_neg_log_z(model, sol);
  out.zeta_list = zetas;
  for (double z : zetas) {
    out.coverage.push_back(predict_coverage(model, sol, z));
    out.corrected_coverage.push_back(corrected_coverage(model, sol, z));
  }
  if (model.problem().prior().has_atoms()) {
    out.warnings.push_back(
        "fitted prior has atoms: its quantile function is discontinuous, so the coverage limit is "
        "computed without the continuity condition it normally relies on");
  }
  if (!sol.multi_start_agreement) {
    out.warnings.push_back("fixed-point starts disagree; predictions use the candidate maximizing psi");
  }
  return out;
}

std::string predictions_csv_header() {
  return "q,delta2,alpha,sigma2,b_star,tau_star,mse,neg_log_z,coverage_95";
}

std::string predictions_csv_row(const ScalarModel& model, const FixedPointSolution& sol,
                                const Predictions& pred) {
  const ProblemSpec& pr = model.problem();
  std::ostringstream os;
  os << std::setprecision(10);
  const PriorSpec& prior = pr.prior();
  if (const auto* p = prior.as<GaussianSpikeSlab>()) {
    os << p->q << ',' << p->delta2;
  } else if (const auto* p = prior.as<GaussianMeanZero>()) {
    os << 0 << ',' << p->delta2;
  } else if (const auto* p = prior.as<ThreePointDiscrete>()) {
    os << p->q << ",NA";
  } else {
    os << "NA,NA";
  }
  double cov95;
  try {
    cov95 = pred.coverage_at(0.05);
  } catch (const InvalidArgument&) {
    cov95 = predict_coverage(model, sol, 0.05);
  }
  os << ',' << pr.alpha() << ',' << pr.sigma2() << ',' << sol.b_star << ',' << sol.tau_star << ','
     << pred.mse << ',' << pred.neg_log_z_per_p << ',' << cov95;
  return os.str();
}

}  // namespace nmf
