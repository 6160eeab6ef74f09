#include "nmf/fixedpoint.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include <boost/math/tools/minima.hpp>

namespace nmf {

double phi(const ScalarModel& model, double b, double tau) {
  const ProblemSpec& pr = model.problem();
  if (b == 0.0) return 0.0;
  if (!(b > 0.0) || !(tau >= pr.sigma())) {
    throw InvalidArgument("phi: need b >= 0 and tau >= sigma");
  }
  const double s2 = pr.sigma2();
  const double t = tau * s2 / b;
  const Penalty& pen = model.penalty();
  const auto e = model.expect<1>([&](std::size_t i, double bb, double z) {
    const ProxPoint p = prox(pen, tau * z + bb, t);
    const double wb = p.w - bb;
    const double inner = b / (2.0 * tau) * wb * wb - b * z * wb +
                         s2 * (pen.value_from_natural(p.w, p.natural) - model.penalty_at_b(i));
    return std::array<double, 1>{inner};
  });
  return b / 2.0 * (s2 / tau + tau) - b * b / 2.0 + e[0] / pr.alpha();
}

FpStep fp_step(const ScalarModel& model, double b, double tau) {
  const ProblemSpec& pr = model.problem();
  if (!(b > 0.0) || !(tau >= pr.sigma())) throw InvalidArgument("fp_step: need b > 0 and tau >= sigma");
  const double t = tau * pr.sigma2() / b;
  const double d = model.penalty().precision();
  const auto e = model.expect<3>([&](std::size_t, double bb, double z) {
    const ProxPoint p = prox(model.penalty(), tau * z + bb, t);
    const double deriv = p.variance / (p.variance * (1.0 - t * d) + t);
    return std::array<double, 3>{(p.w - bb) * (p.w - bb), deriv, z * p.w};
  });
  FpStep s;
  s.sq_error = e[0];
  s.mean_eta_prime = e[1];
  s.tau_next = std::sqrt(pr.sigma2() + e[0] / pr.alpha());
  s.b_next = tau * (1.0 - e[1] / pr.alpha());
  s.b_next_alt = tau - e[2] / pr.alpha();
  if (!(s.b_next > 0.0)) {
    std::ostringstream os;
    os << "fixed-point map sent b to " << s.b_next << " from (b, tau) = (" << b << ", " << tau << ")";
    throw NonPositiveB(os.str());
  }
  return s;
}

double tau_max(const ProblemSpec& problem) {
  return 100.0 * std::sqrt(problem.sigma2() + problem.s2() / problem.alpha());
}

PsiValue psi(const ScalarModel& model, double b) {
  const double lo = model.problem().sigma();
  const double hi = tau_max(model.problem());
  auto f = [&](double tau) { return phi(model, b, tau); };
  constexpr int kScan = 48;
  std::vector<double> taus(kScan);
  std::vector<double> vals(kScan);
  for (int i = 0; i < kScan; ++i) {
    taus[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (kScan - 1));
    vals[i] = f(taus[i]);
  }
  const auto best = static_cast<int>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  const double a = taus[std::max(best - 1, 0)];
  const double c = taus[std::min(best + 1, kScan - 1)];
  const auto r = boost::math::tools::brent_find_minima(f, a, c, std::numeric_limits<double>::digits / 2);
  if (r.second <= vals[best]) return {r.second, r.first};
  return {vals[best], taus[best]};
}

PsiValue psi(const ScalarModel& model, double b, double tau_hint) {
  const double lo = model.problem().sigma();
  const double hi = tau_max(model.problem());
  auto f = [&](double tau) { return phi(model, b, tau); };
  constexpr double kRatio = 1.1;
  double mid = std::clamp(tau_hint, lo, hi);
  double fmid = f(mid);
  double a = std::max(lo, mid / kRatio);
  double c = std::min(hi, mid * kRatio);
  double fa = a < mid ? f(a) : fmid;
  double fc = c > mid ? f(c) : fmid;
  // walk downhill until the minimum is bracketed or an edge is reached
  while (fa < fmid && a > lo) {
    c = mid;
    fc = fmid;
    mid = a;
    fmid = fa;
    a = std::max(lo, a / kRatio);
    fa = f(a);
  }
  while (fc < fmid && c < hi) {
    a = mid;
    fa = fmid;
    mid = c;
    fmid = fc;
    c = std::min(hi, c * kRatio);
    fc = f(c);
  }
  PsiValue best{fmid, mid};
  if (fa < best.value) best = {fa, a};
  if (fc < best.value) best = {fc, c};
  if (a < c) {
    const auto r = boost::math::tools::brent_find_minima(f, a, c, std::numeric_limits<double>::digits / 2);
    if (r.second <= best.value) best = {r.second, r.first};
  }
  return best;
}

void SolveOptions::validate() const {
  if (!(damping > 0.0 && damping <= 1.0)) throw InvalidArgument("fp.damping must lie in (0, 1]");
  if (!(tol > 0.0)) throw InvalidArgument("fp.tol must be positive");
  if (max_iter < 1) throw InvalidArgument("fp.max_iter must be positive");
}

std::vector<Iterate> default_inits(double sigma) {
  return {{0.5, 2.0 * sigma}, {1.0, sigma + 1.0}, {2.0, 5.0 * sigma}, {0.1, 1.1 * sigma}};
}

namespace {

StartRecord run_start(const ScalarModel& model, const SolveOptions& opts, Iterate init) {
  StartRecord rec;
  rec.init = init;
  double b = init.b;
  double tau = std::max(init.tau, model.problem().sigma());
  try {
    for (int it = 1; it <= opts.max_iter; ++it) {
      rec.trace.push_back({b, tau});
      const FpStep s = fp_step(model, b, tau);
      rec.iterations = it;
      if (std::max(std::abs(s.tau_next - tau), std::abs(s.b_next - b)) < opts.tol) {
        rec.converged = true;
        rec.final = {b, tau};
        return rec;
      }
      b = (1.0 - opts.damping) * b + opts.damping * s.b_next;
      tau = (1.0 - opts.damping) * tau + opts.damping * s.tau_next;
    }
    rec.failure = "max_iter reached";
  } catch (const Error& e) {
    rec.failure = e.what();
  }
  rec.final = {b, tau};
  return rec;
}

}  // namespace

FixedPointSolution solve(const ScalarModel& model, const SolveOptions& opts) {
  opts.validate();
  model.penalty().require_certified();
  const std::vector<Iterate> inits =
      opts.inits.empty() ? default_inits(model.problem().sigma()) : opts.inits;
  std::vector<StartRecord> starts(inits.size());
  std::vector<std::exception_ptr> errors(inits.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < inits.size(); ++k) {
    try {
      starts[k] = run_start(model, opts, inits[k]);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  FixedPointSolution sol;
  std::vector<std::size_t> good;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    if (starts[k].converged) good.push_back(k);
  }
  sol.starts_converged = static_cast<int>(good.size());
  sol.starts_failed = static_cast<int>(starts.size() - good.size());
  if (good.empty()) {
    std::ostringstream os;
    os << "no start of the fixed-point iteration converged:";
    for (const auto& s : starts) {
      os << " [(" << s.init.b << ", " << s.init.tau << ") -> (" << s.final.b << ", " << s.final.tau
         << ") after " << s.iterations << " iterations: " << s.failure << "]";
    }
    throw FixedPointNoConvergence(os.str(), std::move(starts));
  }

  bool agree = true;
  for (std::size_t k : good) {
    const Iterate& a = starts[k].final;
    const Iterate& r = starts[good.front()].final;
    if (std::abs(a.b - r.b) > 1e-6 || std::abs(a.tau - r.tau) > 1e-6) agree = false;
  }
  std::size_t pick = good.front();
  if (!agree) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k : good) {
      starts[k].psi = psi(model, starts[k].final.b).value;
      if (starts[k].psi > best) {
        best = starts[k].psi;
        pick = k;
      }
    }
  }

  const StartRecord& chosen = starts[pick];
  sol.b_star = chosen.final.b;
  sol.tau_star = chosen.final.tau;
  sol.kappa_star = sol.tau_star * model.problem().sigma2() / sol.b_star;
  const FpStep s = fp_step(model, sol.b_star, sol.tau_star);
  sol.residual_tau = s.tau_next - sol.tau_star;
  sol.residual_b = s.b_next - sol.b_star;
  sol.residual_b_alt = s.b_next_alt - sol.b_star;
  sol.phi_value = phi(model, sol.b_star, sol.tau_star);
  sol.iterations = chosen.iterations;
  sol.converged = true;
  sol.init_used = chosen.init;
  sol.multi_start_agreement = agree;
  sol.starts = std::move(starts);
  return sol;
}

Diagnostics diagnose(const ScalarModel& model, double b, double tau) {
  Diagnostics d;
  const double h = 1e-4;
  d.grad_b = (phi(model, b + h, tau) - phi(model, b - h, tau)) / (2.0 * h);
  const double sigma = model.problem().sigma();
  const double hm = std::min(h, tau - sigma);
  if (hm > 0.0) {
    d.grad_tau = (phi(model, b, tau + h) - phi(model, b, tau - hm)) / (h + hm);
  } else {
    d.grad_tau = (phi(model, b, tau + h) - phi(model, b, tau)) / h;
  }
  d.stationary = std::abs(d.grad_b) < 1e-5 && std::abs(d.grad_tau) < 1e-5;

  constexpr int kGrid = 21;
  std::vector<double> ps(kGrid);
  // walk outward from b, warm-starting each minimization at its neighbour's minimizer
  constexpr int kMid = kGrid / 2;
  auto grid_b = [&](int i) { return b * (0.5 + static_cast<double>(i) / (kGrid - 1)); };
  const PsiValue centre = psi(model, grid_b(kMid), tau);
  ps[kMid] = centre.value;
  double hint = centre.tau;
  for (int i = kMid + 1; i < kGrid; ++i) {
    const PsiValue v = psi(model, grid_b(i), hint);
    ps[i] = v.value;
    hint = v.tau;
  }
  hint = centre.tau;
  for (int i = kMid - 1; i >= 0; --i) {
    const PsiValue v = psi(model, grid_b(i), hint);
    ps[i] = v.value;
    hint = v.tau;
  }
  d.max_second_difference = -std::numeric_limits<double>::infinity();
  for (int i = 1; i + 1 < kGrid; ++i) {
    d.max_second_difference = std::max(d.max_second_difference, ps[i + 1] - 2.0 * ps[i] + ps[i - 1]);
  }
  d.psi_concave = d.max_second_difference <= 1e-6;

  const double he = 1e-6 * std::max(1.0, sigma);
  d.dphi_dtau_at_sigma = (phi(model, b, sigma + he) - phi(model, b, sigma)) / he;
  d.tau_edge_negative = d.dphi_dtau_at_sigma < 0.0;
  return d;
}

Diagnostics verify(const ScalarModel& model, const FixedPointSolution& sol) {
  if (!sol.converged) throw VerificationFailed("verify: solution did not converge");
  Diagnostics d = diagnose(model, sol.b_star, sol.tau_star);
  if (!d.ok()) {
    std::ostringstream os;
    os << "fixed-point verification failed:";
    if (!d.stationary) os << " stationarity (grad = " << d.grad_b << ", " << d.grad_tau << ")";
    if (!d.psi_concave) os << " psi concavity (max second difference " << d.max_second_difference << ")";
    if (!d.tau_edge_negative) os << " dphi/dtau at sigma = " << d.dphi_dtau_at_sigma;
    throw VerificationFailed(os.str());
  }
  return d;
}

}  // namespace nmf
