#include "nmf/serialize.hpp"

namespace nmf {

using nlohmann::json;

void to_json(json& j, const ConvexityReport& r) {
  j = json{{"certified", r.certified},
           {"certificate", to_string(r.certificate)},
           {"min_F_second", r.min_F_second},
           {"sweep_grid", r.sweep_grid},
           {"condition_value", r.condition_value}};
}

void from_json(const json& j, ConvexityReport& r) {
  r.certified = j.at("certified").get<bool>();
  r.certificate = certificate_from_string(j.at("certificate").get<std::string>());
  r.min_F_second = j.at("min_F_second").get<double>();
  r.sweep_grid = j.value("sweep_grid", std::string());
  r.condition_value = j.value("condition_value", 0.0);
}

void to_json(json& j, const Iterate& it) { j = json{{"b", it.b}, {"tau", it.tau}}; }

void to_json(json& j, const StartRecord& s) {
  j = json{{"init", s.init},       {"converged", s.converged}, {"iterations", s.iterations},
           {"final", s.final},     {"failure", s.failure},     {"trace", s.trace}};
  if (s.psi != 0.0) j["psi"] = s.psi;
}

json solution_json(const FixedPointSolution& sol, bool with_traces) {
  json starts = json::array();
  for (const auto& s : sol.starts) {
    json js = s;
    if (!with_traces) js.erase("trace");
    starts.push_back(js);
  }
  return json{{"b_star", sol.b_star},
              {"tau_star", sol.tau_star},
              {"kappa_star", sol.kappa_star},
              {"phi_value", sol.phi_value},
              {"residual_tau", sol.residual_tau},
              {"residual_b", sol.residual_b},
              {"residual_b_alt", sol.residual_b_alt},
              {"iterations", sol.iterations},
              {"converged", sol.converged},
              {"init_used", sol.init_used},
              {"multi_start_agreement", sol.multi_start_agreement},
              {"starts_converged", sol.starts_converged},
              {"starts_failed", sol.starts_failed},
              {"starts", starts}};
}

void to_json(json& j, const FixedPointSolution& sol) { j = solution_json(sol, false); }

void to_json(json& j, const Diagnostics& d) {
  j = json{{"grad_b", d.grad_b},
           {"grad_tau", d.grad_tau},
           {"max_second_difference", d.max_second_difference},
           {"dphi_dtau_at_sigma", d.dphi_dtau_at_sigma},
           {"stationary", d.stationary},
           {"psi_concave", d.psi_concave},
           {"tau_edge_negative", d.tau_edge_negative}};
}

void to_json(json& j, const Predictions& p) {
  json cov = json::object();
  json cor = json::object();
  for (std::size_t k = 0; k < p.zeta_list.size(); ++k) {
    const std::string key = json(p.zeta_list[k]).dump();
    cov[key] = p.coverage[k];
    cor[key] = p.corrected_coverage[k];
  }
  j = json{{"mse", p.mse},           {"neg_log_z_per_p", p.neg_log_z_per_p},
           {"zeta_list", p.zeta_list}, {"coverage", cov},
           {"corrected_coverage", cor}, {"warnings", p.warnings}};
}

void to_json(json& j, const QuadratureScheme& q) {
  j = json{{"hermite_nodes", q.hermite_nodes},
           {"slab", q.slab == SlabStrategy::GaussHermite ? "gauss_hermite" : "monte_carlo"},
           {"slab_nodes", q.slab_nodes},
           {"mc_samples", q.mc_samples},
           {"seed", q.seed}};
}

void to_json(json& j, const SimConfig& c) {
  j = json{{"n", c.n},
           {"p", c.p},
           {"seed", c.seed},
           {"design", to_string(c.design)},
           {"replicates", c.replicates},
           {"grad_tol", c.optimizer.grad_tol},
           {"max_iter", c.optimizer.max_iter},
           {"zeta_list", c.zeta_list},
           {"channel_samples", c.channel_samples},
           {"projections", c.projections},
           {"exact_evidence", c.exact_evidence}};
}

json sim_result_json(const SimResult& r, bool with_u_hat) {
  json cov = json::object();
  json cor = json::object();
  for (std::size_t k = 0; k < r.zeta_list.size(); ++k) {
    const std::string key = json(r.zeta_list[k]).dump();
    cov[key] = r.coverage_emp[k];
    cor[key] = r.coverage_corrected_emp[k];
  }
  json j{{"seed", r.seed},
         {"n", r.n},
         {"p", r.p},
         {"mse_emp", r.mse_emp},
         {"neg_log_z_nmf_per_p", r.neg_log_z_nmf_per_p},
         {"coverage_emp", cov},
         {"coverage_corrected_emp", cor},
         {"w2_sliced", r.w2_sliced},
         {"w2_marginal", r.w2_marginal},
         {"d_max_deviation", r.d_max_deviation},
         {"grad_norm_final", r.grad_norm_final},
         {"iterations", r.iterations},
         {"converged", r.converged},
         {"objective_increases", r.objective_increases}};
  j["neg_log_z_exact_per_p"] = r.neg_log_z_exact_per_p ? json(*r.neg_log_z_exact_per_p) : json(nullptr);
  if (with_u_hat) j["u_hat"] = std::vector<double>(r.u_hat.data(), r.u_hat.data() + r.u_hat.size());
  return j;
}

void to_json(json& j, const SimResult& r) { j = sim_result_json(r, false); }

json prior_json(const PriorSpec& p) {
  if (const auto* s = p.as<GaussianSpikeSlab>()) {
    return json{{"kind", "spike_slab"}, {"q", s->q}, {"delta2", s->delta2}};
  }
  if (const auto* s = p.as<GaussianMeanZero>()) return json{{"kind", "gaussian"}, {"delta2", s->delta2}};
  if (const auto* s = p.as<ThreePointDiscrete>()) return json{{"kind", "three_point"}, {"q", s->q}};
  const auto& g = std::get<GridDensity>(p.kind());
  return json{{"kind", "grid"}, {"a", g.half_width()}, {"v", g.potential()}};
}

json problem_json(const ProblemSpec& p) {
  return json{{"prior", prior_json(p.prior())},
              {"truth", prior_json(p.truth())},
              {"sigma2", p.sigma2()},
              {"alpha", p.alpha()},
              {"s2", p.s2()}};
}

}  // namespace nmf
