#pragma once

#include <json.hpp>

#include "nmf/fixedpoint.hpp"
#include "nmf/meanfield.hpp"
#include "nmf/predictions.hpp"
#include "nmf/simulate.hpp"

namespace nmf {

void to_json(nlohmann::json& j, const ConvexityReport& r);
void from_json(const nlohmann::json& j, ConvexityReport& r);

void to_json(nlohmann::json& j, const Iterate& it);
void to_json(nlohmann::json& j, const StartRecord& s);
/// Start traces are included only when `with_traces` is set.
nlohmann::json solution_json(const FixedPointSolution& sol, bool with_traces = false);
void to_json(nlohmann::json& j, const FixedPointSolution& sol);
void to_json(nlohmann::json& j, const Diagnostics& d);
void to_json(nlohmann::json& j, const Predictions& p);
void to_json(nlohmann::json& j, const QuadratureScheme& q);
void to_json(nlohmann::json& j, const SimConfig& c);
/// u_hat is written only when `with_u_hat` is set.
nlohmann::json sim_result_json(const SimResult& r, bool with_u_hat = false);
void to_json(nlohmann::json& j, const SimResult& r);

nlohmann::json prior_json(const PriorSpec& p);
nlohmann::json problem_json(const ProblemSpec& p);

}  // namespace nmf
