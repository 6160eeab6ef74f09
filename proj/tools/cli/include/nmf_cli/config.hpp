#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nmf/fixedpoint.hpp"
#include "nmf/simulate.hpp"

namespace nmf::cli {

/// Malformed or unknown configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// section -> key -> raw value
using RawConfig = std::map<std::string, std::map<std::string, std::string>>;

struct PriorConfig {
  std::string kind = "gaussian";
  double q = 0.5;
  double delta2 = 1.0;
  // grid densities
  double a = 1.0;
  std::string density = "laplace";
  double scale = 1.0;
  int nodes = 513;
  std::vector<double> v;

  PriorSpec build() const;
};

struct SweepConfig {
  std::string axis = "alpha";
  std::vector<double> grid;
  std::vector<std::string> metrics{"mse", "coverage_95"};
  std::string svg;
};

struct RunConfig {
  PriorConfig prior;
  /// unset: same as prior
  std::optional<PriorConfig> truth;
  double sigma2 = 1.0;
  double alpha = 2.0;
  QuadratureScheme quad;
  SolveOptions fp;
  SimConfig sim;
  /// unset: p = round(n / alpha)
  std::optional<std::size_t> sim_p;
  std::string dataset_out;
  SweepConfig sweep;

  ProblemSpec problem() const;
  /// SimConfig with p resolved.
  SimConfig sim_config() const;
};

RawConfig parse_ini(const std::string& text);
/// Accepts a config object or a command output that embeds one under "config".
RawConfig parse_json_config(const std::string& text);
/// Reads a file, choosing INI or JSON by content.
RawConfig read_config_file(const std::string& path);

RunConfig resolve(const RawConfig& raw);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace nmf::cli
