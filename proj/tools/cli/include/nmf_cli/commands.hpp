#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nmf_cli/config.hpp"

namespace nmf::cli {

enum ExitCode : int { kOk = 0, kNotCertified = 1, kConfigError = 2, kNoConvergence = 3 };

struct CommandResult {
  int code = kOk;
  /// JSON document, or CSV text for sweep and predict --csv
  std::string text;
  std::vector<std::string> warnings;
  /// printed to stderr when the run stops early
  std::string error;
};

CommandResult cmd_check_convexity(const RunConfig& cfg);
CommandResult cmd_solve(const RunConfig& cfg, bool with_traces = false);
CommandResult cmd_predict(const RunConfig& cfg, bool csv = false);
CommandResult cmd_simulate(const RunConfig& cfg);
CommandResult cmd_compare(const RunConfig& cfg);
/// CSV text; the chart goes to svg_path when it is not empty.
CommandResult cmd_sweep(const RunConfig& cfg, const std::string& svg_path);

std::string sweep_csv_header();

/// Full command line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nmf::cli
