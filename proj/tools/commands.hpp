#pragma once

#include <exception>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bioremed/sim.hpp"
#include "config.hpp"

namespace bioremed::cli {

struct StrategyResult {
  std::string strategy;
  std::string description;  // human-readable policy summary (no commas)
  double sr0 = 0.0;         // initial S_r
  double q0 = 0.0;          // initial Q
  Trajectory trajectory;
  std::vector<std::string> state_names;

  std::optional<double> hit_time() const { return trajectory.hit_time; }
};

/// Executes one strategy on a resolved configuration.
StrategyResult run_strategy(const RunConfig& cfg, const std::string& strategy);

struct ErrorRecord {
  std::string context;
  std::string kind;
  std::string message;
};

struct Settings {
  std::optional<std::string> out_dir;  // overrides [output] dir
  unsigned jobs = 1;
};

/// Runs a subcommand (run, compare, sweep, synthesize, certify). Human-readable
/// progress goes to `out`; on failure a JSON error summary goes to `err`.
/// Returns the process exit code: 0 iff every run succeeded.
int execute(const std::string& command, const ConfigDoc& doc, const Settings& settings,
            std::ostream& out, std::ostream& err);

/// Machine-readable error summary: {"status", "command", "errors": [...]}.
void print_error_summary(std::ostream& err, const std::string& command,
                         const std::vector<ErrorRecord>& errors);

/// Classifies an in-flight exception for the error summary.
ErrorRecord describe_exception(const std::string& context, std::exception_ptr e);

}  // namespace bioremed::cli
