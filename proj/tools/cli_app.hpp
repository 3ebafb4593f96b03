#pragma once

// Batch front-end for the gwp library.
//
//   gwp dist {pmf|moments|sample}
//   gwp process {simulate|points|avoidance}
//   gwp marks simulate
//   gwp limits {nb|poisson}
//   gwp fit
//   gwp diagnose {orderliness|ergodicity}
//
// Exit codes: 0 success, 1 operation error, 2 usage, 3 validation, 4 I/O.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gwp::cli {

enum ExitCode : int {
  kOk = 0,
  kOperationError = 1,
  kUsageError = 2,
  kValidationError = 3,
  kIoError = 4,
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;  // dist, process, marks, limits, fit, diagnose
  std::string action;   // leaf subcommand, empty for fit

  std::optional<double> a, k, rho;
  std::optional<double> c, lambda, volume, p0;
  double density = 1.0;
  std::vector<double> window;  // lower..., upper...
  std::vector<int> cells;
  std::vector<int> resolution;
  std::vector<double> k_values, c_values, volumes;
  std::optional<std::int64_t> max_n;
  int marks = 1;
  std::uint64_t seed = 0;
  std::size_t replicates = 1;
  std::string backend = "cox";
  std::string out;  // output directory; empty writes the primary table to stdout
  std::string format = "csv";
  std::string input;

  /// The argument list that produced this config, recorded in metadata.
  std::vector<std::string> argv;
};

/// Parses arguments (without the program name). Throws UsageError for
/// malformed command lines and ValidationError for out-of-domain values.
/// Returns nullopt when help was requested and printed to `out`.
std::optional<RunConfig> parse_config(const std::vector<std::string>& args, std::ostream& out);

/// Executes a parsed configuration, writing results to files under
/// config.out or to `out`. Returns an ExitCode.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// parse_config + run with exit-code mapping.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "1e-1..1e-8" expands to decades; otherwise a comma-separated list.
std::vector<double> parse_real_list(const std::string& text);

}  // namespace gwp::cli
