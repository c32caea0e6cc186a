#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace bridgekit {

/// Bad flags, a bad config file or values that do not describe a runnable experiment.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One experiment. Empty strings mean "the command's default".
struct RunConfig {
  std::string command;
  std::string kernel = "gaussian";
  std::string kernel_a = "gaussian";
  std::string kernel_b = "tanh:1:0";
  double x = 0.0;
  double t = 1.0;
  double y = 0.5;
  std::size_t grid_points = 9;
  std::vector<double> grid_times;  // overrides grid_points when set
  std::size_t n_samples = 100000;
  std::size_t energy_samples = 5000;
  std::uint64_t seed = 7;
  unsigned threads = 0;
  double tol = 1e-6;
  double alpha = 0.01;
  double tv_tol = 0.02;
  int permutations = 500;
  std::string chain = "killed:8:1";
  double dt = 1e-3;
  int bins = 60;
  std::string ks_method = "asymptotic";  // or "permutation"
  std::string sampler;                   // "automatic" or "generic"
  std::string output;                    // JSON report path; stdout when empty
  std::string csv;                       // CSV artifact path; none when empty

  /// Throws UsageError when a kernel id does not resolve, t <= 0, n_samples < 1 and so on.
  void validate() const;
  nlohmann::json to_json() const;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"verify-kernels", "verify-chain",  "sample-bridge",
                                              "compare-bridges", "extract-psi",  "bessel-demo",
                                              "sde-crosscheck"};
  return names;
}

/// Parses argv (flags, optional `--config` file of `key = value` lines; flags win).
/// Throws UsageError. On --help the help text is printed and the command comes back empty.
RunConfig parse_args(int argc, const char* const* argv);

struct RunResult {
  int exit_code = 0;  // 0 all checks passed, 1 a check failed
  nlohmann::json report;
};

/// Runs the experiment and writes the requested artifacts. The report carries
/// {"schema": 1, "command", "generated_at", "config", "results", "failures", "passed"}.
RunResult run(const RunConfig& config);

/// Whole command-line program: parse, run, print. Returns the process exit status
/// (0 pass, 1 check failure, 2 usage or config error).
int cli_main(int argc, const char* const* argv);

}  // namespace bridgekit
