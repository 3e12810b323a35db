#pragma once

#include <string>
#include <vector>

namespace tonelli::cli {

/// One measured quantity against its tolerance.
struct Check {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<Check> checks;
  double seconds = 0.0;

  bool pass() const;
};

/// Paths the CLI suite needs; the other suites ignore them.
struct VerifyContext {
  std::string cli_path;
  std::string scenario_dir;
};

/// Suite names in acceptance order: flat, curvature, invariance, riccati, bochner,
/// hessian, continuity, perturb, entropy, cli.
const std::vector<std::string>& suite_names();

/// Runs one suite. Unknown names throw ValidationError("suite").
SuiteResult run_suite(const std::string& name, const VerifyContext& ctx);

/// "  [PASS] name: measured 1.2e-13 (tolerance 1e-10) detail"
std::string format_check(const Check& c);

}  // namespace tonelli::cli
