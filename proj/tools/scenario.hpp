#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"
#include "tonelli/entropy.hpp"
#include "tonelli/perturbation.hpp"

namespace tonelli::cli {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct Numeric {
  double T = 1.0;
  int steps = 100;
  int particles = 41;
  int record_stride = 1;
  double tol = 1e-10;
  double fd_step = 1e-2;
  bool richardson = true;
  std::optional<Box> box;
  int grid = 5;
  std::optional<Vec> x0, v0, y;
  std::uint64_t seed = 1;
  size_t samples = 10000;
  size_t calibration_samples = 1000;
  int bound_grid = 11;
};

struct PerturbationBlock {
  std::optional<double> alpha;  ///< empty: calibrate
  double beta = 1.0;
  std::string shape;
  int cubics = 10;
  std::uint64_t bank_seed = 42;
  double adversarial_factor = 0.0;  ///< 0: no adversarial run
};

struct Output {
  std::string prefix;
  std::string format = "csv";
};

/// A validated scenario file.
struct Scenario {
  std::string task;
  int dim = 0;
  LagrangianModel L;
  std::optional<Metric> metric;
  std::optional<Potential> u0;
  std::optional<Density> rho0;
  std::optional<EntropySpec> entropy;
  std::optional<VectorField> field;
  std::optional<PerturbationBlock> perturbation;
  std::string suite = "all";
  Numeric numeric;
  Output output;
};

/// Parses and validates a scenario. Every failure is a ValidationError naming the field.
Scenario parse_scenario(const json& j);
Scenario load_scenario(const std::string& path);

/// JSON schema of scenario files and of the emitted reports.
const json& schema();

/// Names listed under "required" in a schema object.
std::vector<std::string> required_keys(const json& schema_object);

}  // namespace tonelli::cli
