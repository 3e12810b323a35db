#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "scenario.hpp"
#include "tasks.hpp"
#include "tonelli/error.hpp"
#include "verify.hpp"

#ifndef TONELLI_SCENARIO_DIR
#define TONELLI_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using namespace tonelli;
using namespace tonelli::cli;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

int report_error(const json& j, int code) {
  std::cerr << j.dump() << "\n";
  return code;
}

int report(const Error& e) {
  json j = {{"error", e.kind()},
            {"class", e.error_class() == ErrorClass::validation ? "validation" : "numerical"},
            {"message", e.what()}};
  if (auto v = dynamic_cast<const ValidationError*>(&e)) j["field"] = v->field();
  if (auto v = dynamic_cast<const InadmissibleEntropy*>(&e)) j["witness"] = v->witness();
  if (auto v = dynamic_cast<const RiccatiBlowup*>(&e)) j["time"] = v->time();
  if (auto v = dynamic_cast<const Caustic*>(&e)) {
    j["particle"] = v->particle();
    j["time"] = v->time();
    json crossings = json::array();
    for (const auto& c : v->crossings()) crossings.push_back({{"particle", c.particle}, {"time", c.time}});
    j["crossings"] = std::move(crossings);
  }
  return report_error(j, e.error_class() == ErrorClass::validation ? kExitValidation : kExitNumerical);
}

std::string self_path() {
  std::error_code ec;
  const fs::path p = fs::read_symlink("/proc/self/exe", ec);
  return ec ? std::string() : p.string();
}

void write_outputs(const TaskOutput& out) {
  for (const auto& [path, contents] : out.files) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    f << contents;
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
  }
}

int run(const std::string& file) {
  const Scenario s = load_scenario(file);
  const TaskOutput out = run_task(s, self_path());
  write_outputs(out);
  std::cout << out.summary.dump() << "\n";
  return out.exit_code;
}

int verify(const std::string& suite, const std::string& scenarios) {
  const VerifyContext ctx{self_path(), scenarios};
  std::vector<std::string> names = suite == "all" ? suite_names() : std::vector<std::string>{suite};
  bool ok = true;
  for (const auto& name : names) {
    const SuiteResult r = run_suite(name, ctx);
    std::printf("%s: %s (%.2f s)\n", name.c_str(), r.pass() ? "PASS" : "FAIL", r.seconds);
    for (const auto& c : r.checks) std::printf("%s\n", format_check(c).c_str());
    std::fflush(stdout);
    ok = ok && r.pass();
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized curvature of Tonelli Lagrangians"};
  app.require_subcommand(1);

  std::string file;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario file");
  run_cmd->add_option("file", file, "scenario JSON")->required();

  std::string suite = "all";
  std::string scenarios = TONELLI_SCENARIO_DIR;
  auto* verify_cmd = app.add_subcommand("verify", "Run the verification suites");
  verify_cmd->add_option("suite", suite, "all or one suite name");
  verify_cmd->add_option("--scenarios", scenarios, "directory of the shipped scenarios");

  auto* schema_cmd = app.add_subcommand("schema", "Print the JSON schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error({{"error", "usage"}, {"class", "validation"}, {"message", e.what()}}, kExitValidation);
  }

  try {
    if (*run_cmd) return run(file);
    if (*verify_cmd) return verify(suite, scenarios);
    if (*schema_cmd) {
      std::cout << schema().dump(2) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    return report(e);
  } catch (const std::exception& e) {
    return report_error({{"error", "internal"}, {"class", "internal"}, {"message", e.what()}}, kExitInternal);
  }
  return kExitInternal;
}
