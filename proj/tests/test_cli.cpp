#include <algorithm>
#include <string>

#include "doctest.h"
#include "scenario.hpp"
#include "tasks.hpp"
#include "tonelli/error.hpp"
#include "verify.hpp"

using namespace tonelli;
using namespace tonelli::cli;

namespace {

json base_flow() {
  return json::parse(R"({
    "schema_version": 1,
    "task": "flow",
    "lagrangian": {"kind": "euclidean", "dim": 2},
    "numeric": {"T": 1.0, "steps": 10, "x0": [0, 0], "v0": [1, 2]}
  })");
}

std::string field_of(const json& j) {
  try {
    parse_scenario(j);
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("valid scenario parses with defaults") {
  const Scenario s = parse_scenario(base_flow());
  CHECK(s.task == "flow");
  CHECK(s.dim == 2);
  CHECK(s.numeric.steps == 10);
  CHECK(s.numeric.particles == 41);
  CHECK(s.output.prefix == "tonelli_flow");
  CHECK(s.output.format == "csv");
}

TEST_CASE("validation errors name the offending field") {
  json j = base_flow();
  j["numeric"]["T"] = -1;
  CHECK(field_of(j) == "numeric.T");

  j = base_flow();
  j["schema_version"] = 2;
  CHECK(field_of(j) == "schema_version");

  j = base_flow();
  j["task"] = "plot";
  CHECK(field_of(j) == "task");

  j = base_flow();
  j["numeric"]["steps"] = 0;
  CHECK(field_of(j) == "numeric.steps");

  j = base_flow();
  j["numeric"]["record_stride"] = 3;
  CHECK(field_of(j) == "numeric.record_stride");

  j = base_flow();
  j["numeric"]["x0"] = {0, 0, 0};
  CHECK(field_of(j) == "numeric.x0");

  j = base_flow();
  j["numeric"]["speed"] = 1;
  CHECK(field_of(j) == "numeric.speed");

  j = base_flow();
  j["lagrangian"]["kind"] = "finsler";
  CHECK(field_of(j) == "lagrangian.kind");

  j = base_flow();
  j["lagrangian"] = {{"kind", "mechanical"}, {"dim", 2}, {"U", "0.5*x1 +"}};
  CHECK(field_of(j) == "lagrangian.U");

  j = base_flow();
  j["lagrangian"] = {{"kind", "custom"}, {"dim", 2}, {"expression", "-0.5*(v1^2+v2^2)"}};
  CHECK(field_of(j) == "lagrangian");

  j = base_flow();
  j["numeric"].erase("v0");
  CHECK(field_of(j) == "numeric.v0");

  j = base_flow();
  j["task"] = "hessian";
  j["u0"] = "x1";
  CHECK(field_of(j) == "rho0");

  j = base_flow();
  j["output"] = {{"format", "xml"}};
  CHECK(field_of(j) == "output.format");
}

TEST_CASE("csv rows use full precision and LF endings") {
  Table t;
  t.add_column("t");
  t.add_column("particle", true);
  t.rows.push_back({0.1, 3.0});
  t.rows.push_back({-2.0 / 3.0, 12.0});
  CHECK(to_csv(t) ==
        "t,particle\n"
        "1.0000000000000001e-01,3\n"
        "-6.6666666666666663e-01,12\n");
  const json j = to_json(t);
  CHECK(j["columns"].size() == 2);
  CHECK(j["rows"][1][0].get<double>() == -2.0 / 3.0);
  CHECK(j["rows"][1][1].get<long>() == 12);
}

TEST_CASE("flow task output") {
  const Scenario s = parse_scenario(base_flow());
  const TaskOutput out = run_task(s, "");
  REQUIRE(out.files.count("tonelli_flow.csv") == 1);
  const std::string& csv = out.files.at("tonelli_flow.csv");
  CHECK(csv.rfind("t,x1,x2,v1,v2,H,detJ\n", 0) == 0);
  // 11 nodes plus the header
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 12);
  CHECK(csv.find("1.0000000000000000e+00,1.0000000000000000e+00,2.0000000000000000e+00") != std::string::npos);
  CHECK(out.summary["energy_drift"].get<double>() == 0.0);
}

TEST_CASE("perturb report carries the schema's required keys") {
  json j = json::parse(R"J({
    "schema_version": 1,
    "task": "perturb",
    "lagrangian": {"kind": "riemannian", "dim": 2, "metric": {"type": "conformal", "lambda": "0.05*(x1^2+x2^2)"}},
    "perturbation": {"alpha": 0.001},
    "numeric": {"box": {"lo": [-1, -1], "hi": [1, 1]}}
  })J");
  const TaskOutput out = run_task(parse_scenario(j), "");
  const json report = json::parse(out.files.at("tonelli_perturb.json"));
  for (const auto& key : required_keys(schema()["definitions"]["perturb_report"])) CHECK(report.contains(key));
  CHECK(report["rejected"].get<bool>());
  CHECK(report["bounds"]["k_g"].get<double>() < 0.0);
}

TEST_CASE("schema lists every task") {
  const json& s = schema();
  CHECK(s["properties"]["task"]["enum"].size() == 7);
  CHECK(required_keys(s) == std::vector<std::string>{"schema_version", "task"});
}

TEST_CASE("verify suites") {
  CHECK(suite_names().size() == 10);
  CHECK_THROWS_AS(run_suite("nope", {}), ValidationError);
  const SuiteResult flat = run_suite("flat", {});
  for (const auto& c : flat.checks) {
    CAPTURE(format_check(c));
    CHECK(c.pass);
  }
}
