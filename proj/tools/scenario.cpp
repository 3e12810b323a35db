#include "scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "tonelli/error.hpp"

namespace tonelli::cli {

namespace {

const std::set<std::string> kTasks = {"flow", "cost", "curvature", "interpolant", "hessian", "perturb", "verify"};

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path.empty() ? "$" : path, "must be an object");
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ValidationError(join(path, k), "unknown field");
}

const json* find(const json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

const json& require(const json& j, const std::string& path, const std::string& key) {
  const json* v = find(j, key);
  if (!v) throw ValidationError(join(path, key), "is required");
  return *v;
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ValidationError(field, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(field, "must be finite");
  return x;
}

double positive(const json& v, const std::string& field) {
  const double x = number(v, field);
  if (!(x > 0.0)) throw ValidationError(field, "must be positive");
  return x;
}

long integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ValidationError(field, "must be an integer");
  return v.get<long>();
}

int positive_int(const json& v, const std::string& field) {
  const long x = integer(v, field);
  if (x < 1 || x > 1000000000L) throw ValidationError(field, "must be a positive integer");
  return static_cast<int>(x);
}

std::string string(const json& v, const std::string& field) {
  if (!v.is_string()) throw ValidationError(field, "must be a string");
  return v.get<std::string>();
}

Vec vector(const json& v, const std::string& field, int d) {
  if (!v.is_array() || static_cast<int>(v.size()) != d)
    throw ValidationError(field, "must be an array of " + std::to_string(d) + " numbers");
  Vec x(d);
  for (int i = 0; i < d; ++i) x(i) = number(v[i], field + "[" + std::to_string(i) + "]");
  return x;
}

std::vector<std::string> strings(const json& v, const std::string& field, size_t n) {
  if (!v.is_array() || v.size() != n)
    throw ValidationError(field, "must be an array of " + std::to_string(n) + " expressions");
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i) out.push_back(string(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

/// Runs `make`, reporting expression and model errors against `field`.
template <class F>
auto guarded(const std::string& field, F&& make) -> decltype(make()) {
  try {
    return make();
  } catch (const ValidationError&) {
    throw;
  } catch (const ParseError& e) {
    throw ValidationError(field, e.what());
  } catch (const UnsupportedPrimitive& e) {
    throw ValidationError(field, e.what());
  } catch (const ContractViolation& e) {
    throw ValidationError(field, e.what());
  } catch (const DomainError& e) {
    throw ValidationError(field, e.what());
  } catch (const TonelliViolation& e) {
    throw ValidationError(field, e.what());
  }
}

Metric parse_metric(const json& j, const std::string& path, int d) {
  check_object(j, path);
  check_keys(j, path, {"type", "lambda", "entries"});
  const std::string type = string(require(j, path, "type"), join(path, "type"));
  if (type == "identity") return Metric::identity(d);
  if (type == "conformal") {
    const std::string lam = string(require(j, path, "lambda"), join(path, "lambda"));
    return guarded(join(path, "lambda"), [&] { return Metric::conformal(d, lam); });
  }
  if (type == "diagonal") {
    auto e = strings(require(j, path, "entries"), join(path, "entries"), d);
    return guarded(join(path, "entries"), [&] { return Metric::diagonal(e); });
  }
  if (type == "full") {
    auto e = strings(require(j, path, "entries"), join(path, "entries"), static_cast<size_t>(d * (d + 1) / 2));
    return guarded(join(path, "entries"), [&] { return Metric(d, e); });
  }
  throw ValidationError(join(path, "type"), "unknown metric type '" + type + "'");
}

void parse_lagrangian(const json& j, Scenario& s) {
  const std::string path = "lagrangian";
  check_object(j, path);
  check_keys(j, path, {"kind", "dim", "metric", "U", "phi", "expression"});
  s.dim = positive_int(require(j, path, "dim"), "lagrangian.dim");
  if (s.dim > 6) throw ValidationError("lagrangian.dim", "dimensions above 6 are not supported");
  const int d = s.dim;
  const std::string kind = string(require(j, path, "kind"), "lagrangian.kind");
  auto metric = [&] {
    const json* m = find(j, "metric");
    return m ? parse_metric(*m, "lagrangian.metric", d) : Metric::identity(d);
  };
  if (kind == "euclidean") {
    s.L = LagrangianModel::euclidean(d);
  } else if (kind == "riemannian") {
    s.metric = metric();
    s.L = LagrangianModel::riemannian(*s.metric);
  } else if (kind == "mechanical") {
    s.metric = metric();
    const std::string U = string(require(j, path, "U"), "lagrangian.U");
    s.L = guarded("lagrangian.U", [&] { return LagrangianModel::mechanical(*s.metric, U); });
  } else if (kind == "perturbed") {
    s.metric = metric();
    const json* phi = find(j, "phi");
    const std::string p = phi ? string(*phi, "lagrangian.phi") : "0";
    s.L = guarded("lagrangian.phi", [&] { return LagrangianModel::perturbed(*s.metric, p); });
  } else if (kind == "custom") {
    const std::string e = string(require(j, path, "expression"), "lagrangian.expression");
    s.L = guarded("lagrangian.expression", [&] { return LagrangianModel::custom(d, e); });
  } else {
    throw ValidationError("lagrangian.kind", "unknown kind '" + kind + "'");
  }
  // a cheap positive-definiteness probe at the origin
  guarded(path, [&] { return s.L.derivatives(Vec::Zero(d), Vec::Zero(d), 2); });
}

Box parse_box(const json& j, const std::string& path, int d) {
  check_object(j, path);
  check_keys(j, path, {"lo", "hi"});
  Box b{vector(require(j, path, "lo"), join(path, "lo"), d), vector(require(j, path, "hi"), join(path, "hi"), d)};
  if (!(b.lo.array() < b.hi.array()).all()) throw ValidationError(path, "needs lo < hi in every coordinate");
  return b;
}

void parse_numeric(const json& j, Scenario& s) {
  const std::string path = "numeric";
  check_object(j, path);
  check_keys(j, path,
             {"T", "steps", "particles", "record_stride", "tol", "fd_step", "richardson", "box", "grid", "x0", "v0",
              "y", "seed", "samples", "calibration_samples", "bound_grid"});
  Numeric& n = s.numeric;
  const int d = s.dim;
  if (auto v = find(j, "T")) n.T = positive(*v, "numeric.T");
  if (auto v = find(j, "steps")) n.steps = positive_int(*v, "numeric.steps");
  if (auto v = find(j, "particles")) n.particles = positive_int(*v, "numeric.particles");
  if (auto v = find(j, "record_stride")) n.record_stride = positive_int(*v, "numeric.record_stride");
  if (auto v = find(j, "tol")) n.tol = positive(*v, "numeric.tol");
  if (auto v = find(j, "fd_step")) n.fd_step = positive(*v, "numeric.fd_step");
  if (auto v = find(j, "richardson")) {
    if (!v->is_boolean()) throw ValidationError("numeric.richardson", "must be a boolean");
    n.richardson = v->get<bool>();
  }
  if (auto v = find(j, "box")) n.box = parse_box(*v, "numeric.box", d);
  if (auto v = find(j, "grid")) n.grid = positive_int(*v, "numeric.grid");
  if (auto v = find(j, "x0")) n.x0 = vector(*v, "numeric.x0", d);
  if (auto v = find(j, "v0")) n.v0 = vector(*v, "numeric.v0", d);
  if (auto v = find(j, "y")) n.y = vector(*v, "numeric.y", d);
  if (auto v = find(j, "seed")) {
    const long x = integer(*v, "numeric.seed");
    if (x < 0) throw ValidationError("numeric.seed", "must be non-negative");
    n.seed = static_cast<std::uint64_t>(x);
  }
  if (auto v = find(j, "samples")) n.samples = positive_int(*v, "numeric.samples");
  if (auto v = find(j, "calibration_samples")) n.calibration_samples = positive_int(*v, "numeric.calibration_samples");
  if (auto v = find(j, "bound_grid")) n.bound_grid = positive_int(*v, "numeric.bound_grid");
  if (n.steps % n.record_stride != 0)
    throw ValidationError("numeric.record_stride", "must divide numeric.steps");
  if (n.particles < 3) throw ValidationError("numeric.particles", "needs at least 3 particles per dimension");
  if (n.grid < 2 && j.contains("grid")) throw ValidationError("numeric.grid", "needs at least 2 nodes per axis");
}

Density parse_density(const json& j, int d) {
  const std::string path = "rho0";
  check_object(j, path);
  check_keys(j, path, {"type", "radius", "center", "expression"});
  const std::string type = string(require(j, path, "type"), "rho0.type");
  const double r = find(j, "radius") ? positive(j["radius"], "rho0.radius") : 1.0;
  const Vec c = find(j, "center") ? vector(j["center"], "rho0.center", d) : Vec::Zero(d);
  if (type == "bump") return Density::bump(d, r, c);
  if (type == "custom") {
    const std::string e = string(require(j, path, "expression"), "rho0.expression");
    return guarded("rho0.expression", [&] { return Density::custom(d, e, r, c); });
  }
  throw ValidationError("rho0.type", "unknown density type '" + type + "'");
}

EntropySpec parse_entropy(const json& j) {
  const std::string path = "entropy";
  check_object(j, path);
  check_keys(j, path, {"type", "m", "expression"});
  const std::string type = string(require(j, path, "type"), "entropy.type");
  if (type == "boltzmann") return EntropySpec::boltzmann();
  if (type == "quadratic") return EntropySpec::quadratic();
  if (type == "power") return EntropySpec::power(number(require(j, path, "m"), "entropy.m"));
  if (type == "custom") {
    const std::string e = string(require(j, path, "expression"), "entropy.expression");
    return guarded("entropy.expression", [&] { return EntropySpec::custom(e); });
  }
  throw ValidationError("entropy.type", "unknown entropy type '" + type + "'");
}

VectorField parse_field(const json& j, const Scenario& s) {
  const std::string path = "field";
  check_object(j, path);
  check_keys(j, path, {"type", "potential", "components"});
  const std::string type = string(require(j, path, "type"), "field.type");
  if (type == "gradient") {
    const std::string u = string(require(j, path, "potential"), "field.potential");
    return guarded("field.potential", [&] { return VectorField::gradient_type(Potential(s.dim, u), s.L); });
  }
  if (type == "explicit") {
    auto c = strings(require(j, path, "components"), "field.components", static_cast<size_t>(s.dim));
    return guarded("field.components", [&] { return VectorField::explicit_field(s.dim, c); });
  }
  throw ValidationError("field.type", "unknown field type '" + type + "'");
}

PerturbationBlock parse_perturbation(const json& j) {
  const std::string path = "perturbation";
  check_object(j, path);
  check_keys(j, path, {"alpha", "beta", "shape", "cubics", "bank_seed", "adversarial_factor"});
  PerturbationBlock p;
  if (auto v = find(j, "alpha")) {
    if (v->is_string()) {
      if (v->get<std::string>() != "auto") throw ValidationError("perturbation.alpha", "must be a number or \"auto\"");
    } else {
      p.alpha = number(*v, "perturbation.alpha");
      if (*p.alpha < 0.0) throw ValidationError("perturbation.alpha", "must be non-negative");
    }
  }
  if (auto v = find(j, "beta")) p.beta = positive(*v, "perturbation.beta");
  if (auto v = find(j, "shape")) p.shape = string(*v, "perturbation.shape");
  if (auto v = find(j, "cubics")) {
    const long c = integer(*v, "perturbation.cubics");
    if (c < 0 || c > 1000) throw ValidationError("perturbation.cubics", "must be between 0 and 1000");
    p.cubics = static_cast<int>(c);
  }
  if (auto v = find(j, "bank_seed")) {
    const long x = integer(*v, "perturbation.bank_seed");
    if (x < 0) throw ValidationError("perturbation.bank_seed", "must be non-negative");
    p.bank_seed = static_cast<std::uint64_t>(x);
  }
  if (auto v = find(j, "adversarial_factor")) p.adversarial_factor = positive(*v, "perturbation.adversarial_factor");
  return p;
}

}  // namespace

Scenario parse_scenario(const json& j) {
  check_object(j, "");
  check_keys(j, "",
             {"schema_version", "task", "lagrangian", "u0", "rho0", "entropy", "field", "perturbation", "numeric",
              "output", "suite"});
  const long version = integer(require(j, "", "schema_version"), "schema_version");
  if (version != kSchemaVersion)
    throw ValidationError("schema_version", "unsupported version " + std::to_string(version));
  Scenario s;
  s.task = string(require(j, "", "task"), "task");
  if (!kTasks.count(s.task)) throw ValidationError("task", "unknown task '" + s.task + "'");

  if (auto o = find(j, "output")) {
    check_object(*o, "output");
    check_keys(*o, "output", {"prefix", "format"});
    if (auto v = find(*o, "prefix")) s.output.prefix = string(*v, "output.prefix");
    if (auto v = find(*o, "format")) s.output.format = string(*v, "output.format");
    if (s.output.format != "csv" && s.output.format != "json")
      throw ValidationError("output.format", "must be \"csv\" or \"json\"");
  }
  if (s.output.prefix.empty()) s.output.prefix = "tonelli_" + s.task;

  if (s.task == "verify") {
    if (auto v = find(j, "suite")) s.suite = string(*v, "suite");
    return s;
  }

  parse_lagrangian(require(j, "", "lagrangian"), s);
  if (auto v = find(j, "numeric")) parse_numeric(*v, s);
  if (auto v = find(j, "u0")) {
    const std::string u = string(*v, "u0");
    s.u0 = guarded("u0", [&] { return Potential(s.dim, u); });
  }
  if (auto v = find(j, "rho0")) s.rho0 = parse_density(*v, s.dim);
  if (auto v = find(j, "entropy")) s.entropy = parse_entropy(*v);
  if (auto v = find(j, "field")) s.field = parse_field(*v, s);
  if (auto v = find(j, "perturbation")) s.perturbation = parse_perturbation(*v);

  const Numeric& n = s.numeric;
  if (s.task == "flow") {
    if (!n.x0) throw ValidationError("numeric.x0", "is required for task flow");
    if (!n.v0 && !s.field) throw ValidationError("numeric.v0", "flow needs numeric.v0 or a field");
  } else if (s.task == "cost") {
    if (!n.x0) throw ValidationError("numeric.x0", "is required for task cost");
    if (!n.y) throw ValidationError("numeric.y", "is required for task cost");
  } else if (s.task == "curvature") {
    if (!s.field && !s.u0) throw ValidationError("field", "curvature needs a field or u0");
    if (!s.field) s.field = VectorField::gradient_type(*s.u0, s.L);
    if (!n.box) throw ValidationError("numeric.box", "is required for task curvature");
  } else if (s.task == "interpolant" || s.task == "hessian") {
    if (!s.u0) throw ValidationError("u0", "is required for task " + s.task);
    if (!s.rho0) throw ValidationError("rho0", "is required for task " + s.task);
    if (s.task == "hessian" && !s.entropy) throw ValidationError("entropy", "is required for task hessian");
  } else if (s.task == "perturb") {
    if (!s.metric) throw ValidationError("lagrangian.metric", "perturb needs a riemannian or perturbed Lagrangian");
    if (!n.box) throw ValidationError("numeric.box", "is required for task perturb");
    if (!s.perturbation) {
      s.perturbation = PerturbationBlock{};
      // without a perturbation block, phi comes from lagrangian.phi as written
      if (s.L.kind() == LagrangianKind::perturbed) {
        s.perturbation->shape = s.L.perturbation();
        s.perturbation->alpha = 1.0;
      }
    }
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("file", "cannot read '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("file", std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(j);
}

const json& schema() {
  static const json s = json::parse(R"JSON({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "tonelli scenario",
  "type": "object",
  "required": ["schema_version", "task"],
  "additionalProperties": false,
  "properties": {
    "schema_version": {"const": 1},
    "task": {"enum": ["flow", "cost", "curvature", "interpolant", "hessian", "perturb", "verify"]},
    "suite": {"type": "string", "description": "verify only: all or one suite name"},
    "lagrangian": {
      "type": "object",
      "required": ["kind", "dim"],
      "additionalProperties": false,
      "properties": {
        "kind": {"enum": ["euclidean", "riemannian", "mechanical", "perturbed", "custom"]},
        "dim": {"type": "integer", "minimum": 1, "maximum": 6},
        "metric": {
          "type": "object",
          "required": ["type"],
          "additionalProperties": false,
          "properties": {
            "type": {"enum": ["identity", "conformal", "diagonal", "full"]},
            "lambda": {"type": "string", "description": "g = exp(2 lambda(x)) I"},
            "entries": {"type": "array", "items": {"type": "string"},
                        "description": "diagonal: d entries; full: row-major upper triangle"}
          }
        },
        "U": {"type": "string", "description": "potential in x1..xd, L = 1/2 <v, g v> + U"},
        "phi": {"type": "string", "description": "perturbation in v1..vd, L = 1/2 <v, g v> + phi"},
        "expression": {"type": "string", "description": "custom L in x1..xd, v1..vd"}
      }
    },
    "u0": {"type": "string", "description": "initial potential in x1..xd"},
    "rho0": {
      "type": "object",
      "required": ["type"],
      "additionalProperties": false,
      "properties": {
        "type": {"enum": ["bump", "custom"]},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "center": {"type": "array", "items": {"type": "number"}},
        "expression": {"type": "string"}
      }
    },
    "entropy": {
      "type": "object",
      "required": ["type"],
      "additionalProperties": false,
      "properties": {
        "type": {"enum": ["boltzmann", "power", "quadratic", "custom"]},
        "m": {"type": "number", "exclusiveMinimum": 1},
        "expression": {"type": "string", "description": "F in s"}
      }
    },
    "field": {
      "type": "object",
      "required": ["type"],
      "additionalProperties": false,
      "properties": {
        "type": {"enum": ["gradient", "explicit"]},
        "potential": {"type": "string"},
        "components": {"type": "array", "items": {"type": "string"}}
      }
    },
    "perturbation": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "alpha": {"oneOf": [{"type": "number", "minimum": 0}, {"const": "auto"}]},
        "beta": {"type": "number", "exclusiveMinimum": 0},
        "shape": {"type": "string", "description": "phi = alpha * shape(v); default exp(-|v|^2 / beta)"},
        "cubics": {"type": "integer", "minimum": 0},
        "bank_seed": {"type": "integer", "minimum": 0},
        "adversarial_factor": {"type": "number", "exclusiveMinimum": 0}
      }
    },
    "numeric": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "T": {"type": "number", "exclusiveMinimum": 0},
        "steps": {"type": "integer", "minimum": 1},
        "particles": {"type": "integer", "minimum": 3},
        "record_stride": {"type": "integer", "minimum": 1},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "fd_step": {"type": "number", "exclusiveMinimum": 0},
        "richardson": {"type": "boolean"},
        "box": {
          "type": "object",
          "required": ["lo", "hi"],
          "additionalProperties": false,
          "properties": {
            "lo": {"type": "array", "items": {"type": "number"}},
            "hi": {"type": "array", "items": {"type": "number"}}
          }
        },
        "grid": {"type": "integer", "minimum": 2},
        "x0": {"type": "array", "items": {"type": "number"}},
        "v0": {"type": "array", "items": {"type": "number"}},
        "y": {"type": "array", "items": {"type": "number"}},
        "seed": {"type": "integer", "minimum": 0},
        "samples": {"type": "integer", "minimum": 1},
        "calibration_samples": {"type": "integer", "minimum": 1},
        "bound_grid": {"type": "integer", "minimum": 2}
      }
    },
    "output": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "prefix": {"type": "string"},
        "format": {"enum": ["csv", "json"]}
      }
    }
  },
  "definitions": {
    "table_report": {
      "type": "object",
      "required": ["columns", "rows"],
      "properties": {
        "columns": {"type": "array", "items": {"type": "string"}},
        "rows": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
      }
    },
    "perturb_report": {
      "type": "object",
      "required": ["bounds", "rejected", "norms", "scope"],
      "properties": {
        "bounds": {"type": "object", "required": ["c_g", "k_g", "samples"]},
        "rejected": {"type": "boolean"},
        "eps": {"type": "number"},
        "alpha": {"type": "number"},
        "norms": {"type": "object", "required": ["grad", "field"]},
        "scope": {"type": "string"},
        "check": {"type": "object"},
        "adversarial": {"type": "object"}
      }
    },
    "error_report": {
      "type": "object",
      "required": ["error", "class", "message"],
      "properties": {
        "error": {"type": "string"},
        "class": {"enum": ["validation", "numerical", "internal"]},
        "message": {"type": "string"},
        "field": {"type": "string"},
        "witness": {"type": "number"},
        "crossings": {"type": "array", "items": {"type": "object", "required": ["particle", "time"]}}
      }
    }
  }
})JSON");
  return s;
}

std::vector<std::string> required_keys(const json& schema_object) {
  std::vector<std::string> out;
  if (auto it = schema_object.find("required"); it != schema_object.end())
    for (const auto& k : *it) out.push_back(k.get<std::string>());
  return out;
}

}  // namespace tonelli::cli
