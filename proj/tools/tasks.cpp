#include "tasks.hpp"

#include <cstdio>

#include "tonelli/curvature.hpp"
#include "tonelli/entropy.hpp"
#include "tonelli/error.hpp"
#include "tonelli/flow.hpp"
#include "tonelli/parallel.hpp"
#include "tonelli/perturbation.hpp"
#include "tonelli/transport.hpp"
#include "verify.hpp"

#ifndef TONELLI_SCENARIO_DIR
#define TONELLI_SCENARIO_DIR "scenarios"
#endif

namespace tonelli::cli {

std::string to_csv(const Table& t) {
  std::string out;
  for (size_t c = 0; c < t.columns.size(); ++c) out += (c ? "," : "") + t.columns[c];
  out += '\n';
  char buf[40];
  for (const auto& row : t.rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (t.integer[c])
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(row[c]));
      else
        std::snprintf(buf, sizeof buf, "%.16e", row[c]);
      if (c) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

json to_json(const Table& t) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::array();
    for (size_t c = 0; c < row.size(); ++c) {
      if (t.integer[c])
        r.push_back(static_cast<long long>(row[c]));
      else
        r.push_back(row[c]);
    }
    rows.push_back(std::move(r));
  }
  return {{"columns", t.columns}, {"rows", std::move(rows)}};
}

namespace {

void vector_columns(Table& t, const char* prefix, int d) {
  for (int i = 1; i <= d; ++i) t.add_column(prefix + std::to_string(i));
}

void append(std::vector<double>& row, const Vec& v) {
  for (int i = 0; i < v.size(); ++i) row.push_back(v(i));
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void emit(TaskOutput& out, const Scenario& s, const Table& t) {
  const bool csv = s.output.format == "csv";
  const std::string path = s.output.prefix + (csv ? ".csv" : ".json");
  out.files[path] = csv ? to_csv(t) : to_json(t).dump(1) + "\n";
  out.summary["outputs"].push_back(path);
  out.summary["rows"] = t.rows.size();
}

Table trajectory_table(const Trajectory& tr, int d) {
  Table t;
  t.add_column("t");
  vector_columns(t, "x", d);
  vector_columns(t, "v", d);
  t.add_column("H");
  t.add_column("detJ");
  for (size_t i = 0; i < tr.size(); ++i) {
    std::vector<double> row{tr.times[i]};
    append(row, tr.x[i]);
    append(row, tr.v[i]);
    row.push_back(tr.energy[i]);
    row.push_back(tr.det_J(i));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void flow_task(const Scenario& s, TaskOutput& out) {
  const Numeric& n = s.numeric;
  const int d = s.dim;
  FlowOptions opt;
  opt.jacobian = true;
  opt.record_stride = n.record_stride;
  opt.J0 = Mat::Identity(d, d);
  opt.Jdot0 = Mat::Zero(d, d);
  Vec v0;
  if (n.v0) {
    v0 = *n.v0;
  } else {
    const FieldJet j = s.field->jet(*n.x0, 1);
    v0 = j.value;
    opt.Jdot0 = j.jac;
  }
  const Trajectory tr = integrate(s.L, *n.x0, v0, n.T, n.steps, opt);
  emit(out, s, trajectory_table(tr, d));
  out.summary["energy_drift"] = tr.energy_drift();
  out.summary["caustic"] = tr.caustic;
  if (tr.caustic) out.summary["caustic_time"] = tr.caustic_time;
}

void cost_task(const Scenario& s, TaskOutput& out) {
  const Numeric& n = s.numeric;
  CostOptions copt;
  copt.steps = n.steps;
  copt.seed = n.seed;
  const CostResult c = cost(s.L, *n.x0, *n.y, n.T, n.tol, copt);
  FlowOptions opt;
  opt.jacobian = true;
  opt.record_stride = n.record_stride;
  const Trajectory tr = integrate(s.L, *n.x0, c.v0, n.T, n.steps, opt);
  emit(out, s, trajectory_table(tr, s.dim));
  out.summary["cost"] = c.c;
  out.summary["v0"] = vec_json(c.v0);
  out.summary["residual"] = c.residual;
  out.summary["branches"] = c.branches;
}

void curvature_task(const Scenario& s, TaskOutput& out) {
  const int d = s.dim;
  const VectorField& field = *s.field;
  const auto points = s.numeric.box->grid(s.numeric.grid);
  std::vector<CurvatureReport> reports(points.size());
  parallel_for(points.size(), [&](size_t i) { reports[i] = curvature_report(s.L, field, points[i]); });
  Table t;
  vector_columns(t, "x", d);
  for (const char* c : {"k_def", "k_div", "residual_div"}) t.add_column(c);
  const bool indexed = field.is_gradient();
  if (indexed) {
    for (const char* c : {"k_indexed", "k_indexed_printed", "residual_indexed"}) t.add_column(c);
    for (const char* name : IndexTerms::names()) t.add_column(name);
    t.add_column("I_general");
  }
  double worst = 0.0;
  for (const auto& r : reports) {
    std::vector<double> row;
    append(row, r.x);
    row.insert(row.end(), {r.k_def, r.k_div, r.residual_div});
    worst = std::max(worst, r.residual_div);
    if (indexed) {
      row.insert(row.end(), {*r.k_indexed, *r.k_indexed_printed, *r.residual_indexed});
      row.insert(row.end(), r.terms->g.begin(), r.terms->g.end());
      row.push_back(r.terms->I_general);
      worst = std::max(worst, *r.residual_indexed);
    }
    t.rows.push_back(std::move(row));
  }
  emit(out, s, t);
  out.summary["max_residual"] = worst;
}

InterpolantOptions interpolant_options(const Numeric& n) {
  InterpolantOptions o;
  o.particles_per_dim = n.particles;
  o.steps = n.steps;
  o.record_stride = n.record_stride;
  return o;
}

void interpolant_task(const Scenario& s, TaskOutput& out) {
  const auto I = build_interpolant(s.L, *s.u0, *s.rho0, s.numeric.T, interpolant_options(s.numeric));
  Table t;
  t.add_column("t");
  t.add_column("particle", true);
  vector_columns(t, "x", s.dim);
  t.add_column("detJ");
  t.add_column("rho");
  double mass = 0.0;
  for (size_t k = 0; k < I.times().size(); ++k) {
    const Snapshot& snap = I.stored(k);
    for (size_t i = 0; i < snap.p.size(); ++i) {
      std::vector<double> row{snap.t, static_cast<double>(i)};
      append(row, snap.p[i].x);
      row.push_back(snap.p[i].J.determinant());
      row.push_back(I.density(i, snap.p[i]));
      t.rows.push_back(std::move(row));
    }
    mass = std::max(mass, mass_check(I, snap.t));
  }
  emit(out, s, t);
  out.summary["particles"] = I.size();
  out.summary["max_mass_error"] = mass;
  out.summary["calibration_error"] = calibration_check(I);
}

void hessian_task(const Scenario& s, TaskOutput& out) {
  const EntropySpec& F = *s.entropy;
  validate_entropy(F);
  const auto I = build_interpolant(s.L, *s.u0, *s.rho0, s.numeric.T, interpolant_options(s.numeric));
  Table t;
  for (const char* c : {"t", "entropy", "hessian_formula", "hessian_fd", "min_curvature", "hessian_printed_variant"})
    t.add_column(c);
  double gap = 0.0;
  for (size_t k = 0; k < I.times().size(); ++k) {
    const Snapshot& snap = I.stored(k);
    const HessianReport h = displacement_hessian(F, I, snap);
    const double fd = hessian_fd_oracle(F, I, snap.t, s.numeric.fd_step, s.numeric.richardson);
    t.rows.push_back({snap.t, entropy_value(F, I, snap), h.value, fd, h.min_curvature, h.printed_variant});
    gap = std::max(gap, std::abs(h.value - fd));
  }
  emit(out, s, t);
  out.summary["entropy"] = F.name();
  out.summary["particles"] = I.size();
  out.summary["max_formula_fd_gap"] = gap;
  out.summary["chord_violation"] = convexity_report(F, I).chord_violation;
}

json budget_json(const PhiBudgetReport& b) {
  json ratio = json::object();
  for (int g = 0; g < 8; ++g) ratio[IndexTerms::names()[g]] = b.group_ratio[g];
  return {{"alpha", b.alpha},
          {"eps", b.eps},
          {"velocity_box", {{"lo", vec_json(b.velocity_box.lo)}, {"hi", vec_json(b.velocity_box.hi)}}},
          {"hess_norm_max", b.hess_norm_max},
          {"third_max", b.third_max},
          {"samples", b.samples},
          {"printed_ledger_holds", b.printed_ledger_holds},
          {"corrected_ledger_holds", b.corrected_ledger_holds},
          {"difference_holds", b.difference_holds},
          {"min_margin", b.min_margin},
          {"group_ratio", ratio},
          {"first_violated_group", b.first_violated_group}};
}

json check_json(const NonnegReport& r) {
  return {{"alpha", r.alpha},
          {"samples", r.samples},
          {"min_k", r.min_k},
          {"min_k_tilde", r.min_k_tilde},
          {"max_consistency_gap", r.max_consistency_gap},
          {"max_six_seven_gap", r.max_six_seven_gap},
          {"ledger_failures", r.ledger_failures},
          {"group_failures", r.group_failures},
          {"lower_bound_failures", r.lower_bound_failures},
          {"chain_failures", r.chain_failures},
          {"negative", r.negative},
          {"tolerance", r.tolerance},
          {"chain_violation", r.chain_violation()},
          {"budget", budget_json(r.budget)}};
}

void perturb_task(const Scenario& s, TaskOutput& out) {
  const Numeric& n = s.numeric;
  const PerturbationBlock& p = *s.perturbation;
  PerturbationScenario ps;
  ps.g = *s.metric;
  ps.box = *n.box;
  ps.phi = PhiSpec{p.alpha.value_or(0.0), p.beta, p.shape};
  ps.bank = default_field_bank(s.dim, p.cubics, p.bank_seed);
  ps.bound_samples_per_dim = n.bound_grid;
  ps.samples = n.samples;
  ps.calibration_samples = n.calibration_samples;
  ps.seed = n.seed;

  const MetricBounds bounds = estimate_bounds(ps.g, ps.box, ps.bound_samples_per_dim);
  json report = {{"schema_version", kSchemaVersion},
                 {"bounds",
                  {{"c_g", bounds.c_g},
                   {"k_g", bounds.k_g},
                   {"k_argmin", vec_json(bounds.k_argmin)},
                   {"k_g_euclidean_hessian", bounds.k_g_euclidean_hessian},
                   {"samples", bounds.samples},
                   {"reason", bounds.reason}}},
                 {"rejected", bounds.rejected},
                 {"box", {{"lo", vec_json(ps.box.lo)}, {"hi", vec_json(ps.box.hi)}}},
                 {"phi", PhiSpec{1.0, p.beta, p.shape}.expression()},
                 {"norms", {{"grad", "frobenius norm of the covariant jacobian"}, {"field", "euclidean"}}},
                 {"scope", "bounds and samples restricted to the declared box"}};
  if (!bounds.rejected) {
    const double eps = perturbation_budget(bounds.c_g, bounds.k_g);
    report["eps"] = eps;
    if (!p.alpha) {
      const AlphaSearch a = calibrate_alpha(ps, eps);
      ps.phi.alpha = a.alpha;
      report["alpha_search"] = {
          {"boundary", a.alpha_boundary}, {"alpha", a.alpha}, {"iterations", a.iterations}};
    }
    const NonnegReport r = perturbed_nonneg_check(ps);
    report["check"] = check_json(r);
    if (p.adversarial_factor > 0.0) {
      PerturbationScenario adv = ps;
      adv.phi = ps.phi.scaled(p.adversarial_factor);
      report["adversarial"] = {{"factor", p.adversarial_factor}, {"check", check_json(perturbed_nonneg_check(adv))}};
    }
    out.summary["min_k_tilde"] = r.min_k_tilde;
    out.summary["chain_violation"] = r.chain_violation();
  }
  const std::string path = s.output.prefix + ".json";
  out.files[path] = report.dump(1) + "\n";
  out.summary["outputs"].push_back(path);
  out.summary["rejected"] = bounds.rejected;
}

void verify_task(const Scenario& s, const std::string& self, TaskOutput& out) {
  const VerifyContext ctx{self, TONELLI_SCENARIO_DIR};
  std::vector<std::string> names;
  if (s.suite == "all")
    names = suite_names();
  else
    names = {s.suite};
  json suites = json::object();
  bool ok = true;
  for (const auto& name : names) {
    const SuiteResult r = run_suite(name, ctx);
    suites[name] = r.pass();
    ok = ok && r.pass();
  }
  out.summary["suites"] = suites;
  out.summary["pass"] = ok;
  out.exit_code = ok ? 0 : 1;
}

}  // namespace

TaskOutput run_task(const Scenario& s, const std::string& self_path) {
  TaskOutput out;
  out.summary = {{"task", s.task}, {"outputs", json::array()}};
  if (s.task == "flow")
    flow_task(s, out);
  else if (s.task == "cost")
    cost_task(s, out);
  else if (s.task == "curvature")
    curvature_task(s, out);
  else if (s.task == "interpolant")
    interpolant_task(s, out);
  else if (s.task == "hessian")
    hessian_task(s, out);
  else if (s.task == "perturb")
    perturb_task(s, out);
  else if (s.task == "verify")
    verify_task(s, self_path, out);
  else
    throw ValidationError("task", "unknown task '" + s.task + "'");
  return out;
}

}  // namespace tonelli::cli
