#include "verify.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"
#include "scenario.hpp"
#include "tonelli/curvature.hpp"
#include "tonelli/entropy.hpp"
#include "tonelli/error.hpp"
#include "tonelli/flow.hpp"
#include "tonelli/perturbation.hpp"
#include "tonelli/transport.hpp"

namespace tonelli::cli {

namespace fs = std::filesystem;

bool SuiteResult::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return !checks.empty();
}

std::string format_check(const Check& c) {
  char buf[160];
  if (std::isnan(c.tolerance))
    std::snprintf(buf, sizeof buf, "%s", c.pass ? "holds" : "does not hold");
  else
    std::snprintf(buf, sizeof buf, "measured %.3e (tolerance %.3e)", c.measured, c.tolerance);
  std::string s = std::string("  [") + (c.pass ? "PASS" : "FAIL") + "] " + c.name + ": " + buf;
  if (!c.detail.empty()) s += " " + c.detail;
  return s;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Check upper(std::string name, double measured, double tol, std::string detail = "") {
  return {std::move(name), std::isfinite(measured) && measured <= tol, measured, tol, std::move(detail)};
}

Check within(std::string name, double measured, double lo, double hi) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "range [%g, %g]", lo, hi);
  return {std::move(name), measured >= lo && measured <= hi, measured, hi, buf};
}

Check flag(std::string name, bool ok, std::string detail = "") {
  return {std::move(name), ok, ok ? 1.0 : 0.0, NAN, std::move(detail)};
}

std::string xd(int d) { return "x" + std::to_string(d); }

/// Built-in families of the acceptance suites.
struct Family {
  std::string name;
  LagrangianModel L;
  std::optional<Metric> g;
};

std::vector<Family> families(int d) {
  const std::string last = xd(d);
  std::vector<std::string> diag;
  for (int i = 1; i <= d; ++i) diag.push_back("1+0.2*x" + std::to_string(i) + "^2");
  const Metric conformal = Metric::conformal(d, "0.1*sin(x1) - 0.05*norm2(x)");
  const Metric contracting = Metric::conformal(d, "-0.05*norm2(x)");
  const Metric diagonal = Metric::diagonal(diag);
  return {
      {"euclidean", LagrangianModel::euclidean(d), std::nullopt},
      {"riemannian", LagrangianModel::riemannian(conformal), conformal},
      {"mechanical", LagrangianModel::mechanical(diagonal, "0.3*x1^2 + 0.1*x1*" + last + " - 0.2*cos(" + last + ")"),
       diagonal},
      {"perturbed", LagrangianModel::perturbed(contracting, "0.01*exp(-norm2(v))"), contracting},
  };
}

std::vector<Potential> potentials(int d) {
  const std::string last = xd(d);
  return {
      Potential(d, "0.5*norm2(x)"),
      Potential(d, "0.3*x1 - 0.2*" + last + " + 0.1*x1*" + last),
      Potential(d, "0.1*x1^3 + 0.2*" + last + "^2 - 0.05*x1^2*" + last),
      Potential(d, "0.2*sin(x1) + 0.1*cos(" + last + ")"),
      Potential(d, "exp(-0.5*norm2(x))*(0.5*x1 + 0.2*" + last + "^2)"),
  };
}

/// Random matrix with condition number at most 10.
Mat well_conditioned(std::mt19937_64& rng, int d) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    Mat p(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) p(i, j) = u(rng);
    p += 1.5 * Mat::Identity(d, d);
    Eigen::JacobiSVD<Mat> svd(p);
    const Vec s = svd.singularValues();
    if (s(d - 1) > 0.0 && s(0) / s(d - 1) <= 10.0) return p;
  }
}

SuiteResult flat() {
  SuiteResult r{"flat", {}, 0.0};
  const auto t0 = Clock::now();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto random_vec = [&](int d) {
    Vec x(d);
    for (int i = 0; i < d; ++i) x(i) = u(rng);
    return x;
  };
  double cost_err = 0.0, ab = 0.0, k_err = 0.0;
  for (int d = 1; d <= 3; ++d) {
    const auto L = LagrangianModel::euclidean(d);
    for (double T : {0.5, 1.0, 2.0}) {
      const Vec x = random_vec(d), y = random_vec(d);
      const CostResult c = cost(L, x, y, T, 1e-12);
      cost_err = std::max(cost_err, std::abs(c.c - (x - y).squaredNorm() / (2.0 * T)));
    }
    for (int k = 0; k < 10; ++k) {
      const Vec x = random_vec(d), v = random_vec(d);
      ab = std::max({ab, matrix_A(L, x, v).cwiseAbs().maxCoeff(), matrix_B(L, x, v).cwiseAbs().maxCoeff()});
      Mat M(d, d);
      for (int i = 0; i < d; ++i) M.col(i) = random_vec(d);
      const double k_def = curvature_def(L, VectorField::linear(M), x);
      k_err = std::max(k_err, std::abs(k_def - (M * M).trace()));
    }
  }
  r.checks.push_back(upper("cost |x-y|^2/(2T)", cost_err, 1e-10, "d=1..3, 9 pairs"));
  r.checks.push_back(upper("A = B = 0", ab, 0.0, "exact"));
  r.checks.push_back(upper("K(Mx) = tr(M^2)", k_err, 1e-12));
  r.seconds = seconds_since(t0);
  r.checks.push_back(upper("runtime [s]", r.seconds, 1.0));
  return r;
}

SuiteResult curvature() {
  SuiteResult r{"curvature", {}, 0.0};
  const auto t0 = Clock::now();
  for (int d = 1; d <= 3; ++d) {
    const auto points = Box::cube(d, 0.8).sample(30, 100 + d);
    const auto us = potentials(d);
    for (const auto& fam : families(d)) {
      double worst = 0.0;
      for (const auto& u : us) {
        const auto field = VectorField::gradient_type(u, fam.L);
        for (const auto& x : points) {
          const CurvatureReport c = curvature_report(fam.L, field, x);
          worst = std::max({worst, c.residual_div, c.residual_indexed.value_or(INFINITY)});
        }
      }
      r.checks.push_back(upper(fam.name + " d=" + std::to_string(d) + " three-way", worst, 1e-6, "5 fields x 30 points"));
    }
  }
  r.seconds = seconds_since(t0);
  r.checks.push_back(upper("runtime [s]", r.seconds, 60.0));
  return r;
}

SuiteResult invariance() {
  SuiteResult r{"invariance", {}, 0.0};
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  for (int d = 1; d <= 3; ++d) {
    const auto points = Box::cube(d, 0.5).sample(3, 200 + d);
    const Potential u = potentials(d)[2];
    for (const auto& fam : families(d)) {
      const auto field = VectorField::gradient_type(u, fam.L);
      double worst = 0.0;
      for (int k = 0; k < 10; ++k) {
        const Mat P = well_conditioned(rng, d);
        const auto L2 = fam.L.linear_change(P);
        const auto f2 = field.linear_change(P);
        for (const auto& x : points)
          worst = std::max(worst, std::abs(curvature_def(L2, f2, P * x) - curvature_def(fam.L, field, x)));
      }
      r.checks.push_back(upper(fam.name + " d=" + std::to_string(d), worst, 1e-7, "10 changes x 3 points"));
    }
  }
  r.seconds = seconds_since(t0);
  return r;
}

SuiteResult riccati() {
  SuiteResult r{"riccati", {}, 0.0};
  const auto t0 = Clock::now();
  for (int d = 2; d <= 3; ++d) {
    const auto starts = Box::cube(d, 0.5).sample(3, 300 + d);
    const Potential u = potentials(d)[1];
    for (const auto& fam : families(d)) {
      const auto field = VectorField::gradient_type(u, fam.L);
      double gap = 0.0, drift = 0.0;
      for (const auto& x0 : starts) {
        const Trajectory j = jacobian_flow(fam.L, x0, field, 0.5, 200);
        const Trajectory q = riccati_flow(fam.L, x0, field, 0.5, 200);
        for (size_t i = 0; i < j.size(); ++i)
          gap = std::max(gap, (q.U[i] - j.Jdot[i] * j.J[i].inverse()).norm());
        drift = std::max(drift, lagrangian_flow(fam.L, x0, field.value(x0), 1.0, 2000).energy_drift());
      }
      const std::string tag = fam.name + " d=" + std::to_string(d);
      r.checks.push_back(upper(tag + " |U - J'J^-1|", gap, 1e-7));
      r.checks.push_back(upper(tag + " energy drift", drift, 1e-6, "2000 steps"));
    }
  }
  r.seconds = seconds_since(t0);
  return r;
}

SuiteResult bochner() {
  SuiteResult r{"bochner", {}, 0.0};
  const auto t0 = Clock::now();
  struct Sample {
    std::string name;
    LagrangianModel L;
    Potential u;
  };
  const std::vector<Sample> samples = {
      {"conformal d=2", LagrangianModel::riemannian(Metric::conformal(2, "0.1*sin(x1) - 0.05*norm2(x)")),
       Potential(2, "0.4*x1 + 0.3*x2 + 0.2*x1*x2 + 0.1*x2^2")},
      {"conformal d=3", LagrangianModel::riemannian(Metric::conformal(3, "-0.05*(x1^2+x2^2+x3^2)")),
       Potential(3, "0.3*x1 - 0.2*x2*x3 + 0.1*x1^2 + 0.05*x3^3")},
      {"full d=2", LagrangianModel::riemannian(Metric(2, {"1+0.3*x1^2", "0.2*x1*x2", "2+0.1*sin(x2)"})),
       Potential(2, "0.4*x1 + 0.3*x2 + 0.2*x1*x2 + 0.1*x2^2")},
  };
  for (const auto& s : samples) {
    const auto field = VectorField::gradient_type(s.u, s.L);
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& x : Box::cube(s.u.dim(), 0.6).sample(5, 400)) {
      const double ratio = bochner_residual(s.L, field, x, 1e-2) / bochner_residual(s.L, field, x, 5e-3);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    r.checks.push_back(within(s.name + " min ratio h/(h/2)", lo, 3.5, 4.5));
    r.checks.push_back(within(s.name + " max ratio h/(h/2)", hi, 3.5, 4.5));
  }
  r.seconds = seconds_since(t0);
  return r;
}

InterpolantOptions particles(int n, int steps) {
  InterpolantOptions o;
  o.particles_per_dim = n;
  o.steps = steps;
  return o;
}

const Density& unit_bump() {
  static const Density rho = Density::bump(2, 1.0, Vec::Zero(2));
  return rho;
}

DisplacementInterpolant mechanical_interpolant() {
  return build_interpolant(LagrangianModel::mechanical(Metric::conformal(2, "0.1*x1^2+0.05*x2"), "0.3*x1^2+0.1*x1*x2"),
                           Potential(2, "0.2*x1^2 + 0.1*x1*x2 - 0.05*x2^2 + 0.1*x1"), unit_bump(), 0.2,
                           particles(41, 20));
}

SuiteResult hessian() {
  SuiteResult r{"hessian", {}, 0.0};
  const auto t0 = Clock::now();
  const auto F = EntropySpec::boltzmann();
  const auto dil = build_interpolant(LagrangianModel::euclidean(2), Potential(2, "0.5*(x1^2+x2^2)"), unit_bump(), 1.0,
                                     particles(41, 10));
  for (double t : {0.0, 1.0}) {
    const double exact = 2.0 / ((1.0 + t) * (1.0 + t));
    const std::string tag = "dilation t=" + std::to_string(static_cast<int>(t));
    r.checks.push_back(upper(tag + " formula", std::abs(displacement_hessian(F, dil, t).value - exact), 1e-3));
    r.checks.push_back(upper(tag + " fd oracle", std::abs(hessian_fd_oracle(F, dil, t, 1e-2) - exact), 1e-3));
  }
  const auto mech = mechanical_interpolant();
  for (const auto& G : {EntropySpec::boltzmann(), EntropySpec::power(2.0)}) {
    double gap = 0.0;
    for (double t : {0.0, 0.1, 0.2})
      gap = std::max(gap, std::abs(displacement_hessian(G, mech, t).value - hessian_fd_oracle(G, mech, t, 1e-2)));
    r.checks.push_back(upper("mechanical " + G.name() + " formula vs fd", gap, 5e-4));
  }
  const auto tr = build_interpolant(LagrangianModel::euclidean(2), Potential(2, "0.2*x1 - 0.1*x2"), unit_bump(), 1.0,
                                    particles(41, 10));
  double flat = 0.0;
  for (double t : {0.0, 0.5, 1.0})
    flat = std::max({flat, std::abs(displacement_hessian(F, tr, t).value), std::abs(hessian_fd_oracle(F, tr, t, 1e-2))});
  r.checks.push_back(upper("translation |Hessian|", flat, 1e-8));
  r.seconds = seconds_since(t0);
  r.checks.push_back(upper("runtime [s]", r.seconds, 120.0, "41^2 particles"));
  return r;
}

SuiteResult continuity() {
  SuiteResult r{"continuity", {}, 0.0};
  const auto t0 = Clock::now();
  const auto mech = mechanical_interpolant();
  const double r1 = continuity_residual(mech, 0.1, 1e-2);
  const double r2 = continuity_residual(mech, 0.1, 5e-3);
  r.checks.push_back(within("mechanical residual(h)/residual(h/2)", r1 / r2, 3.5, 4.5));
  const auto dil = build_interpolant(LagrangianModel::euclidean(2), Potential(2, "0.5*(x1^2+x2^2)"), unit_bump(), 1.0,
                                     particles(41, 10));
  for (const auto* I : {&mech, &dil}) {
    double worst = 0.0;
    for (double t : I->times()) worst = std::max(worst, mass_check(*I, t));
    r.checks.push_back(upper(std::string(I == &mech ? "mechanical" : "dilation") + " |m - 1|", worst, 1e-5,
                             "all stored times"));
  }
  r.seconds = seconds_since(t0);
  return r;
}

SuiteResult perturb() {
  SuiteResult r{"perturb", {}, 0.0};
  const auto t0 = Clock::now();
  r.checks.push_back(flag("perturbation_budget(1.0, 1.2) == 0.1", perturbation_budget(1.0, 1.2) == 0.1));
  PerturbationScenario s;
  s.g = Metric::conformal(3, "-0.05*(x1^2+x2^2+x3^2)");
  s.box = Box::cube(3, 1.0);
  s.bank = default_field_bank(3, 10, 42);
  const auto bounds = estimate_bounds(s.g, s.box, s.bound_samples_per_dim);
  r.checks.push_back(flag("conformal d=3 scenario accepted", !bounds.rejected, bounds.reason));
  if (bounds.rejected) return r;
  const double eps = perturbation_budget(bounds.c_g, bounds.k_g);
  const AlphaSearch a = calibrate_alpha(s, eps);
  s.phi = PhiSpec{a.alpha, 1.0, ""};
  const NonnegReport n = perturbed_nonneg_check(s);
  char detail[96];
  std::snprintf(detail, sizeof detail, "alpha %.4e over %zu pairs", a.alpha, n.samples);
  r.checks.push_back({"min K~ (lower limit)", n.min_k_tilde >= -1e-8 && n.samples == 10000, n.min_k_tilde, -1e-8, detail});
  r.checks.push_back(upper("difference ledger failures", static_cast<double>(n.ledger_failures), 0.0,
                           "five-term + three-term <= 5 eps a^2 + 6 eps b^2"));
  r.checks.push_back(upper("per-group budget failures", static_cast<double>(n.group_failures), 0.0));
  r.checks.push_back(upper("certified chain failures",
                           static_cast<double>(n.lower_bound_failures + n.chain_failures + n.negative), 0.0));
  s.phi = s.phi.scaled(10.0);
  const NonnegReport adv = perturbed_nonneg_check(s);
  r.checks.push_back(flag("10x alpha triggers the violation flag", adv.chain_violation(),
                          "first violated group " + adv.budget.first_violated_group));
  r.seconds = seconds_since(t0);
  return r;
}

SuiteResult entropy() {
  SuiteResult r{"entropy", {}, 0.0};
  const auto t0 = Clock::now();
  for (const auto& F : {EntropySpec::boltzmann(), EntropySpec::power(2.0), EntropySpec::power(1.5),
                        EntropySpec::quadratic()}) {
    const auto a = admissibility(F);
    r.checks.push_back(flag(F.name() + " passes F1 and F2", a.admissible && a.f1, a.violated));
  }
  try {
    validate_entropy(EntropySpec::custom("-s^2"));
    r.checks.push_back(flag("-s^2 rejected", false, "accepted"));
  } catch (const InadmissibleEntropy& e) {
    r.checks.push_back(flag("-s^2 rejected", std::isfinite(e.witness()) && e.witness() > 0.0,
                            "witness s = " + json(e.witness()).dump()));
  }
  const auto F = EntropySpec::boltzmann();
  for (int d = 1; d <= 3; ++d) {
    const auto m = mccann_check(F, d);
    double gap = 0.0;
    for (size_t i = 0; i < m.s.size(); ++i) gap = std::max(gap, std::abs(m.phi[i] + d * std::log(m.s[i])));
    const std::string tag = "boltzmann d=" + std::to_string(d);
    r.checks.push_back(upper(tag + " s^d F(s^-d) = -d log s", gap, 1e-12));
    r.checks.push_back(flag(tag + " convex and nonincreasing", m.convex && m.nonincreasing));
  }
  r.seconds = seconds_since(t0);
  return r;
}

struct Spawn {
  int status = -1;
  std::string out, err;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string quoted(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

Spawn spawn(const std::string& cli, const std::string& scenario, const fs::path& cwd) {
  const std::string cmd = "cd " + quoted(cwd.string()) + " && " + quoted(cli) + " run " + quoted(scenario) +
                          " >stdout.txt 2>stderr.txt";
  Spawn s;
  const int raw = std::system(cmd.c_str());
  s.status = raw != -1 && WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  s.out = read_file(cwd / "stdout.txt");
  s.err = read_file(cwd / "stderr.txt");
  return s;
}

fs::path temp_dir() {
  std::string tmpl = (fs::temp_directory_path() / "tonelli-verify-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw std::runtime_error("cannot create a temporary directory");
  return tmpl;
}

SuiteResult cli_suite(const VerifyContext& ctx) {
  SuiteResult r{"cli", {}, 0.0};
  const auto t0 = Clock::now();
  if (ctx.cli_path.empty() || !fs::exists(ctx.cli_path)) {
    r.checks.push_back(flag("cli binary available", false, ctx.cli_path));
    return r;
  }
  const fs::path dir = fs::absolute(ctx.scenario_dir);
  const fs::path a = temp_dir(), b = temp_dir();

  const std::string dilation = (dir / "dilation_hessian.json").string();
  const Scenario sc = load_scenario(dilation);
  const std::string csv = sc.output.prefix + ".csv";
  const Spawn ra = spawn(ctx.cli_path, dilation, a), rb = spawn(ctx.cli_path, dilation, b);
  const std::string ca = read_file(a / csv), cb = read_file(b / csv);
  r.checks.push_back(flag("dilation scenario exits 0 twice", ra.status == 0 && rb.status == 0,
                          "exit " + std::to_string(ra.status) + ", " + std::to_string(rb.status)));
  const bool header = ca.rfind("t,entropy,hessian_formula,hessian_fd", 0) == 0;
  r.checks.push_back(flag("dilation CSV byte-identical", !ca.empty() && ca == cb && header,
                          std::to_string(ca.size()) + " bytes"));

  const Spawn inv = spawn(ctx.cli_path, (dir / "invalid_horizon.json").string(), a);
  std::string field;
  try {
    field = nlohmann::json::parse(inv.err).value("field", "");
  } catch (const std::exception&) {
  }
  r.checks.push_back(flag("invalid scenario exits 2 naming numeric.T", inv.status == 2 && field == "numeric.T",
                          "exit " + std::to_string(inv.status) + ", field '" + field + "'"));

  const Spawn caus = spawn(ctx.cli_path, (dir / "caustic.json").string(), a);
  double worst = INFINITY;
  size_t count = 0;
  try {
    const auto j = nlohmann::json::parse(caus.err);
    worst = 0.0;
    for (const auto& c : j.at("crossings")) {
      worst = std::max(worst, std::abs(c.at("time").get<double>() - 1.0));
      ++count;
    }
  } catch (const std::exception&) {
  }
  r.checks.push_back(flag("caustic scenario exits 3", caus.status == 3, "exit " + std::to_string(caus.status)));
  r.checks.push_back(upper("caustic crossing |t - 1|", count > 0 ? worst : INFINITY, 1e-3,
                           std::to_string(count) + " particles"));

  std::error_code ec;
  fs::remove_all(a, ec);
  fs::remove_all(b, ec);
  r.seconds = seconds_since(t0);
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"flat",       "curvature", "invariance", "riccati", "bochner",
                                                 "hessian",    "continuity", "perturb",   "entropy", "cli"};
  return names;
}

SuiteResult run_suite(const std::string& name, const VerifyContext& ctx) {
  static const std::map<std::string, std::function<SuiteResult(const VerifyContext&)>> table = {
      {"flat", [](const VerifyContext&) { return flat(); }},
      {"curvature", [](const VerifyContext&) { return curvature(); }},
      {"invariance", [](const VerifyContext&) { return invariance(); }},
      {"riccati", [](const VerifyContext&) { return riccati(); }},
      {"bochner", [](const VerifyContext&) { return bochner(); }},
      {"hessian", [](const VerifyContext&) { return hessian(); }},
      {"continuity", [](const VerifyContext&) { return continuity(); }},
      {"perturb", [](const VerifyContext&) { return perturb(); }},
      {"entropy", [](const VerifyContext&) { return entropy(); }},
      {"cli", cli_suite},
  };
  auto it = table.find(name);
  if (it == table.end()) throw ValidationError("suite", "unknown suite '" + name + "'");
  const auto t0 = Clock::now();
  SuiteResult r = it->second(ctx);
  r.seconds = seconds_since(t0);
  return r;
}

}  // namespace tonelli::cli
