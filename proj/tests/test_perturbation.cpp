#include <cmath>

#include "doctest.h"
#include "tonelli/error.hpp"
#include "tonelli/perturbation.hpp"

using namespace tonelli;

namespace {

const char* kLambda3 = "-0.05*(x1^2+x2^2+x3^2)";

PerturbationScenario conformal3(double alpha) {
  PerturbationScenario s;
  s.g = Metric::conformal(3, kLambda3);
  s.box = Box::cube(3, 1.0);
  s.phi = PhiSpec{alpha, 1.0, ""};
  s.bank = default_field_bank(3, 10, 42);
  return s;
}

/// Smallest eigenvalue of the covariant Bakry-Emery tensor of exp(2 lambda) I in d = 3 with
/// lambda = -0.05 |x|^2: 0.1 + 0.02 |x|^2 across x and 0.1 - 0.03 |x|^2 along x.
double be_min_closed_form(const Vec& x) { return 0.1 - 0.03 * x.squaredNorm(); }

}  // namespace

TEST_CASE("budget is min(c/10, k/12)") {
  CHECK(perturbation_budget(1.0, 1.2) == 0.1);
  CHECK(perturbation_budget(0.5, 12.0) == 0.05);
  CHECK(perturbation_budget(10.0, 0.12) == 0.01);
  CHECK_THROWS_AS(perturbation_budget(0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(perturbation_budget(1.0, -1.0), ValidationError);
}

TEST_CASE("flat metrics are rejected") {
  const auto id = estimate_bounds(Metric::identity(2), Box::cube(2, 1.0), 11);
  CHECK(id.c_g == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(id.k_g) < 1e-15);
  CHECK(id.rejected);
  const auto diag = estimate_bounds(Metric::diagonal({"2", "1"}), Box::cube(2, 1.0), 11);
  CHECK(diag.c_g == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(diag.k_g) < 1e-15);
  CHECK(diag.rejected);
  CHECK_THROWS_AS(estimate_bounds(Metric::identity(2), Box::cube(2, 1.0), 5), ContractViolation);
}

TEST_CASE("expanding conformal metric in the plane has an indefinite Bakry-Emery tensor") {
  // lambda = 0.05|x|^2 in d = 2: the covariant tensor is 0.02 (|x|^2 I - 2 x x^T), eigenvalues +-0.02|x|^2
  const Metric g = Metric::conformal(2, "0.05*(x1^2+x2^2)");
  Vec x(2);
  x << 0.6, -0.3;
  const Mat be = bakry_emery_tensor(g, x).covariant();
  Mat expected = 0.02 * (x.squaredNorm() * Mat::Identity(2, 2) - 2.0 * x * x.transpose());
  CHECK((be - expected).norm() < 1e-14);
  const auto b = estimate_bounds(g, Box::cube(2, 1.0), 11);
  CHECK(b.rejected);
  CHECK(b.k_g == doctest::Approx(-0.04).epsilon(1e-12));
  CHECK(b.k_argmin.cwiseAbs().minCoeff() == 1.0);
}

TEST_CASE("contracting conformal metric in d = 3 has k_g = 0.01 on the unit cube") {
  const Metric g = Metric::conformal(3, kLambda3);
  Vec x(3);
  x << 0.2, -0.7, 0.4;
  const Mat be = bakry_emery_tensor(g, x).covariant();
  const Mat expected = (0.1 + 0.02 * x.squaredNorm()) * Mat::Identity(3, 3) - 0.05 * x * x.transpose();
  CHECK((be - expected).norm() < 1e-14);
  const auto b = estimate_bounds(g, Box::cube(3, 1.0), 11);
  CHECK_FALSE(b.rejected);
  CHECK(b.c_g == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(b.k_g == doctest::Approx(be_min_closed_form(Vec::Ones(3))).epsilon(1e-12));
  CHECK(b.k_g == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(perturbation_budget(b.c_g, b.k_g) == doctest::Approx(0.01 / 12).epsilon(1e-12));
}

TEST_CASE("default field bank") {
  const auto bank = default_field_bank(3, 10, 42);
  CHECK(bank.size() == 13);
  const auto again = default_field_bank(3, 10, 42);
  for (size_t i = 0; i < bank.size(); ++i) CHECK(bank[i].expression() == again[i].expression());
}

TEST_CASE("zero perturbation reproduces the Riemannian curvature") {
  PerturbationScenario s = conformal3(0.0);
  s.samples = 1000;
  const auto r = perturbed_nonneg_check(s);
  CHECK_FALSE(r.chain_violation());
  CHECK(r.lower_bound_failures == 0);
  CHECK(r.min_k_tilde == r.min_k);
  CHECK(r.budget.passes_term_by_term());
  CHECK(r.max_six_seven_gap < 1e-14);
  const LagrangianModel L = s.unperturbed(), Lt = s.perturbed();
  const SampleSet set = make_samples(s, 200, 9);
  for (size_t i = 0; i < set.size(); ++i) {
    const VectorField& f = set.fields[set.field_of[i]];
    CHECK(std::abs(curvature_def(Lt, f, set.points[i]) - curvature_def(L, f, set.points[i])) < 1e-9);
    const auto id = riemannian_identity(s.g, s.bank[set.field_of[i]], set.points[i]);
    CHECK(std::abs(id.k_def - curvature_def(L, f, set.points[i])) < 1e-9);
  }
}

TEST_CASE("ledger structure") {
  const PerturbationScenario s = conformal3(2e-4);
  const LagrangianModel L = s.unperturbed(), Lt = s.perturbed();
  const SampleSet set = make_samples(s, 300, 5);
  const double eps = 0.01 / 12;
  for (size_t i = 0; i < set.size(); ++i) {
    const auto x = ledger_sample(L, Lt, set.fields[set.field_of[i]], set.field_of[i], set.points[i], eps);
    const IndexTerms g = index_groups(L, set.fields[set.field_of[i]], set.points[i]);
    // a metric Lagrangian has no third velocity derivatives
    CHECK(g[1] == 0.0);
    CHECK(g[2] == 0.0);
    CHECK(g[3] == 0.0);
    double printed = 0.0;
    for (int k = 0; k < 8; ++k) printed += x.delta[k];
    CHECK(x.printed_sum == printed);
    CHECK(std::abs(x.k_tilde - x.k) <= x.corrected_sum + 1e-14);
    CHECK(x.budget == doctest::Approx(5 * eps * x.a * x.a + 6 * eps * x.b * x.b));
    const auto gb = group_budgets(eps, x.a, x.b);
    double sum = 0.0;
    for (int k = 0; k < 8; ++k) sum += gb[k];
    // 5 eps a^2 + 6 eps b^2 dominates the eight budgets since 2ab <= a^2 + b^2
    CHECK(sum <= x.budget * (1 + 1e-14));
  }
}

TEST_CASE("shrinking alpha never decreases a margin") {
  PerturbationScenario s = conformal3(1e-3);
  const SampleSet set = make_samples(s, 400, 11);
  const double eps = 0.01 / 12;
  double prev_margin = -1e300;
  std::array<double, 8> prev_ratio;
  prev_ratio.fill(1e300);
  for (double alpha : {1e-3, 5e-4, 2.5e-4, 1.25e-4, 0.0}) {
    s.phi.alpha = alpha;
    const auto r = phi_budget_check(s, set, eps);
    CHECK(r.min_margin >= prev_margin);
    for (int g = 0; g < 8; ++g) CHECK(r.group_ratio[g] <= prev_ratio[g] * (1 + 1e-9));
    prev_margin = r.min_margin;
    prev_ratio = r.group_ratio;
  }
  s.phi.alpha = 1e-2;
  const auto big = phi_budget_check(s, set, eps);
  CHECK_FALSE(big.passes_term_by_term());
  CHECK_FALSE(big.first_violated_group.empty());
  // |Hess phi| peaks at 2 alpha at v = 0
  CHECK(big.hess_norm_max <= 2e-2);
  CHECK(big.hess_norm_max >= 0.95 * 2e-2);
}

TEST_CASE("calibrated perturbation keeps the curvature non-negative; ten times the budget does not certify") {
  PerturbationScenario s = conformal3(1e-3);
  const auto bounds = estimate_bounds(s.g, s.box, s.bound_samples_per_dim);
  const double eps = perturbation_budget(bounds.c_g, bounds.k_g);
  const AlphaSearch a = calibrate_alpha(s, eps);
  CHECK(a.alpha > 0.0);
  CHECK(a.alpha == 0.5 * a.alpha_boundary);

  s.phi.alpha = a.alpha;
  const auto r = perturbed_nonneg_check(s);
  CHECK(r.samples == 10000);
  CHECK(r.min_k_tilde >= -1e-8);
  CHECK(r.ledger_failures == 0);
  CHECK(r.group_failures == 0);
  CHECK(r.lower_bound_failures == 0);
  CHECK(r.chain_failures == 0);
  CHECK(r.negative == 0);
  CHECK_FALSE(r.chain_violation());
  CHECK(r.max_consistency_gap < 1e-10);

  s.phi.alpha = 10.0 * a.alpha;
  const auto adv = perturbed_nonneg_check(s);
  CHECK(adv.chain_violation());
  CHECK_FALSE(adv.budget.first_violated_group.empty());
}

TEST_CASE("rejected scenario reports bounds only") {
  PerturbationScenario s;
  s.g = Metric::conformal(2, "0.05*(x1^2+x2^2)");
  s.box = Box::cube(2, 1.0);
  s.phi = PhiSpec{1e-4, 1.0, ""};
  s.bank = default_field_bank(2, 2, 1);
  const auto r = perturbed_nonneg_check(s);
  CHECK(r.rejected());
  CHECK(r.samples == 0);
}
