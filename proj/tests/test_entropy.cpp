#include <cmath>

#include "doctest.h"
#include "tonelli/entropy.hpp"
#include "tonelli/error.hpp"

using namespace tonelli;

namespace {

InterpolantOptions opts(int particles, int steps) {
  InterpolantOptions o;
  o.particles_per_dim = particles;
  o.steps = steps;
  return o;
}

const Density& unit_bump() {
  static const Density rho = Density::bump(2, 1.0, Vec::Zero(2));
  return rho;
}

const DisplacementInterpolant& dilation() {
  static const DisplacementInterpolant I = build_interpolant(
      LagrangianModel::euclidean(2), Potential(2, "0.5*(x1^2+x2^2)"), unit_bump(), 1.0, opts(41, 10));
  return I;
}

const DisplacementInterpolant& translation() {
  static const DisplacementInterpolant I = build_interpolant(
      LagrangianModel::euclidean(2), Potential(2, "0.2*x1 - 0.1*x2"), unit_bump(), 1.0, opts(41, 10));
  return I;
}

const DisplacementInterpolant& mechanical() {
  static const DisplacementInterpolant I = build_interpolant(
      LagrangianModel::mechanical(Metric::conformal(2, "0.1*x1^2+0.05*x2"), "0.3*x1^2+0.1*x1*x2"),
      Potential(2, "0.2*x1^2 + 0.1*x1*x2 - 0.05*x2^2 + 0.1*x1"), unit_bump(), 0.2, opts(41, 20));
  return I;
}

}  // namespace

TEST_CASE("presets satisfy F1 and F2") {
  for (const auto& F : {EntropySpec::boltzmann(), EntropySpec::power(2.0), EntropySpec::power(1.5),
                        EntropySpec::quadratic()}) {
    CAPTURE(F.name());
    const auto r = validate_entropy(F);
    CHECK(r.admissible);
    CHECK(r.f1);
  }
  // boltzmann: F(0) is 0 * log 0 as written, so F1 holds as a limit; both F2 margins are s - s and s
  const auto b = admissibility(EntropySpec::boltzmann());
  CHECK(b.f1_by_limit);
  CHECK(std::abs(b.convexity_margin) < 1e-12);
  CHECK(b.pressure_margin == doctest::Approx(1e-6).epsilon(1e-9));
  const auto q = admissibility(EntropySpec::quadratic());
  CHECK(q.convexity_margin == doctest::Approx(1e-12).epsilon(1e-9));
}

TEST_CASE("negative quadratic is rejected with a witness") {
  const auto F = EntropySpec::custom("-s^2");
  const auto r = admissibility(F);
  CHECK_FALSE(r.admissible);
  CHECK(r.witness > 0.0);
  CHECK(F.F(r.witness) < 0.0);
  try {
    validate_entropy(F);
    FAIL("expected rejection");
  } catch (const InadmissibleEntropy& e) {
    CHECK(e.witness() == r.witness);
  }
  CHECK(admissibility(EntropySpec::custom("s^2 + 1")).violated == "F1");
  CHECK_THROWS_AS(EntropySpec::power(1.0), ValidationError);
}

TEST_CASE("pressure identities and the printed variant") {
  const auto r = pressure_identities(EntropySpec::power(3.0));
  CHECK(r.g_residual < 1e-10);
  CHECK(r.coefficient_residual < 1e-10);
  // F' differs from F for power entropies, so the printed coefficient is not the same function
  CHECK(r.printed_variant_gap > 1.0);
  const auto q = pressure_identities(EntropySpec::custom("s^3 - s^2"));
  CHECK(q.coefficient_residual < 1e-10);
}

TEST_CASE("McCann condition") {
  for (int d = 1; d <= 3; ++d) {
    const auto r = mccann_check(EntropySpec::boltzmann(), d);
    CHECK(r.convex);
    CHECK(r.nonincreasing);
    for (size_t k = 0; k < r.s.size(); ++k)
      CHECK(r.phi[k] == doctest::Approx(-d * std::log(r.s[k])).epsilon(1e-12).scale(1.0));
  }
  // power m = 2, d = 1: phi(s) = s (s^-2 - s^-1) = 1/s - 1
  const auto p = mccann_check(EntropySpec::power(2.0), 1);
  for (size_t k = 0; k < p.s.size(); ++k) CHECK(p.phi[k] == doctest::Approx(1.0 / p.s[k] - 1.0).epsilon(1e-12));
  CHECK(p.convex);
  CHECK(p.nonincreasing);
  const auto lin = mccann_check(EntropySpec::custom("s"), 2);
  CHECK(lin.convex);
  CHECK(lin.nonincreasing);
  CHECK_FALSE(mccann_check(EntropySpec::custom("-s^2"), 1).convex);
  CHECK_THROWS_AS(mccann_check(EntropySpec::boltzmann(), 0), ContractViolation);
}

TEST_CASE("dilation entropy follows S0 - d log(1 + t)") {
  // S0 = int rho0 log rho0 for the exactly normalized bump, by midpoint radial quadrature
  const int n = 200000;
  double m = 0.0, e = 0.0;
  for (int k = 0; k < n; ++k) {
    const double r = (k + 0.5) / n, q = std::exp(1.0 / (r * r - 1.0));
    m += r * q;
    if (q > 0.0) e += r * q / (r * r - 1.0);
  }
  const double S0 = -std::log(2.0 * M_PI * m / n) + e / m;
  const auto F = EntropySpec::boltzmann();
  const auto& I = dilation();
  const double s0 = entropy_value(F, I, 0.0);
  CHECK(std::abs(s0 - S0) < 5e-5);
  for (double t : {0.3, 0.6, 1.0}) CHECK(entropy_value(F, I, t) == doctest::Approx(s0 - 2.0 * std::log1p(t)).epsilon(1e-12));

  // t = 0 against a direct sum over the seed grid, without the flow
  double direct = 0.0;
  for (size_t k = 0; k < I.grid().size(); ++k) {
    const double rho = I.density().value(I.grid().node(k));
    if (rho > 0.0) direct += I.grid().weight(k) * rho * std::log(rho);
  }
  CHECK(std::abs(direct - s0) < 1e-6);
}

TEST_CASE("dilation Hessian is d / (1 + t)^2") {
  const auto F = EntropySpec::boltzmann();
  const auto& I = dilation();
  CHECK(displacement_hessian(F, I, 0.0).value == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(displacement_hessian(F, I, 1.0).value == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(std::abs(hessian_fd_oracle(F, I, 0.0, 1e-2) - 2.0) < 1e-3);
  CHECK(std::abs(hessian_fd_oracle(F, I, 1.0, 1e-2) - 0.5) < 1e-3);
  const auto c = convexity_report(F, I);
  CHECK(c.chord_violation <= 1e-12);
  CHECK(c.min_hessian == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(c.min_hessian_time == 1.0);
}

TEST_CASE("translation has zero Hessian and constant entropy") {
  const auto& I = translation();
  for (const auto& F : {EntropySpec::boltzmann(), EntropySpec::quadratic()}) {
    const double e0 = entropy_value(F, I, 0.0);
    for (double t : {0.5, 1.0}) {
      CHECK(std::abs(entropy_value(F, I, t) - e0) < 1e-12);
      CHECK(std::abs(displacement_hessian(F, I, t).value) < 1e-8);
      CHECK(std::abs(hessian_fd_oracle(F, I, t, 1e-2)) < 1e-8);
    }
    CHECK(std::abs(convexity_report(F, I).chord_violation) < 1e-12);
  }
}

TEST_CASE("formula agrees with the finite-difference oracle on a mechanical interpolant") {
  const auto& I = mechanical();
  for (const auto& F : {EntropySpec::boltzmann(), EntropySpec::power(2.0)}) {
    for (double t : {0.0, 0.1, 0.2}) {
      const auto h = displacement_hessian(F, I, t);
      CHECK(std::abs(h.value - hessian_fd_oracle(F, I, t, 1e-2)) < 5e-4);
      CHECK(std::abs(h.value - (h.pressure_part + h.curvature_part)) < 1e-15);
    }
  }
}

TEST_CASE("material acceleration") {
  CHECK(material_acceleration(dilation(), 0.4, 100).norm() == 0.0);
  const auto spring = build_interpolant(LagrangianModel::mechanical(Metric::identity(2), "0.5*norm2(x)"),
                                        Potential(2, "0.1*x1"), unit_bump(), 0.5, opts(11, 10));
  // L = 1/2|v|^2 + U gives x'' = grad U
  const Snapshot s = spring.at(0.3);
  for (size_t i = 0; i < spring.size(); i += 7)
    CHECK((material_acceleration(spring, 0.3, i) - s.p[i].x).norm() < 1e-12);
  const auto flat = build_interpolant(LagrangianModel::riemannian(Metric::diagonal({"2", "0.5"})),
                                      Potential(2, "0.3*x1^2 - 0.2*x2"), unit_bump(), 0.5, opts(11, 10));
  CHECK(material_acceleration(flat, 0.25, 3).norm() < 1e-14);
}

TEST_CASE("perturbed conformal metric gives a non-negative Hessian") {
  const auto L =
      LagrangianModel::perturbed(Metric::conformal(3, "-0.05*(x1^2+x2^2+x3^2)"), "0.0001*exp(-norm2(v))");
  const auto I = build_interpolant(L, Potential(3, "0.3*(x1^2+x2^2+x3^2) + 0.1*x1*x2 + 0.2*x3"),
                                   Density::bump(3, 0.5, Vec::Zero(3)), 0.5, opts(13, 10));
  const auto c = convexity_report(EntropySpec::boltzmann(), I);
  CHECK(c.min_hessian >= -1e-6);
  CHECK(c.min_curvature >= 0.0);
  CHECK(c.chord_violation <= 1e-12);
}
