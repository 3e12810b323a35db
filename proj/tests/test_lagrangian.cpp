#include <cmath>
#include <random>

#include "doctest.h"
#include "tonelli/error.hpp"
#include "tonelli/lagrangian.hpp"

using namespace tonelli;

namespace {

Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

Mat diag2(double a, double b) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

const char* kPhi = "0.01*exp(-norm2(v))";

}  // namespace

TEST_CASE("euclidean bundle") {
  const auto L = LagrangianModel::euclidean(2);
  const auto b = L.derivatives(v2(0.3, -1.2), v2(0.7, 2.0));
  CHECK((b.gv - v2(0.7, 2.0)).norm() == 0.0);
  CHECK((b.hvv - Mat::Identity(2, 2)).norm() == 0.0);
  CHECK(b.hxx.norm() == 0.0);
  CHECK(b.hxv.norm() == 0.0);
  CHECK(b.tvvv.max_abs() == 0.0);
  CHECK(b.txvv.max_abs() == 0.0);
}

TEST_CASE("constant riemannian bundle") {
  const auto L = LagrangianModel::riemannian(Metric::constant(diag2(2, 1)));
  const auto b = L.derivatives(v2(5.0, -3.0), v2(1, 1));
  CHECK((b.gv - v2(2, 1)).norm() == 0.0);
  CHECK((b.hvv - diag2(2, 1)).norm() == 0.0);
  CHECK(b.value == doctest::Approx(1.5));
}

TEST_CASE("mechanical bundle") {
  const auto L = LagrangianModel::mechanical(Metric::identity(2), "0.5*norm2(x)");
  const auto b = L.derivatives(v2(1, 0), v2(0, 0));
  CHECK((b.gx - v2(1, 0)).norm() == 0.0);
  CHECK((b.hxx - Mat::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("non-convex velocity dependence is a tonelli violation") {
  const auto L = LagrangianModel::custom(1, "-0.5*v1^2");
  CHECK_THROWS_AS(L.derivatives(Vec::Zero(1), Vec::Zero(1)), TonelliViolation);
  CHECK_THROWS_AS(LagrangianModel::perturbed(Metric::identity(2), "x1*v1"), ParseError);
}

TEST_CASE("legendre closed forms") {
  const auto E = LagrangianModel::euclidean(2);
  const auto r = legendre(E, v2(0.1, 0.2), v2(2, -1));
  CHECK((r.v - v2(2, -1)).norm() < 1e-12);
  CHECK(r.H == doctest::Approx(2.5).epsilon(1e-14));

  const auto R = LagrangianModel::riemannian(Metric::constant(diag2(2, 1)));
  const auto s = legendre(R, v2(0, 0), v2(2, 0));
  CHECK((s.v - v2(1, 0)).norm() < 1e-12);
  CHECK(s.H == doctest::Approx(1.0).epsilon(1e-14));

  CHECK((hamiltonian_grad(E, v2(0, 0), v2(0.3, 0.7)) - v2(0.3, 0.7)).norm() < 1e-14);
  const Vec r12 = v2(1, 2);
  const Vec p = R.derivatives(v2(0.4, 0.4), r12).gv;
  CHECK((hamiltonian_grad(R, v2(0.4, 0.4), p) - r12).norm() < 1e-10);
}

TEST_CASE("legendre of the perturbed lagrangian matches a grid search") {
  const auto L = LagrangianModel::perturbed(Metric::identity(2), kPhi);
  const Vec p = v2(1, 0);
  const auto r = legendre(L, v2(0.3, -0.2), p);
  // maximise <p,v> - L(v) over [-3,3]^2 with spacing 1e-3, closed form written out here
  const double step = 1e-3;
  double best = -1e300, bv1 = 0, bv2 = 0;
  for (int i = 0; i <= 6000; ++i) {
    const double a = -3.0 + i * step;
    for (int j = 0; j <= 6000; ++j) {
      const double b = -3.0 + j * step;
      const double q = a * a + b * b;
      const double val = a - (0.5 * q + 0.01 * std::exp(-q));
      if (val > best) {
        best = val;
        bv1 = a;
        bv2 = b;
      }
    }
  }
  CHECK(std::abs(r.v(0) - bv1) <= step);
  CHECK(std::abs(r.v(1) - bv2) <= step);
  CHECK(r.H == doctest::Approx(best).epsilon(1e-6));
  CHECK((hamiltonian_grad(L, v2(0.3, -0.2), p) - r.v).norm() == 0.0);
}

TEST_CASE("fenchel-young inequality and equality") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const auto L = LagrangianModel::perturbed(Metric::conformal(2, "0.1*sin(x1)"), kPhi);
  for (int k = 0; k < 50; ++k) {
    const Vec x = v2(u(rng), u(rng)), v = v2(u(rng), u(rng)), p = v2(u(rng), u(rng));
    const double H = hamiltonian(L, x, p);
    CHECK(v.dot(p) <= H + L.value(x, v) + 1e-9);
    const Vec pv = L.derivatives(x, v).gv;
    CHECK(std::abs(v.dot(pv) - hamiltonian(L, x, pv) - L.value(x, v)) < 1e-8);
    // involution
    CHECK((hamiltonian_grad(L, x, pv) - v).norm() < 1e-9);
    const Vec w = hamiltonian_grad(L, x, p);
    CHECK((L.derivatives(x, w).gv - p).norm() < 1e-9);
  }
}

TEST_CASE("derivatives agree with finite differences on custom lagrangians") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 8; ++k) {
    const std::string s = "0.5*(1 + 0.2*sin(" + num(u(rng)) + "*x1 + x2))*v1^2 + 0.5*exp(" + num(0.3 * u(rng)) +
                          "*x1)*v2^2 + " + num(0.1 * u(rng)) + "*x1*v1*v2 + cos(x2)*v1 + 0.05*v1^4";
    const auto L = LagrangianModel::custom(2, s);
    const Vec x = v2(u(rng), u(rng)), v = v2(u(rng), u(rng));
    Vec z(4);
    z << x, v;
    const Expression e = Expression::parse(s, VariableSet::phase_space(2));
    CHECK(jet_check(e, z).max() < 1e-6);
    const auto b = L.derivatives(x, v);
    const Jet3 j = e.jet(z);
    CHECK(b.txvv(1, 0, 0) == j.third(1, 2, 2));
    CHECK(b.txxv(0, 1, 1) == j.third(0, 1, 3));
  }
}

TEST_CASE("linear change of coordinates pulls back the lagrangian") {
  const auto L = LagrangianModel::mechanical(Metric::conformal(2, "0.1*x1*x2"), "0.3*x1^2 + sin(x2)");
  Mat P(2, 2);
  P << 1.2, 0.3, -0.4, 0.9;
  const auto Ly = L.linear_change(P);
  const Vec x = v2(0.2, -0.5), v = v2(1.0, 0.4);
  CHECK(Ly.value(P * x, P * v) == doctest::Approx(L.value(x, v)).epsilon(1e-14));
  const auto bx = L.derivatives(x, v), by = Ly.derivatives(P * x, P * v);
  const Mat Pi = P.inverse();
  CHECK((by.hvv - Pi.transpose() * bx.hvv * Pi).norm() < 1e-13);
  CHECK((by.gx - Pi.transpose() * bx.gx).norm() < 1e-13);
}

TEST_CASE("tonelli probe") {
  std::vector<Vec> xs = {v2(0, 0), v2(0.5, -0.5)};
  const auto e = tonelli_probe(LagrangianModel::euclidean(2), xs, {1, 2, 4});
  REQUIRE(e.ratios.size() == 3);
  CHECK(e.ratios[0] == doctest::Approx(0.5));
  CHECK(e.ratios[1] == doctest::Approx(1.0));
  CHECK(e.ratios[2] == doctest::Approx(2.0));
  CHECK_FALSE(e.superlinear_warning);

  const auto g = tonelli_probe(LagrangianModel::riemannian(Metric::constant(diag2(0.5, 3))), xs, {1, 2});
  CHECK(g.min_hvv_eig >= 0.5 - 1e-15);

  const auto p = tonelli_probe(LagrangianModel::perturbed(Metric::identity(2), kPhi), xs, {1, 2, 4, 8});
  CHECK_FALSE(p.superlinear_warning);
  for (size_t i = 1; i < p.ratios.size(); ++i) CHECK(p.ratios[i] > p.ratios[i - 1]);

  const auto lin = tonelli_probe(LagrangianModel::custom(1, "sqrt(1 + v1^2)"), {Vec::Zero(1)}, {1, 10, 100});
  CHECK(lin.superlinear_warning);
  CHECK_THROWS_AS(tonelli_probe(LagrangianModel::euclidean(1), {Vec::Zero(1)}, {2, 1}), ContractViolation);
}
