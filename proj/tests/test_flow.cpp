#include <cmath>

#include "doctest.h"
#include "tonelli/curvature.hpp"
#include "tonelli/error.hpp"
#include "tonelli/flow.hpp"

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

LagrangianModel spring() { return LagrangianModel::mechanical(Metric::identity(2), "0.5*norm2(x)"); }

LagrangianModel curved() {
  return LagrangianModel::riemannian(Metric(2, {"1 + 0.3*x1^2", "0.2*x1*x2", "2 + 0.1*sin(x2)"}));
}

LagrangianModel mixed() {
  return LagrangianModel::custom(
      2, "0.5*(v1^2+v2^2) + 0.3*x1*v2 - 0.2*x2*v1*x1 + 0.1*v1^4 + 0.05*sin(x1)*v2^3 - 0.1*x2^2");
}

}  // namespace

TEST_CASE("euclidean flow is a straight line") {
  const auto L = LagrangianModel::euclidean(2);
  const Trajectory tr = lagrangian_flow(L, v2(1, 2), v2(-0.5, 0.25), 2.0, 10);
  REQUIRE(tr.size() == 11);
  for (size_t i = 0; i < tr.size(); ++i)
    CHECK((tr.x[i] - (v2(1, 2) + tr.times[i] * v2(-0.5, 0.25))).norm() < 1e-14);
  CHECK(tr.times.back() == 2.0);
}

TEST_CASE("mechanical flow accelerates along +grad U") {
  // x'' = x, so x(t) = cosh(t) x0 + sinh(t) v0
  const Vec x0 = v2(0.4, -0.1), w0 = v2(0.2, 0.3);
  const Trajectory tr = lagrangian_flow(spring(), x0, w0, M_PI, 2000);
  const Vec exact = std::cosh(M_PI) * x0 + std::sinh(M_PI) * w0;
  CHECK((tr.x.back() - exact).norm() / exact.norm() < 1e-10);
  const JacobiMatrices m = jacobi_matrices(spring().derivatives(x0, w0));
  CHECK(m.A.norm() < 1e-15);
  CHECK((m.B + Mat::Identity(2, 2)).norm() < 1e-15);
}

TEST_CASE("energy is conserved") {
  for (const auto& L : {curved(), mixed()}) {
    const Trajectory tr = lagrangian_flow(L, v2(0.3, -0.2), v2(0.5, 0.4), 1.0, 400);
    CHECK(tr.energy_drift() < 1e-10);
  }
}

TEST_CASE("backward integration retraces the curve") {
  const auto L = mixed();
  const Trajectory fw = lagrangian_flow(L, v2(0.3, -0.2), v2(0.5, 0.4), 0.7, 200);
  const Trajectory bw = integrate(L, fw.x.back(), fw.v.back(), -0.7, 200);
  CHECK((bw.x.back() - v2(0.3, -0.2)).norm() < 1e-11);
  CHECK(bw.times.back() == -0.7);
}

TEST_CASE("Jacobi matrices are minus the derivatives of the acceleration") {
  // J is the linearisation of x'' = a(x, x'), so A = -da/dv and B = -da/dx
  for (const auto& L : {curved(), mixed()}) {
    const Vec x = v2(0.25, -0.4), v = v2(0.6, -0.3);
    const JacobiMatrices m = jacobi_matrices(L.derivatives(x, v));
    const double h = 1e-5;
    for (int k = 0; k < 2; ++k) {
      Vec e = Vec::Zero(2);
      e(k) = h;
      const Vec dax = (el_rhs(L, x + e, v).vdot - el_rhs(L, x - e, v).vdot) / (2 * h);
      const Vec dav = (el_rhs(L, x, v + e).vdot - el_rhs(L, x, v - e).vdot) / (2 * h);
      CHECK((m.B.col(k) + dax).norm() < 1e-8);
      CHECK((m.A.col(k) + dav).norm() < 1e-8);
    }
  }
}

TEST_CASE("flow Jacobian matches finite differences of the flow map") {
  const auto L = mixed();
  const auto field = VectorField::explicit_field(2, {"0.3 + 0.2*x2", "-0.1 + 0.1*x1^2"});
  const Vec x0 = v2(0.2, 0.1);
  const Trajectory tr = jacobian_flow(L, x0, field, 0.8, 400);
  const double h = 1e-5;
  for (int k = 0; k < 2; ++k) {
    Vec e = Vec::Zero(2);
    e(k) = h;
    const Vec p = lagrangian_flow(L, x0 + e, field.value(x0 + e), 0.8, 400).x.back();
    const Vec q = lagrangian_flow(L, x0 - e, field.value(x0 - e), 0.8, 400).x.back();
    CHECK((tr.J.back().col(k) - (p - q) / (2 * h)).norm() < 1e-8);
  }
}

TEST_CASE("Riccati solution equals J' J^-1") {
  const auto L = curved();
  const auto field = VectorField::explicit_field(2, {"0.3 + 0.2*x2", "-0.1 + 0.1*x1^2"});
  const Vec x0 = v2(0.2, 0.1);
  const Trajectory j = jacobian_flow(L, x0, field, 0.8, 400);
  const Trajectory u = riccati_flow(L, x0, field, 0.8, 400);
  for (size_t i = 0; i < j.size(); i += 50)
    CHECK((u.U[i] - j.Jdot[i] * j.J[i].inverse()).norm() < 1e-10);
}

TEST_CASE("caustics") {
  const auto L = LagrangianModel::euclidean(2);
  SUBCASE("sign change") {
    // J = I + t M with M = diag(-1, -0.5): det vanishes first at t = 1
    const Trajectory tr = jacobian_flow(L, v2(0, 0), VectorField::linear(diag2(-1, -0.5)), 1.5, 150);
    CHECK(tr.caustic);
    CHECK(tr.caustic_time == doctest::Approx(1.0).epsilon(1e-8));
  }
  SUBCASE("tangential touch") {
    // det J = (1 - t)^2 never changes sign
    const Trajectory tr = jacobian_flow(L, v2(0, 0), VectorField::linear(diag2(-1, -1)), 1.5, 150);
    CHECK(tr.caustic);
    CHECK(tr.caustic_time == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("none before the horizon") {
    const Trajectory tr = jacobian_flow(L, v2(0, 0), VectorField::linear(diag2(-1, -0.5)), 0.9, 90);
    CHECK_FALSE(tr.caustic);
  }
  SUBCASE("throwing") {
    FlowOptions opt;
    opt.jacobian = true;
    opt.Jdot0 = diag2(-1, -0.5);
    opt.throw_on_caustic = true;
    try {
      integrate(L, v2(0, 0), v2(0, 0), 1.5, 150, opt);
      FAIL("expected a caustic");
    } catch (const Caustic& c) {
      CHECK(c.time() == doctest::Approx(1.0).epsilon(1e-8));
      CHECK(std::string(c.kind()) == "caustic");
    }
  }
  SUBCASE("Riccati blow-up") {
    try {
      riccati_flow(L, v2(0, 0), VectorField::linear(diag2(-1, -0.5)), 1.5, 1500);
      FAIL("expected blow-up");
    } catch (const RiccatiBlowup& e) {
      CHECK(e.time() == doctest::Approx(1.0).epsilon(1e-3));
    }
  }
}

TEST_CASE("det derivative") {
  Mat J(2, 2), Jd(2, 2);
  J << 1, 2, 0, 0;  // singular
  Jd << 0.5, -1, 3, 0.25;
  const double h = 1e-6;
  const double fd = ((J + h * Jd).determinant() - (J - h * Jd).determinant()) / (2 * h);
  CHECK(det_derivative(J, Jd) == doctest::Approx(fd).epsilon(1e-9));
}

TEST_CASE("Simpson weights integrate cubics exactly") {
  for (int n : {1, 2, 3, 4, 5, 7, 10}) {
    const double h = 2.0 / n;
    const auto w = simpson_weights(n, h);
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double t = i * h;
      s += w[i] * (n == 1 ? 1 + 2 * t : t * t * t - t + 1);
    }
    CHECK(s == doctest::Approx(n == 1 ? 6.0 : 4.0 - 2.0 + 2.0).epsilon(1e-13));
  }
}

TEST_CASE("record stride") {
  FlowOptions opt;
  opt.record_stride = 10;
  const Trajectory tr = integrate(LagrangianModel::euclidean(2), v2(0, 0), v2(1, 0), 1.0, 100, opt);
  CHECK(tr.size() == 11);
  opt.record_stride = 7;
  CHECK_THROWS_AS(integrate(LagrangianModel::euclidean(2), v2(0, 0), v2(1, 0), 1.0, 100, opt), ContractViolation);
}

TEST_CASE("two-point cost, closed forms") {
  SUBCASE("euclidean") {
    const auto r = cost(LagrangianModel::euclidean(2), v2(0, 0), v2(1, 2), 2.0, 1e-10);
    CHECK(r.c == doctest::Approx(5.0 / 4.0).epsilon(1e-10));
  }
  SUBCASE("constant metric") {
    const auto r = cost(LagrangianModel::riemannian(Metric::constant(diag2(2, 1))), v2(0, 0), v2(1, 1), 1.0, 1e-10);
    CHECK(r.c == doctest::Approx(1.5).epsilon(1e-10));
  }
  SUBCASE("spring") {
    // minimiser sinh(t)/sinh(1); action coth(1)/2 after integrating by parts
    const auto r = cost(spring(), v2(0, 0), v2(1, 0), 1.0, 1e-10);
    CHECK(std::abs(r.c - 0.5 / std::tanh(1.0)) < 1e-8);
    CHECK(std::abs(r.v0(0) - 1.0 / std::sinh(1.0)) < 1e-8);
  }
}

TEST_CASE("cost gradient is the terminal momentum") {
  // d c / dy = dL/dv at the endpoint of the minimiser
  const auto L = curved();
  const Vec x = v2(0.1, 0.2), y = v2(0.8, -0.3);
  CostOptions opt;
  opt.steps = 800;
  const auto r = cost(L, x, y, 1.0, 1e-12, opt);
  const Trajectory tr = lagrangian_flow(L, x, r.v0, 1.0, 800);
  const Vec p = L.derivatives(tr.x.back(), tr.v.back(), 2).gv;
  const double h = 1e-4;
  for (int k = 0; k < 2; ++k) {
    Vec e = Vec::Zero(2);
    e(k) = h;
    const double fd = (cost(L, x, y + e, 1.0, 1e-12, opt).c - cost(L, x, y - e, 1.0, 1e-12, opt).c) / (2 * h);
    CHECK(std::abs(fd - p(k)) < 1e-6);
  }
}

TEST_CASE("flow contracts") {
  const auto L = LagrangianModel::euclidean(2);
  CHECK_THROWS_AS(lagrangian_flow(L, v2(0, 0), v2(1, 0), 0.0, 10), ContractViolation);
  CHECK_THROWS_AS(lagrangian_flow(L, v2(0, 0), v2(1, 0), 1.0, 0), ContractViolation);
  CHECK_THROWS_AS(cost(L, v2(0, 0), v2(1, 0), -1.0, 1e-8), ContractViolation);
}
