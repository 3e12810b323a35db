#include <cmath>

#include "doctest.h"
#include "tonelli/error.hpp"
#include "tonelli/transport.hpp"

using namespace tonelli;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

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

}  // namespace

TEST_CASE("seed grid geometry and trapezoid weights") {
  SeedGrid g{2, 5, 1.0, vec({0.5, -0.5})};
  CHECK(g.size() == 25);
  CHECK(g.spacing() == 0.5);
  double total = 0.0;
  for (size_t i = 0; i < g.size(); ++i) total += g.weight(i);
  CHECK(total == doctest::Approx(4.0).epsilon(1e-15));
  CHECK((g.node(0) - vec({-0.5, -1.5})).norm() == 0.0);
  CHECK((g.node(24) - vec({1.5, 0.5})).norm() == 0.0);
}

TEST_CASE("bump reference mass matches an independent radial sum") {
  // integral of exp(1/(r^2-1)) over the unit disk = 2 pi int_0^1 r exp(1/(r^2-1)) dr
  const int n = 200000;
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    const double r = (k + 0.5) / n;
    s += r * std::exp(1.0 / (r * r - 1.0));
  }
  const double oracle = 2.0 * M_PI * s / n;
  CHECK(unit_bump().reference_mass() == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(unit_bump().raw(vec({1.0, 0.0})) == 0.0);
  CHECK(unit_bump().raw(vec({2.0, 0.3})) == 0.0);
}

TEST_CASE("custom densities reject negative values") {
  CHECK_THROWS_AS(Density::custom(1, "x1", 1.0, Vec::Zero(1)), ValidationError);
  const Density ok = Density::custom(1, "1 - x1^2", 1.0, Vec::Zero(1));
  CHECK(ok.raw(vec({0.5})) == 0.75);
}

TEST_CASE("initial velocity of a perturbed Lagrangian matches a velocity grid search") {
  const auto L = LagrangianModel::perturbed(Metric::identity(2), "0.01*exp(-norm2(v))");
  const Potential u0(2, "0.5*(x1^2+x2^2)");
  const Vec x = vec({0.7, -0.4});
  const Vec v = initial_velocity(L, u0, x);
  // maximize <p, w> - 1/2|w|^2 - 0.01 exp(-|w|^2) with p = x on a local grid of step 1e-4
  double best = -1e300;
  Vec arg(2);
  for (int i = -500; i <= 500; ++i)
    for (int j = -500; j <= 500; ++j) {
      const Vec w = x + 1e-4 * vec({double(i), double(j)});
      const double val = x.dot(w) - 0.5 * w.squaredNorm() - 0.01 * std::exp(-w.squaredNorm());
      if (val > best) {
        best = val;
        arg = w;
      }
    }
  CHECK((v - arg).lpNorm<Eigen::Infinity>() <= 1e-4);
}

TEST_CASE("dilation closed form") {
  const auto I = build_interpolant(LagrangianModel::euclidean(2), Potential(2, "0.5*(x1^2+x2^2)"), unit_bump(), 1.0,
                                   opts(21, 10));
  CHECK(I.normalization_gap() < 1e-4);
  for (size_t k = 0; k < I.times().size(); ++k) {
    const Snapshot& s = I.stored(k);
    const double a = 1.0 + s.t;
    for (size_t i = 0; i < I.size(); i += 17) {
      CHECK((s.p[i].x - a * I.seed(i)).norm() < 1e-12);
      CHECK(s.p[i].J.determinant() == doctest::Approx(a * a).epsilon(1e-12));
      const double expected = I.density().value(s.p[i].x / a) / (a * a);
      CHECK(I.density(i, s.p[i]) == doctest::Approx(expected).epsilon(1e-10));
    }
  }
  const Snapshot mid = I.at(0.537);
  CHECK(mid.t == 0.537);
  for (size_t i = 0; i < I.size(); i += 13) CHECK((mid.p[i].x - 1.537 * I.seed(i)).norm() < 1e-12);
  const Snapshot past = I.at(1.25);
  for (size_t i = 0; i < I.size(); i += 13) CHECK((past.p[i].x - 2.25 * I.seed(i)).norm() < 1e-12);
  const Snapshot before = I.at(-0.02);
  for (size_t i = 0; i < I.size(); i += 13) CHECK((before.p[i].x - 0.98 * I.seed(i)).norm() < 1e-12);
}

TEST_CASE("translation moves the density rigidly") {
  const Vec a = vec({0.2, -0.1});
  const auto I = build_interpolant(LagrangianModel::euclidean(2), Potential(2, "0.2*x1 - 0.1*x2"), unit_bump(), 1.0,
                                   opts(21, 10));
  const Snapshot& s = I.stored(I.times().size() - 1);
  for (size_t i = 0; i < I.size(); ++i) {
    CHECK((s.p[i].x - (I.seed(i) + a)).norm() < 1e-13);
    CHECK(s.p[i].J.determinant() == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(continuity_residual(I, 0.5, 1e-3) < 1e-6);
}

TEST_CASE("mass, calibration and the continuity equation for a mechanical interpolant") {
  const auto L =
      LagrangianModel::mechanical(Metric::conformal(2, "0.1*x1^2+0.05*x2"), "0.3*x1^2+0.1*x1*x2");
  const Potential u0(2, "0.2*x1^2 + 0.1*x1*x2 - 0.05*x2^2 + 0.1*x1");
  const auto I = build_interpolant(L, u0, unit_bump(), 0.2, opts(41, 20));
  for (size_t k = 0; k < I.times().size(); ++k) CHECK(mass_check(I, I.times()[k]) < 1e-5);
  CHECK(calibration_check(I) < 1e-8);
  const double r1 = continuity_residual(I, 0.1, 1e-2);
  const double r2 = continuity_residual(I, 0.1, 5e-3);
  CAPTURE(r1);
  CAPTURE(r2);
  CHECK(r1 / r2 >= 3.5);
  CHECK(r1 / r2 <= 4.5);
}

TEST_CASE("focusing potential reports every caustic crossing near t = 1") {
  try {
    build_interpolant(LagrangianModel::euclidean(2), Potential(2, "-0.5*(x1^2+x2^2)"), unit_bump(), 2.0,
                      opts(11, 40));
    FAIL("expected a caustic");
  } catch (const Caustic& e) {
    REQUIRE(!e.crossings().empty());
    for (const auto& c : e.crossings()) CHECK(std::abs(c.time - 1.0) <= 1e-3);
    CHECK(e.particle() == e.crossings().front().particle);
  }
}

TEST_CASE("interpolant arguments are validated by field") {
  const auto L = LagrangianModel::euclidean(2);
  const Potential u0(2, "0.5*(x1^2+x2^2)");
  auto field_of = [&](double T, InterpolantOptions o) {
    try {
      build_interpolant(L, u0, unit_bump(), T, o);
    } catch (const ValidationError& e) {
      return e.field();
    }
    return std::string();
  };
  CHECK(field_of(-1.0, opts(11, 10)) == "numeric.T");
  CHECK(field_of(1.0, opts(2, 10)) == "numeric.particles");
  CHECK(field_of(1.0, opts(11, 0)) == "numeric.steps");
  InterpolantOptions o = opts(11, 10);
  o.record_stride = 3;
  CHECK(field_of(1.0, o) == "numeric.record_stride");
}
