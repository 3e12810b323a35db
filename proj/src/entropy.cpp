#include "tonelli/entropy.hpp"

#include <cmath>
#include <limits>

#include "tonelli/curvature.hpp"
#include "tonelli/error.hpp"

namespace tonelli {

namespace {

Jet3 jet_at(const Expression& e, double s) {
  Vec x(1);
  x(0) = s;
  return e.jet(x, 2);
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> s(n);
  for (int k = 0; k < n; ++k) s[k] = lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1));
  return s;
}

}  // namespace

EntropySpec EntropySpec::boltzmann() { return make("boltzmann", "s*log(s)"); }

EntropySpec EntropySpec::power(double m) {
  if (!(m > 1.0)) throw ValidationError("entropy.m", "power entropy needs m > 1");
  return make("power(" + num(m) + ")", "(s^" + num(m) + " - s)/(" + num(m - 1.0) + ")");
}

EntropySpec EntropySpec::quadratic() { return make("quadratic", "s^2"); }

EntropySpec EntropySpec::custom(const std::string& expression) { return make("custom", expression); }

EntropySpec EntropySpec::make(const std::string& name, const std::string& src) {
  return EntropySpec(name, Expression::parse(src, VariableSet::scalar("s")));
}

double EntropySpec::F(double s) const {
  Vec x(1);
  x(0) = s;
  return expr_(x);
}

double EntropySpec::dF(double s) const { return jet_at(expr_, s).grad(0); }
double EntropySpec::d2F(double s) const { return jet_at(expr_, s).hess(0, 0); }

AdmissibilityReport admissibility(const EntropySpec& F, int samples) {
  AdmissibilityReport r;
  r.samples = samples;
  try {
    r.f_at_zero = F.F(0.0);
  } catch (const DomainError&) {
    r.f_at_zero = std::numeric_limits<double>::quiet_NaN();
  }
  if (std::isfinite(r.f_at_zero)) {
    r.f1 = r.f_at_zero == 0.0;
  } else {
    double worst = 0.0;
    for (double s : {1e-50, 1e-100, 1e-200}) worst = std::max(worst, std::abs(F.F(s)));
    r.f1 = r.f1_by_limit = worst < 1e-40;
    if (r.f1) r.f_at_zero = 0.0;
  }
  if (!r.f1) {
    r.violated = "F1";
    r.witness = 0.0;
  }

  r.convexity_margin = r.pressure_margin = std::numeric_limits<double>::infinity();
  for (double s : log_grid(1e-6, 1e3, samples)) {
    const double f = F.F(s), df = F.dF(s), d2f = F.d2F(s);
    const double g = s * df - f, h = s * s * d2f;
    const double tol = 1e-12 * (std::abs(h) + std::abs(s * df) + std::abs(f));
    const double mc = h - g, mp = g;
    if (mc < r.convexity_margin) {
      r.convexity_margin = mc;
      r.convexity_at = s;
    }
    if (mp < r.pressure_margin) {
      r.pressure_margin = mp;
      r.pressure_at = s;
    }
    if (r.violated.empty() && mc < -tol) {
      r.violated = "F2-convexity";
      r.witness = s;
    }
    if (r.violated.empty() && mp < -tol) {
      r.violated = "F2-pressure";
      r.witness = s;
    }
  }
  r.admissible = r.violated.empty();
  return r;
}

AdmissibilityReport validate_entropy(const EntropySpec& F, int samples) {
  AdmissibilityReport r = admissibility(F, samples);
  if (!r.admissible)
    throw InadmissibleEntropy("entropy " + F.name() + " violates " + r.violated + " at s = " + num(r.witness),
                              r.witness);
  return r;
}

PressureIdentityReport pressure_identities(const EntropySpec& F, int samples) {
  PressureIdentityReport r;
  for (double s : log_grid(1e-4, 1e3, samples)) {
    const double f = F.F(s), df = F.dF(s), d2f = F.d2F(s);
    const double scale = 1.0 + std::abs(f) + std::abs(s * df) + std::abs(s * s * d2f);
    const double consistent = s * s * d2f - s * df + f;
    r.g_residual = std::max(r.g_residual, std::abs(F.G(s) - (s * df - f)) / scale);
    r.coefficient_residual = std::max(r.coefficient_residual, std::abs(s * F.dG(s) - F.G(s) - consistent) / scale);
    r.printed_variant_gap = std::max(r.printed_variant_gap, std::abs((s * s * d2f - s * df + df) - consistent));
  }
  return r;
}

McCannReport mccann_check(const EntropySpec& F, int d, double s_min, double s_max, int samples) {
  if (d < 1) throw ContractViolation("McCann check needs d >= 1");
  if (!(s_min > 0.0) || !(s_max > s_min) || samples < 3) throw ContractViolation("McCann check needs a valid grid");
  McCannReport r;
  r.s = log_grid(s_min, s_max, samples);
  for (double s : r.s) r.phi.push_back(std::pow(s, d) * F.F(std::pow(s, -d)));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  r.convexity_margin = r.monotonicity_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k + 1 < samples; ++k) {
    const double tol = 64 * eps * (std::abs(r.phi[k]) + std::abs(r.phi[k + 1]));
    r.monotonicity_margin = std::min(r.monotonicity_margin, -(r.phi[k + 1] - r.phi[k]) + tol);
  }
  for (int k = 1; k + 1 < samples; ++k) {
    const double h0 = r.s[k] - r.s[k - 1], h1 = r.s[k + 1] - r.s[k];
    const double dd = 2.0 * ((r.phi[k + 1] - r.phi[k]) / h1 - (r.phi[k] - r.phi[k - 1]) / h0) / (h0 + h1);
    const double tol =
        64 * eps * (std::abs(r.phi[k - 1]) + 2 * std::abs(r.phi[k]) + std::abs(r.phi[k + 1])) / (h0 * h1);
    r.convexity_margin = std::min(r.convexity_margin, dd + tol);
  }
  r.convex = r.convexity_margin >= 0.0;
  r.nonincreasing = r.monotonicity_margin >= 0.0;
  return r;
}

double entropy_value(const EntropySpec& F, const DisplacementInterpolant& I, const Snapshot& s) {
  double e = 0.0;
  for (size_t i = 0; i < I.size(); ++i) {
    const double det = s.p[i].J.determinant();
    if (!(det > 0.0)) throw Caustic("det of the flow Jacobian is not positive", static_cast<long>(i), s.t);
    e += I.weight(i) * det * F.F(I.rho0(i) / det);
  }
  return e;
}

double entropy_value(const EntropySpec& F, const DisplacementInterpolant& I, double t) {
  return entropy_value(F, I, I.at(t));
}

Vec material_acceleration(const DisplacementInterpolant& I, double t, size_t particle) {
  if (particle >= I.size()) throw ContractViolation("particle index out of range");
  const Snapshot s = I.at(t);
  return el_acceleration(I.lagrangian().derivatives(s.p[particle].x, s.p[particle].v, 2));
}

HessianReport displacement_hessian(const EntropySpec& F, const DisplacementInterpolant& I, const Snapshot& s) {
  HessianReport r;
  r.min_curvature = std::numeric_limits<double>::infinity();
  r.max_curvature = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < I.size(); ++i) {
    const ParticleState& p = s.p[i];
    const double det = p.J.determinant();
    if (!(det > 0.0)) throw Caustic("det of the flow Jacobian is not positive", static_cast<long>(i), s.t);
    const Mat U = p.Jdot * p.J.inverse();
    const JacobiMatrices m = jacobi_matrices(I.lagrangian().derivatives(p.x, p.v, 3));
    const double K = (U * U + m.A * U + m.B).trace();
    const double rho = I.rho0(i) / det, div = U.trace();
    const double w = I.weight(i) * det;
    const double coeff = rho * F.dG(rho) - F.G(rho);
    const double printed = rho * rho * F.d2F(rho) - rho * F.dF(rho) + F.dF(rho);
    r.pressure_part += w * coeff * div * div;
    r.curvature_part += w * F.G(rho) * K;
    r.printed_variant += w * (printed * div * div + F.G(rho) * K);
    r.min_curvature = std::min(r.min_curvature, K);
    r.max_curvature = std::max(r.max_curvature, K);
  }
  r.value = r.pressure_part + r.curvature_part;
  return r;
}

HessianReport displacement_hessian(const EntropySpec& F, const DisplacementInterpolant& I, double t) {
  return displacement_hessian(F, I, I.at(t));
}

double hessian_fd_oracle(const EntropySpec& F, const DisplacementInterpolant& I, double t, double h,
                         bool richardson) {
  if (!(h > 0.0)) throw ContractViolation("hessian oracle needs h > 0");
  const double e0 = entropy_value(F, I, t);
  auto second = [&](double k) {
    return (entropy_value(F, I, t + k) - 2.0 * e0 + entropy_value(F, I, t - k)) / (k * k);
  };
  const double dh = second(h);
  return richardson ? (4.0 * second(0.5 * h) - dh) / 3.0 : dh;
}

ConvexityReport convexity_report(const EntropySpec& F, const DisplacementInterpolant& I) {
  ConvexityReport r;
  r.times = I.times();
  r.min_hessian = r.min_curvature = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < r.times.size(); ++k) {
    const Snapshot& s = I.stored(k);
    r.entropy.push_back(entropy_value(F, I, s));
    const HessianReport h = displacement_hessian(F, I, s);
    r.hessian.push_back(h.value);
    if (h.value < r.min_hessian) {
      r.min_hessian = h.value;
      r.min_hessian_time = r.times[k];
    }
    r.min_curvature = std::min(r.min_curvature, h.min_curvature);
  }
  const double T = I.horizon(), f0 = r.entropy.front(), fT = r.entropy.back();
  r.chord_violation = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < r.times.size(); ++k) {
    const double t = r.times[k];
    r.chord_violation = std::max(r.chord_violation, r.entropy[k] - ((T - t) / T * f0 + t / T * fT));
  }
  return r;
}

}  // namespace tonelli
