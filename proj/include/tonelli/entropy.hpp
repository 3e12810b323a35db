#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tonelli/expression.hpp"
#include "tonelli/transport.hpp"

namespace tonelli {

/// Internal-energy density F on (0, inf), given as an expression in s.
class EntropySpec {
 public:
  static EntropySpec boltzmann();
  /// (s^m - s) / (m - 1), m > 1.
  static EntropySpec power(double m);
  static EntropySpec quadratic();
  static EntropySpec custom(const std::string& expression);

  const std::string& name() const { return name_; }
  const std::string& expression() const { return expr_.source(); }

  double F(double s) const;
  double dF(double s) const;
  double d2F(double s) const;
  /// Pressure G(s) = s F'(s) - F(s) and G'(s) = s F''(s).
  double G(double s) const { return s * dF(s) - F(s); }
  double dG(double s) const { return s * d2F(s); }

 private:
  EntropySpec(std::string name, Expression expr) : name_(std::move(name)), expr_(std::move(expr)) {}
  static EntropySpec make(const std::string& name, const std::string& src);
  std::string name_;
  Expression expr_;
};

struct AdmissibilityReport {
  bool admissible = false;
  bool f1 = false;
  bool f1_by_limit = false;  ///< F(0) undefined as written, F(s) -> 0 as s -> 0
  double f_at_zero = 0.0;
  /// min over samples of s^2 F'' - (s F' - F), and where it occurs
  double convexity_margin = 0.0, convexity_at = 0.0;
  /// min over samples of s F' - F, and where it occurs
  double pressure_margin = 0.0, pressure_at = 0.0;
  std::string violated;  ///< "", "F1", "F2-convexity" or "F2-pressure"
  double witness = 0.0;
  int samples = 0;
};

/// F1 exactly (or as a limit) and F2 on a log-spaced grid over [1e-6, 1e3].
AdmissibilityReport admissibility(const EntropySpec& F, int samples = 400);
/// As admissibility(), throwing InadmissibleEntropy with the witness on failure.
AdmissibilityReport validate_entropy(const EntropySpec& F, int samples = 400);

/// Algebraic checks rho G' - G = rho^2 F'' - rho F' + F on samples, and the gap to the
/// printed variant rho^2 F'' - rho F' + F'.
struct PressureIdentityReport {
  double g_residual = 0.0;          ///< max |G - (s F' - F)| (relative)
  double coefficient_residual = 0.0;  ///< max |s G' - G - (s^2 F'' - s F' + F)| (relative)
  double printed_variant_gap = 0.0;   ///< max |(s^2 F'' - s F' + F') - (s^2 F'' - s F' + F)|
};

PressureIdentityReport pressure_identities(const EntropySpec& F, int samples = 200);

struct McCannReport {
  bool convex = false;
  bool nonincreasing = false;
  double convexity_margin = 0.0;  ///< min second divided difference (tolerance-adjusted)
  double monotonicity_margin = 0.0;  ///< min of -(first difference)
  std::vector<double> s, phi;     ///< samples of phi(s) = s^d F(s^-d)
};

McCannReport mccann_check(const EntropySpec& F, int d, double s_min = 1e-2, double s_max = 1e2, int samples = 200);

/// Sum_i w_i det J_i F(rho_t(sigma_i)).
double entropy_value(const EntropySpec& F, const DisplacementInterpolant& interp, double t);
double entropy_value(const EntropySpec& F, const DisplacementInterpolant& interp, const Snapshot& s);

/// W = sigma'' of particle i, the Euler-Lagrange acceleration at its state.
Vec material_acceleration(const DisplacementInterpolant& interp, double t, size_t particle);

struct HessianReport {
  double value = 0.0;
  double pressure_part = 0.0;   ///< integral of (rho G' - G)(div V)^2
  double curvature_part = 0.0;  ///< integral of G K(V)
  double printed_variant = 0.0;  ///< value with the printed coefficient rho^2 F'' - rho F' + F'
  double min_curvature = 0.0;   ///< min pointwise K(V) over particles
  double max_curvature = 0.0;
};

/// Displacement Hessian from the Jacobian companion: div V = tr(J' J^-1) and
/// K(V) = tr(U^2 + A U + B) at each particle.
HessianReport displacement_hessian(const EntropySpec& F, const DisplacementInterpolant& interp, double t);
HessianReport displacement_hessian(const EntropySpec& F, const DisplacementInterpolant& interp, const Snapshot& s);

/// Central second difference of the entropy in time, optionally Richardson-extrapolated
/// with h/2. Times outside [0, T] are reached by integrating past the ends.
double hessian_fd_oracle(const EntropySpec& F, const DisplacementInterpolant& interp, double t, double h,
                         bool richardson = true);

struct ConvexityReport {
  std::vector<double> times, entropy, hessian;
  double chord_violation = 0.0;  ///< max of F(rho_t) - chord; <= 0 means no violation
  double min_hessian = 0.0;
  double min_hessian_time = 0.0;
  double min_curvature = 0.0;
};

/// Entropy and displacement Hessian on the stored time grid.
ConvexityReport convexity_report(const EntropySpec& F, const DisplacementInterpolant& interp);

}  // namespace tonelli
