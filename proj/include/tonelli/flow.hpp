#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tonelli/field.hpp"
#include "tonelli/lagrangian.hpp"

namespace tonelli {

/// Euler-Lagrange acceleration a = hvv^-1 (gx - hvx v).
Vec el_acceleration(const DerivativeBundle& b);

struct ElRhs {
  Vec xdot, vdot;
};

/// First-order form of d/dt dL/dv = dL/dx. With L = 1/2<v,gv> + U this gives x'' = +grad U for g = I.
ElRhs el_rhs(const LagrangianModel& L, const Vec& x, const Vec& v);

/// Discretised Euler-Lagrange solution, optionally carrying the Jacobian J = grad sigma,
/// its time derivative, and the Riccati matrix U.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> x, v;
  std::vector<Mat> J, Jdot, U;
  std::vector<double> energy;  ///< H(x, dL/dv(x, v)) per node

  bool caustic = false;
  double caustic_time = 0.0;  ///< first time det J reached zero, when caustic

  size_t size() const { return times.size(); }
  bool has_jacobian() const { return !J.empty(); }
  bool has_riccati() const { return !U.empty(); }
  double det_J(size_t i) const { return J[i].determinant(); }
  /// max |H(t) - H(0)| / max(|H(0)|, tiny)
  double energy_drift() const;
};

struct FlowOptions {
  bool jacobian = false;
  bool riccati = false;
  Mat J0, Jdot0, U0;  ///< defaults: I, 0, 0
  /// Keep every k-th node (the last node is always kept).
  int record_stride = 1;
  /// Throw Caustic instead of only marking the trajectory.
  bool throw_on_caustic = false;
  /// Riccati norm treated as blow-up.
  double riccati_limit = 1e8;
};

/// Fixed-step RK4 on (x, v) and, on request, the Jacobi and Riccati companions
/// J'' = -A J' - B J and U' = -U^2 - A U - B. A negative T integrates backward in time.
Trajectory integrate(const LagrangianModel& L, const Vec& x0, const Vec& v0, double T, int steps,
                     const FlowOptions& opt = {});

Trajectory lagrangian_flow(const LagrangianModel& L, const Vec& x0, const Vec& v0, double T, int steps);

/// J(0) = I, J'(0) = grad field(x0), v(0) = field(x0).
Trajectory jacobian_flow(const LagrangianModel& L, const Vec& x0, const VectorField& field, double T, int steps);

/// U(0) = grad field(x0). Throws RiccatiBlowup near a caustic.
Trajectory riccati_flow(const LagrangianModel& L, const Vec& x0, const VectorField& field, double T, int steps);

/// Composite Simpson rule of L along the stored nodes (3/8 rule closes an odd count).
double action(const LagrangianModel& L, const Trajectory& traj);

/// Quadrature weights for uniformly spaced samples matching `action`.
std::vector<double> simpson_weights(int intervals, double h);

struct CostResult {
  double c = 0.0;
  Vec v0;
  double residual = 0.0;
  int branches = 0;  ///< converged seeds
};

struct CostOptions {
  int steps = 400;
  int random_seeds = 8;
  uint64_t seed = 12345;
  int max_newton = 50;
};

/// Two-point cost c_{L,T}(x, y) by shooting on the initial velocity.
CostResult cost(const LagrangianModel& L, const Vec& x, const Vec& y, double T, double tol,
                const CostOptions& opt = {});

/// d/dt det J given J and J', valid also for singular J.
double det_derivative(const Mat& J, const Mat& Jdot);

}  // namespace tonelli
