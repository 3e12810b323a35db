#pragma once

#include <string>
#include <vector>

#include "tonelli/field.hpp"
#include "tonelli/flow.hpp"

namespace tonelli {

/// Tensor grid of n^d nodes on the box center + [-r, r]^d with trapezoid weights.
struct SeedGrid {
  int d = 0, n = 0;
  double radius = 0.0;
  Vec center;

  size_t size() const;
  Vec node(size_t flat) const;
  double weight(size_t flat) const;
  double spacing() const { return 2.0 * radius / (n - 1); }
};

/// Compactly supported initial density on the ball B(center, radius).
///
/// The bump preset is c exp(1 / (|x - center|^2 / r^2 - 1)); custom densities are an
/// expression in x1..xd cut off outside the ball. The constant c is fixed by
/// normalizing on a seed grid, so the discrete measure has mass one.
class Density {
 public:
  static Density bump(int d, double radius, const Vec& center);
  static Density custom(int d, const std::string& expression, double radius, const Vec& center);

  int dim() const { return d_; }
  double radius() const { return radius_; }
  const Vec& center() const { return center_; }
  const std::string& description() const { return description_; }
  bool is_bump() const { return bump_; }

  /// Unnormalized profile; zero outside the ball.
  double raw(const Vec& x) const;
  double value(const Vec& x) const { return scale_ * raw(x); }
  double scale() const { return scale_; }
  /// Integral of the unnormalized profile: exact radial quadrature for the bump, a
  /// 4x refined grid for custom expressions.
  double reference_mass() const;

  /// Copy with c chosen so the trapezoid sum over `grid` is one.
  Density normalized_on(const SeedGrid& grid) const;

 private:
  int d_ = 0;
  double radius_ = 1.0;
  Vec center_;
  bool bump_ = true;
  Expression expr_;
  std::string description_;
  double scale_ = 1.0;
};

/// V0(x) = dH/dp(x, grad u0(x)).
Vec initial_velocity(const LagrangianModel& L, const Potential& u0, const Vec& x);

struct ParticleState {
  Vec x, v;
  Mat J, Jdot;
};

struct Snapshot {
  double t = 0.0;
  std::vector<ParticleState> p;
};

struct InterpolantOptions {
  int particles_per_dim = 41;
  int steps = 100;
  int record_stride = 1;
  double density_threshold = 1e-12;
};

/// Displacement interpolant rho_t = sigma(t, .)_# rho0 generated by a smooth potential.
/// Immutable after construction.
class DisplacementInterpolant {
 public:
  const LagrangianModel& lagrangian() const { return L_; }
  const Potential& potential() const { return u0_; }
  const Density& density() const { return rho0_; }
  const VectorField& initial_field() const { return field_; }
  const SeedGrid& grid() const { return grid_; }
  double horizon() const { return T_; }
  int steps() const { return steps_; }
  double step() const { return T_ / steps_; }

  size_t size() const { return seeds_.size(); }
  const Vec& seed(size_t i) const { return seeds_[i]; }
  double weight(size_t i) const { return weights_[i]; }
  double rho0(size_t i) const { return rho0_values_[i]; }
  size_t grid_index(size_t i) const { return grid_index_[i]; }

  const std::vector<double>& times() const { return times_; }
  const Snapshot& stored(size_t k) const { return snaps_[k]; }
  /// Action along each particle from 0 to times()[k] (fourth-order Hermite rule).
  const std::vector<double>& running_action(size_t k) const { return actions_[k]; }

  /// Particle states at time t: a stored node when t is on the grid, otherwise
  /// re-integrated from the nearest node (t may lie outside [0, T]).
  Snapshot at(double t) const;

  /// rho_t(sigma(t, x_i)) = rho0(x_i) / det J.
  double density(size_t i, const ParticleState& s) const { return rho0_values_[i] / s.J.determinant(); }

  /// |sum of rho0 over the seed grid with the exactly normalized profile - 1|.
  double normalization_gap() const { return normalization_gap_; }

 private:
  friend DisplacementInterpolant build_interpolant(const LagrangianModel&, const Potential&, const Density&, double,
                                                   const InterpolantOptions&);
  LagrangianModel L_;
  Potential u0_;
  Density rho0_;
  VectorField field_;
  SeedGrid grid_;
  double T_ = 0.0;
  int steps_ = 0;
  std::vector<Vec> seeds_;
  std::vector<double> weights_, rho0_values_;
  std::vector<size_t> grid_index_;
  std::vector<double> times_;
  std::vector<Snapshot> snaps_;
  std::vector<std::vector<double>> actions_;
  double normalization_gap_ = 0.0;
};

/// Seeds a grid over the support of rho0, keeps nodes with rho0 > threshold, and flows
/// each with its Jacobian. Throws Caustic listing every particle whose det J vanishes.
DisplacementInterpolant build_interpolant(const LagrangianModel& L, const Potential& u0, const Density& rho0,
                                          double T, const InterpolantOptions& opt = {});

struct ContinuityOptions {
  int eval_per_dim = 9;
  int min_substeps = 64;
  double label_step = 2e-3;  ///< spatial difference step relative to the support radius
};

/// max |d rho/dt + div(rho V)| over an evaluation grid mapped to time t. d rho/dt is a
/// central difference of step h at fixed Eulerian points (flow inverted by Newton);
/// spatial derivatives are sixth-order differences over the label.
double continuity_residual(const DisplacementInterpolant& interp, double t, double h,
                           const ContinuityOptions& opt = {});

/// |sum_i w_i rho_t(sigma_i) det J_i - 1|.
double mass_check(const DisplacementInterpolant& interp, double t);

/// max over particles and stored times of |running action - Simpson quadrature of L|.
double calibration_check(const DisplacementInterpolant& interp);

}  // namespace tonelli
