#include "tonelli/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tonelli/error.hpp"
#include "tonelli/parallel.hpp"

namespace tonelli {

size_t SeedGrid::size() const {
  size_t s = 1;
  for (int i = 0; i < d; ++i) s *= static_cast<size_t>(n);
  return s;
}

Vec SeedGrid::node(size_t flat) const {
  Vec x(d);
  const double h = spacing();
  for (int i = d - 1; i >= 0; --i) {
    x(i) = center(i) - radius + h * static_cast<double>(flat % n);
    flat /= n;
  }
  return x;
}

double SeedGrid::weight(size_t flat) const {
  double w = 1.0;
  const double h = spacing();
  for (int i = 0; i < d; ++i) {
    const size_t k = flat % n;
    flat /= n;
    w *= (k == 0 || k == static_cast<size_t>(n - 1)) ? 0.5 * h : h;
  }
  return w;
}

Density Density::bump(int d, double radius, const Vec& center) {
  if (d < 1) throw ContractViolation("density dimension must be positive");
  if (!(radius > 0.0)) throw ContractViolation("density support radius must be positive");
  if (center.size() != d) throw ContractViolation("density center has the wrong dimension");
  Density r;
  r.d_ = d;
  r.radius_ = radius;
  r.center_ = center;
  r.description_ = "bump(radius=" + num(radius) + ")";
  r.scale_ = 1.0 / r.reference_mass();
  return r;
}

Density Density::custom(int d, const std::string& expression, double radius, const Vec& center) {
  Density r = bump(d, radius, center);
  r.bump_ = false;
  r.expr_ = Expression::parse(expression, VariableSet::positions(d));
  r.description_ = expression;
  r.scale_ = 1.0 / r.reference_mass();
  return r;
}

double Density::raw(const Vec& x) const {
  const double s2 = (x - center_).squaredNorm() / (radius_ * radius_);
  if (s2 >= 1.0) return 0.0;
  if (bump_) return std::exp(1.0 / (s2 - 1.0));
  const double v = expr_(x);
  if (!(v >= 0.0) || !std::isfinite(v))
    throw ValidationError("rho0", "density expression is negative or not finite at " + point_str(x));
  return v;
}

double Density::reference_mass() const {
  if (bump_) {
    // r^d |S^{d-1}| int_0^1 s^{d-1} exp(1/(s^2-1)) ds, composite Simpson
    const int n = 20000;
    const double h = 1.0 / n;
    double s = 0.0;
    for (int k = 1; k < n; ++k) {
      const double r = k * h;
      s += (k % 2 ? 4.0 : 2.0) * std::pow(r, d_ - 1) * std::exp(1.0 / (r * r - 1.0));
    }
    const double sphere = 2.0 * std::pow(M_PI, 0.5 * d_) / std::tgamma(0.5 * d_);
    return std::pow(radius_, d_) * sphere * s * h / 3.0;
  }
  SeedGrid g{d_, d_ == 1 ? 4001 : d_ == 2 ? 401 : 121, radius_, center_};
  double m = 0.0;
  for (size_t i = 0; i < g.size(); ++i) m += g.weight(i) * raw(g.node(i));
  return m;
}

Density Density::normalized_on(const SeedGrid& grid) const {
  double m = 0.0;
  for (size_t i = 0; i < grid.size(); ++i) m += grid.weight(i) * raw(grid.node(i));
  if (!(m > 0.0)) throw ValidationError("rho0", "density has zero mass on the seed grid");
  Density r = *this;
  r.scale_ = 1.0 / m;
  return r;
}

Vec initial_velocity(const LagrangianModel& L, const Potential& u0, const Vec& x) {
  return hamiltonian_grad(L, x, u0.jet(x, 1).gradient());
}

namespace {

/// d/dt L along the Euler-Lagrange curve.
double action_rate(const LagrangianModel& L, const Vec& x, const Vec& v, double* value) {
  const DerivativeBundle b = L.derivatives(x, v, 2);
  *value = b.value;
  return b.gx.dot(v) + b.gv.dot(el_acceleration(b));
}

}  // namespace

DisplacementInterpolant build_interpolant(const LagrangianModel& L, const Potential& u0, const Density& rho0,
                                          double T, const InterpolantOptions& opt) {
  const int d = L.dim();
  if (u0.dim() != d || rho0.dim() != d) throw ContractViolation("interpolant parts have different dimensions");
  if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("numeric.T", "time horizon must be positive");
  if (opt.particles_per_dim < 3) throw ValidationError("numeric.particles", "need at least 3 particles per dimension");
  if (opt.steps < 1) throw ValidationError("numeric.steps", "need at least one time step");
  if (opt.record_stride < 1 || opt.steps % opt.record_stride)
    throw ValidationError("numeric.record_stride", "record stride must divide the step count");

  DisplacementInterpolant I;
  I.L_ = L;
  I.u0_ = u0;
  I.grid_ = SeedGrid{d, opt.particles_per_dim, rho0.radius(), rho0.center()};
  I.rho0_ = rho0.normalized_on(I.grid_);
  I.field_ = VectorField::gradient_type(u0, L);
  I.T_ = T;
  I.steps_ = opt.steps;

  const double exact_scale = 1.0 / rho0.reference_mass();
  double exact_mass = 0.0;
  for (size_t g = 0; g < I.grid_.size(); ++g) {
    const Vec x = I.grid_.node(g);
    const double rho = I.rho0_.value(x);
    exact_mass += I.grid_.weight(g) * exact_scale * rho0.raw(x);
    if (rho > opt.density_threshold) {
      I.seeds_.push_back(x);
      I.weights_.push_back(I.grid_.weight(g));
      I.rho0_values_.push_back(rho);
      I.grid_index_.push_back(g);
    }
  }
  I.normalization_gap_ = std::abs(exact_mass - 1.0);
  const size_t n = I.seeds_.size();
  if (n == 0) throw ValidationError("rho0", "no seed carries positive density");

  const int records = opt.steps / opt.record_stride + 1;
  for (int k = 0; k < records; ++k) I.times_.push_back(k == records - 1 ? T : k * opt.record_stride * T / opt.steps);
  I.snaps_.assign(records, Snapshot{});
  for (int k = 0; k < records; ++k) {
    I.snaps_[k].t = I.times_[k];
    I.snaps_[k].p.resize(n);
  }
  I.actions_.assign(records, std::vector<double>(n, 0.0));

  std::vector<double> crossing(n, -1.0);
  parallel_for(n, [&](size_t i) {
    const FieldJet f = I.field_.jet(I.seeds_[i], 1);
    FlowOptions fo;
    fo.jacobian = true;
    fo.Jdot0 = f.jac;
    fo.record_stride = opt.record_stride;
    const Trajectory tr = integrate(L, I.seeds_[i], f.value, T, opt.steps, fo);
    if (tr.caustic) {
      crossing[i] = tr.caustic_time;
      return;
    }
    double lprev = 0.0, rprev = action_rate(L, tr.x[0], tr.v[0], &lprev);
    for (int k = 0; k < records; ++k) {
      I.snaps_[k].p[i] = ParticleState{tr.x[k], tr.v[k], tr.J[k], tr.Jdot[k]};
      if (k == 0) continue;
      const double h = tr.times[k] - tr.times[k - 1];
      double l = 0.0;
      const double r = action_rate(L, tr.x[k], tr.v[k], &l);
      I.actions_[k][i] = I.actions_[k - 1][i] + 0.5 * h * (lprev + l) + h * h / 12.0 * (rprev - r);
      lprev = l;
      rprev = r;
    }
  });

  std::vector<Caustic::Crossing> hits;
  for (size_t i = 0; i < n; ++i)
    if (crossing[i] >= 0.0) hits.push_back({static_cast<long>(i), crossing[i]});
  if (!hits.empty()) {
    std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    std::ostringstream os;
    os.precision(10);
    os << "det of the flow Jacobian vanishes for " << hits.size() << " of " << n << " particles; first at t = "
       << hits.front().time << " (particle " << hits.front().particle << ")";
    throw Caustic(os.str(), std::move(hits));
  }
  return I;
}

Snapshot DisplacementInterpolant::at(double t) const {
  if (!std::isfinite(t)) throw ContractViolation("interpolant evaluated at a non-finite time");
  size_t k = 0;
  for (size_t j = 1; j < times_.size(); ++j)
    if (std::abs(times_[j] - t) < std::abs(times_[k] - t)) k = j;
  const double delta = t - times_[k];
  if (std::abs(delta) <= 1e-13 * std::max(1.0, T_)) return snaps_[k];

  const int sub = std::max(1, static_cast<int>(std::ceil(std::abs(delta) / step() - 1e-9)));
  Snapshot out;
  out.t = t;
  out.p.resize(size());
  parallel_for(size(), [&](size_t i) {
    const ParticleState& s = snaps_[k].p[i];
    FlowOptions fo;
    fo.jacobian = true;
    fo.J0 = s.J;
    fo.Jdot0 = s.Jdot;
    fo.record_stride = sub;
    const Trajectory tr = integrate(L_, s.x, s.v, delta, sub, fo);
    if (tr.caustic || tr.J.back().determinant() <= 0.0)
      throw Caustic("det of the flow Jacobian vanishes near t = " + num(t), static_cast<long>(i),
                    tr.caustic ? times_[k] + tr.caustic_time : t);
    out.p[i] = ParticleState{tr.x.back(), tr.v.back(), tr.J.back(), tr.Jdot.back()};
  });
  return out;
}

namespace {

struct LabelFlow {
  Vec x, v;
  Mat J, Jd;
};

LabelFlow flow_label(const DisplacementInterpolant& I, const Vec& label, double tau, int steps) {
  const FieldJet f = I.initial_field().jet(label, 1);
  const int d = static_cast<int>(label.size());
  if (tau == 0.0) return {label, f.value, Mat::Identity(d, d), f.jac};
  FlowOptions fo;
  fo.jacobian = true;
  fo.Jdot0 = f.jac;
  fo.record_stride = steps;
  const Trajectory tr = integrate(I.lagrangian(), label, f.value, tau, steps, fo);
  return {tr.x.back(), tr.v.back(), tr.J.back(), tr.Jdot.back()};
}

/// rho(tau, y) by inverting sigma(tau, .) with Newton from `guess`.
double eulerian_density(const DisplacementInterpolant& I, const Vec& y, double tau, Vec guess, int steps) {
  for (int it = 0; it < 25; ++it) {
    const LabelFlow s = flow_label(I, guess, tau, steps);
    const Vec r = s.x - y;
    if (r.norm() <= 1e-14 * (1.0 + y.norm())) return I.density().value(guess) / s.J.determinant();
    guess -= s.J.partialPivLu().solve(r);
  }
  throw DomainError("evaluation point " + point_str(y) + " is outside the range of the flow map at t = " + num(tau));
}

}  // namespace

double continuity_residual(const DisplacementInterpolant& I, double t, double h, const ContinuityOptions& opt) {
  if (!(h > 0.0)) throw ContractViolation("continuity residual needs h > 0");
  const int d = I.lagrangian().dim();
  const Density& rho0 = I.density();
  const int steps = std::max(opt.min_substeps, 2 * static_cast<int>(std::ceil((std::abs(t) + h) / I.step())));
  const double delta = opt.label_step * rho0.radius();
  static const double c6[3] = {45.0 / 60.0, -9.0 / 60.0, 1.0 / 60.0};

  std::vector<Vec> labels;
  const int m = opt.eval_per_dim;
  size_t total = 1;
  for (int i = 0; i < d; ++i) total *= m;
  for (size_t flat = 0; flat < total; ++flat) {
    Vec x(d);
    size_t r = flat;
    for (int i = d - 1; i >= 0; --i) {
      x(i) = rho0.center()(i) + rho0.radius() * (-1.0 + 2.0 * static_cast<double>(r % m + 1) / (m + 1));
      r /= m;
    }
    if (rho0.raw(x) > 0.0) labels.push_back(x);
  }

  std::vector<double> res(labels.size(), 0.0);
  parallel_for(labels.size(), [&](size_t e) {
    const Vec& x = labels[e];
    const LabelFlow s = flow_label(I, x, t, steps);
    const double detJ = s.J.determinant();
    const double rho = rho0.value(x) / detJ;
    const double divV = (s.Jd * s.J.inverse()).trace();

    Vec grad_label(d);
    for (int k = 0; k < d; ++k) {
      double g = 0.0;
      for (int j = 1; j <= 3; ++j) {
        Vec xp = x, xm = x;
        xp(k) += j * delta;
        xm(k) -= j * delta;
        const double fp = rho0.value(xp) / flow_label(I, xp, t, steps).J.determinant();
        const double fm = rho0.value(xm) / flow_label(I, xm, t, steps).J.determinant();
        g += c6[j - 1] * (fp - fm);
      }
      grad_label(k) = g / delta;
    }
    const Vec grad_rho = s.J.transpose().partialPivLu().solve(grad_label);

    const double rp = eulerian_density(I, s.x, t + h, x, steps);
    const double rm = eulerian_density(I, s.x, t - h, x, steps);
    res[e] = std::abs((rp - rm) / (2 * h) + grad_rho.dot(s.v) + rho * divV);
  });
  double worst = 0.0;
  for (double r : res) worst = std::max(worst, r);
  return worst;
}

double mass_check(const DisplacementInterpolant& I, double t) {
  const Snapshot s = I.at(t);
  double m = 0.0;
  for (size_t i = 0; i < I.size(); ++i) m += I.weight(i) * I.density(i, s.p[i]) * s.p[i].J.determinant();
  return std::abs(m - 1.0);
}

double calibration_check(const DisplacementInterpolant& I) {
  const LagrangianModel& L = I.lagrangian();
  const size_t K = I.times().size();
  double worst = 0.0;
  std::vector<std::vector<double>> lag(K, std::vector<double>(I.size()));
  for (size_t k = 0; k < K; ++k)
    for (size_t i = 0; i < I.size(); ++i) lag[k][i] = L.value(I.stored(k).p[i].x, I.stored(k).p[i].v);
  for (size_t k = 2; k < K; ++k) {
    const auto w = simpson_weights(static_cast<int>(k), I.times()[k] / static_cast<double>(k));
    for (size_t i = 0; i < I.size(); ++i) {
      double s = 0.0;
      for (size_t j = 0; j <= k; ++j) s += w[j] * lag[j][i];
      worst = std::max(worst, std::abs(s - I.running_action(k)[i]));
    }
  }
  return worst;
}

}  // namespace tonelli
