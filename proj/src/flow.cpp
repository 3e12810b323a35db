#include "tonelli/flow.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "tonelli/curvature.hpp"
#include "tonelli/error.hpp"

namespace tonelli {

Vec el_acceleration(const DerivativeBundle& b) { return b.hvv_solve(Vec(b.gx - b.hxv.transpose() * b.v)); }

ElRhs el_rhs(const LagrangianModel& L, const Vec& x, const Vec& v) {
  return {v, el_acceleration(L.derivatives(x, v, 2))};
}

double Trajectory::energy_drift() const {
  if (energy.empty()) return 0.0;
  const double e0 = energy.front();
  double m = 0.0;
  for (double e : energy) m = std::max(m, std::abs(e - e0));
  return m / std::max(std::abs(e0), 1e-300);
}

double det_derivative(const Mat& J, const Mat& Jdot) {
  // Jacobi's formula in the column-replacement form
  double s = 0.0;
  for (int i = 0; i < J.cols(); ++i) {
    Mat K = J;
    K.col(i) = Jdot.col(i);
    s += K.determinant();
  }
  return s;
}

namespace {

struct State {
  Vec x, v;
  Mat J, Jd, U;
};

struct Slope {
  Vec x, v;
  Mat J, Jd, U;
};

Slope slope(const LagrangianModel& L, const State& s, bool jac, bool ric) {
  const bool third = jac || ric;
  const DerivativeBundle b = L.derivatives(s.x, s.v, third ? 3 : 2);
  Slope k;
  k.x = s.v;
  k.v = el_acceleration(b);
  if (third) {
    const JacobiMatrices ab = jacobi_matrices(b, k.v);
    if (jac) {
      k.J = s.Jd;
      k.Jd = -ab.A * s.Jd - ab.B * s.J;
    }
    if (ric) k.U = -s.U * s.U - ab.A * s.U - ab.B;
  }
  return k;
}

State advance(const State& s, const Slope& k, double h, bool jac, bool ric) {
  State o;
  o.x = s.x + h * k.x;
  o.v = s.v + h * k.v;
  if (jac) {
    o.J = s.J + h * k.J;
    o.Jd = s.Jd + h * k.Jd;
  }
  if (ric) o.U = s.U + h * k.U;
  return o;
}

// Cubic Hermite interpolant of det J over one step, searched for a zero or a touching minimum.
std::optional<double> caustic_in_step(double t0, double h, double p0, double p1, double m0, double m1,
                                      double threshold) {
  auto H = [&](double s) {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * h * m0 + (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * h * m1;
  };
  const int n = 64;
  double prev = p0;
  double best = p0, best_s = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double s = static_cast<double>(i) / n;
    const double val = H(s);
    if (val <= 0.0 && prev > 0.0) {
      double lo = s - 1.0 / n, hi = s;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (H(mid) > 0.0 ? lo : hi) = mid;
      }
      return t0 + hi * h;
    }
    if (val < best) {
      best = val;
      best_s = s;
    }
    prev = val;
  }
  if (best <= threshold) {
    // golden-section polish of the touching minimum
    double lo = std::max(0.0, best_s - 1.0 / n), hi = std::min(1.0, best_s + 1.0 / n);
    for (int it = 0; it < 80; ++it) {
      const double a = lo + 0.381966 * (hi - lo), b = hi - 0.381966 * (hi - lo);
      (H(a) < H(b) ? hi : lo) = (H(a) < H(b) ? b : a);
    }
    return t0 + 0.5 * (lo + hi) * h;
  }
  return std::nullopt;
}

}  // namespace

Trajectory integrate(const LagrangianModel& L, const Vec& x0, const Vec& v0, double T, int steps,
                     const FlowOptions& opt) {
  if (T == 0.0 || !std::isfinite(T)) throw ContractViolation("flow horizon T must be nonzero and finite");
  if (steps < 1) throw ContractViolation("flow needs at least one step");
  if (opt.record_stride < 1 || steps % opt.record_stride != 0)
    throw ContractViolation("record stride must divide the step count");
  const int d = L.dim();
  const bool jac = opt.jacobian, ric = opt.riccati;
  State s;
  s.x = x0;
  s.v = v0;
  if (jac) {
    s.J = opt.J0.size() ? opt.J0 : Mat(Mat::Identity(d, d));
    s.Jd = opt.Jdot0.size() ? opt.Jdot0 : Mat(Mat::Zero(d, d));
  }
  if (ric) s.U = opt.U0.size() ? opt.U0 : Mat(Mat::Zero(d, d));

  Trajectory tr;
  const double h = T / steps;
  auto record = [&](int n) {
    tr.times.push_back(n == steps ? T : n * h);
    tr.x.push_back(s.x);
    tr.v.push_back(s.v);
    tr.energy.push_back(L.energy(s.x, s.v));
    if (jac) {
      tr.J.push_back(s.J);
      tr.Jdot.push_back(s.Jd);
    }
    if (ric) tr.U.push_back(s.U);
  };
  record(0);
  const double det_scale = jac ? std::max(std::abs(s.J.determinant()), 1e-300) : 1.0;
  if (jac && s.J.determinant() <= 0.0) {
    tr.caustic = true;
    tr.caustic_time = 0.0;
  }

  for (int n = 0; n < steps; ++n) {
    const double t = n * h;
    const Slope k1 = slope(L, s, jac, ric);
    const Slope k2 = slope(L, advance(s, k1, 0.5 * h, jac, ric), jac, ric);
    const Slope k3 = slope(L, advance(s, k2, 0.5 * h, jac, ric), jac, ric);
    const Slope k4 = slope(L, advance(s, k3, h, jac, ric), jac, ric);
    State next;
    next.x = s.x + (h / 6) * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
    next.v = s.v + (h / 6) * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
    if (jac) {
      next.J = s.J + (h / 6) * (k1.J + 2 * k2.J + 2 * k3.J + k4.J);
      next.Jd = s.Jd + (h / 6) * (k1.Jd + 2 * k2.Jd + 2 * k3.Jd + k4.Jd);
    }
    if (ric) {
      next.U = s.U + (h / 6) * (k1.U + 2 * k2.U + 2 * k3.U + k4.U);
      const double un = next.U.norm();
      if (!next.U.allFinite() || un > opt.riccati_limit) {
        const double est = std::isfinite(un) ? t + h + 1.0 / un : t + h;
        std::ostringstream os;
        os << "Riccati solution blew up near t = " << est;
        throw RiccatiBlowup(os.str(), est);
      }
    }
    if (!next.x.allFinite() || !next.v.allFinite())
      throw DomainError("Euler-Lagrange integration produced non-finite state at t = " + num(t + h));

    if (jac && !tr.caustic) {
      const double p0 = s.J.determinant(), p1 = next.J.determinant();
      const double m0 = det_derivative(s.J, s.Jd), m1 = det_derivative(next.J, next.Jd);
      if (auto tc = caustic_in_step(t, h, p0, p1, m0, m1, 1e-8 * det_scale)) {
        tr.caustic = true;
        tr.caustic_time = *tc;
        if (opt.throw_on_caustic) {
          std::ostringstream os;
          os.precision(10);
          os << "det of the flow Jacobian vanishes at t = " << *tc;
          throw Caustic(os.str(), -1, *tc);
        }
      }
    }
    s = std::move(next);
    if ((n + 1) % opt.record_stride == 0) record(n + 1);
  }
  return tr;
}

Trajectory lagrangian_flow(const LagrangianModel& L, const Vec& x0, const Vec& v0, double T, int steps) {
  return integrate(L, x0, v0, T, steps);
}

Trajectory jacobian_flow(const LagrangianModel& L, const Vec& x0, const VectorField& field, double T, int steps) {
  const FieldJet f = field.jet(x0, 1);
  FlowOptions opt;
  opt.jacobian = true;
  opt.Jdot0 = f.jac;
  return integrate(L, x0, f.value, T, steps, opt);
}

Trajectory riccati_flow(const LagrangianModel& L, const Vec& x0, const VectorField& field, double T, int steps) {
  const FieldJet f = field.jet(x0, 1);
  FlowOptions opt;
  opt.riccati = true;
  opt.U0 = f.jac;
  return integrate(L, x0, f.value, T, steps, opt);
}

std::vector<double> simpson_weights(int intervals, double h) {
  std::vector<double> w(intervals + 1, 0.0);
  if (intervals == 1) {
    w[0] = w[1] = 0.5 * h;
    return w;
  }
  const int simpson = intervals % 2 == 0 ? intervals : intervals - 3;
  for (int i = 0; i < simpson; i += 2) {
    w[i] += h / 3;
    w[i + 1] += 4 * h / 3;
    w[i + 2] += h / 3;
  }
  if (simpson != intervals) {
    const int i = simpson;
    w[i] += 3 * h / 8;
    w[i + 1] += 9 * h / 8;
    w[i + 2] += 9 * h / 8;
    w[i + 3] += 3 * h / 8;
  }
  return w;
}

double action(const LagrangianModel& L, const Trajectory& traj) {
  const size_t n = traj.size();
  if (n == 0) throw ContractViolation("action of an empty trajectory");
  if (n == 1) return 0.0;
  const double h = (traj.times.back() - traj.times.front()) / static_cast<double>(n - 1);
  const auto w = simpson_weights(static_cast<int>(n - 1), h);
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += w[i] * L.value(traj.x[i], traj.v[i]);
  return s;
}

CostResult cost(const LagrangianModel& L, const Vec& x, const Vec& y, double T, double tol, const CostOptions& opt) {
  if (!(T > 0.0)) throw ContractViolation("cost horizon T must be positive");
  const int d = L.dim();
  std::vector<Vec> seeds{(y - x) / T};
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 0.5 * (1.0 + seeds[0].norm());
  for (int k = 0; k < opt.random_seeds; ++k) {
    Vec p(d);
    for (int i = 0; i < d; ++i) p(i) = normal(rng);
    seeds.push_back(seeds[0] + scale * p);
  }

  FlowOptions fo;
  fo.jacobian = true;
  fo.J0 = Mat::Zero(d, d);
  fo.Jdot0 = Mat::Identity(d, d);
  std::optional<CostResult> best;
  double best_residual = std::numeric_limits<double>::infinity();
  for (const Vec& seed : seeds) {
    Vec v0 = seed;
    try {
      Trajectory tr = integrate(L, x, v0, T, opt.steps, fo);
      Vec F = tr.x.back() - y;
      for (int it = 0; it < opt.max_newton && F.norm() > tol; ++it) {
        const Vec step = -tr.J.back().fullPivLu().solve(F);
        double t = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 30; ++ls) {
          Trajectory cand = integrate(L, x, v0 + t * step, T, opt.steps, fo);
          const Vec Fc = cand.x.back() - y;
          if (Fc.allFinite() && Fc.norm() < F.norm()) {
            v0 += t * step;
            tr = std::move(cand);
            F = Fc;
            moved = true;
            break;
          }
          t *= 0.5;
        }
        if (!moved) break;
      }
      best_residual = std::min(best_residual, F.norm());
      if (F.norm() > tol) continue;
      const double c = action(L, tr);
      const bool better = !best || c < best->c - 1e-12 * std::max(1.0, std::abs(c)) ||
                          (std::abs(c - best->c) <= 1e-12 * std::max(1.0, std::abs(c)) && v0.norm() < best->v0.norm());
      const int branches = best ? best->branches + 1 : 1;
      if (better) best = CostResult{c, v0, F.norm(), branches};
      else best->branches = branches;
    } catch (const Error&) {
      continue;
    }
  }
  if (!best) {
    std::ostringstream os;
    os << "shooting did not converge from any seed (best residual " << best_residual << ")";
    throw CostFailure(os.str(), best_residual);
  }
  return *best;
}

}  // namespace tonelli
