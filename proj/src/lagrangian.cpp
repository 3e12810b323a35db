#include "tonelli/lagrangian.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "tonelli/error.hpp"

namespace tonelli {

// ---------------------------------------------------------------- metric

Metric::Metric(int d, std::vector<std::string> entries) : d_(d) {
  if (d < 1) throw ContractViolation("metric dimension must be positive");
  if (static_cast<int>(entries.size()) != d * (d + 1) / 2)
    throw ContractViolation("metric needs d(d+1)/2 upper-triangular entries");
  src_.assign(static_cast<size_t>(d) * d, "0");
  const VariableSet vars = VariableSet::positions(d);
  size_t k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j, ++k) {
      src_[i * d + j] = entries[k];
      src_[j * d + i] = entries[k];
    }
  for (const auto& s : src_) expr_.push_back(Expression::parse(s, vars));
}

Metric Metric::identity(int d) { return constant(Mat::Identity(d, d)); }

Metric Metric::constant(const Mat& g) {
  const int d = static_cast<int>(g.rows());
  std::vector<std::string> e;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) e.push_back(num(0.5 * (g(i, j) + g(j, i))));
  return Metric(d, e);
}

Metric Metric::diagonal(std::vector<std::string> diag) {
  const int d = static_cast<int>(diag.size());
  std::vector<std::string> e;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) e.push_back(i == j ? diag[i] : "0");
  return Metric(d, e);
}

Metric Metric::conformal(int d, const std::string& lambda) {
  return diagonal(std::vector<std::string>(d, "exp(2*(" + lambda + "))"));
}

const std::string& Metric::entry(int i, int j) const { return src_[i * d_ + j]; }

bool Metric::is_constant() const {
  for (const auto& e : expr_)
    if (!e.is_constant()) return false;
  return true;
}

Mat Metric::value(const Vec& x) const {
  Mat g(d_, d_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) g(i, j) = expr_[i * d_ + j](x);
  spd_factor(g, "metric");
  return g;
}

std::vector<Jet3> Metric::jets(const Vec& x, int order) const {
  std::vector<Jet3> out;
  out.reserve(expr_.size());
  for (const auto& e : expr_) out.push_back(e.jet(x, order));
  return out;
}

// ---------------------------------------------------------------- lagrangian

const char* kind_name(LagrangianKind k) {
  switch (k) {
    case LagrangianKind::euclidean: return "euclidean";
    case LagrangianKind::riemannian: return "riemannian";
    case LagrangianKind::mechanical: return "mechanical";
    case LagrangianKind::perturbed: return "perturbed";
    default: return "custom";
  }
}

namespace {

std::string kinetic(const Metric& g) {
  const int d = g.dim();
  std::string s = "0.5*(0";
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const std::string& e = g.entry(i, j);
      if (e == "0") continue;
      const std::string vi = "v" + std::to_string(i + 1), vj = "v" + std::to_string(j + 1);
      s += " + " + std::string(i == j ? "" : "2*") + vi + "*" + vj + "*(" + e + ")";
    }
  return s + ")";
}

}  // namespace

LagrangianModel LagrangianModel::build(LagrangianKind kind, int d, const std::string& src) {
  if (d < 1) throw ContractViolation("dimension must be positive");
  LagrangianModel m;
  m.d_ = d;
  m.kind_ = kind;
  m.expr_ = Expression::parse(src, VariableSet::phase_space(d));
  return m;
}

LagrangianModel LagrangianModel::euclidean(int d) {
  LagrangianModel m = build(LagrangianKind::euclidean, d, "0.5*norm2(v)");
  m.metric_ = Metric::identity(d);
  return m;
}

LagrangianModel LagrangianModel::riemannian(const Metric& g) {
  LagrangianModel m = build(LagrangianKind::riemannian, g.dim(), kinetic(g));
  m.metric_ = g;
  return m;
}

LagrangianModel LagrangianModel::mechanical(const Metric& g, const std::string& potential) {
  Expression::parse(potential, VariableSet::positions(g.dim()));
  LagrangianModel m = build(LagrangianKind::mechanical, g.dim(), kinetic(g) + " + (" + potential + ")");
  m.metric_ = g;
  m.potential_ = potential;
  return m;
}

LagrangianModel LagrangianModel::perturbed(const Metric& g, const std::string& phi) {
  // rejects any x dependence in phi
  Expression::parse(phi, VariableSet::velocities(g.dim()));
  LagrangianModel m = build(LagrangianKind::perturbed, g.dim(), kinetic(g) + " + (" + phi + ")");
  m.metric_ = g;
  m.perturbation_ = phi;
  return m;
}

LagrangianModel LagrangianModel::custom(int d, const std::string& expression) {
  return build(LagrangianKind::custom, d, expression);
}

LagrangianModel LagrangianModel::linear_change(const Mat& p) const {
  if (p.rows() != d_ || p.cols() != d_) throw ContractViolation("linear_change: P must be d x d");
  Eigen::FullPivLU<Mat> lu(p);
  if (!lu.isInvertible()) throw ContractViolation("linear_change: P is singular");
  const Mat pinv = lu.inverse();
  Mat q = Mat::Zero(2 * d_, 2 * d_);
  q.topLeftCorner(d_, d_) = pinv;
  q.bottomRightCorner(d_, d_) = pinv;
  LagrangianModel m = *this;
  m.kind_ = LagrangianKind::custom;
  m.metric_.reset();
  m.q_ = transformed() ? Mat(q_ * q) : q;
  return m;
}

double LagrangianModel::value(const Vec& x, const Vec& v) const {
  Vec z(2 * d_);
  z << x, v;
  if (transformed()) z = q_ * z;
  return expr_(z);
}

Jet3 LagrangianModel::jet(const Vec& x, const Vec& v, int order) const {
  if (x.size() != d_ || v.size() != d_) throw ContractViolation("phase point has the wrong dimension");
  Vec z(2 * d_);
  z << x, v;
  if (!transformed()) return expr_.jet(z, order);
  return expr_.jet(q_ * z, order).pullback(q_);
}

DerivativeBundle LagrangianModel::derivatives(const Vec& x, const Vec& v, int order) const {
  const Jet3 j = jet(x, v, std::max(order, 2));
  const int d = d_;
  DerivativeBundle b;
  b.x = x;
  b.v = v;
  b.value = j.value();
  b.gx.resize(d);
  b.gv.resize(d);
  b.hxx.resize(d, d);
  b.hxv.resize(d, d);
  b.hvv.resize(d, d);
  for (int i = 0; i < d; ++i) {
    b.gx(i) = j.grad(i);
    b.gv(i) = j.grad(d + i);
    for (int k = 0; k < d; ++k) {
      b.hxx(i, k) = j.hess(i, k);
      b.hxv(i, k) = j.hess(i, d + k);
      b.hvv(i, k) = j.hess(d + i, d + k);
    }
  }
  b.hvv_llt = Eigen::LLT<Mat>(b.hvv);
  bool pd = b.hvv_llt.info() == Eigen::Success && b.hvv.allFinite();
  for (int i = 0; pd && i < d; ++i) pd = b.hvv_llt.matrixLLT()(i, i) > 0.0;
  if (!pd)
    throw TonelliViolation("velocity Hessian is not positive definite at x = " + point_str(x) +
                           ", v = " + point_str(v));
  if (order >= 3) {
    b.has_third = true;
    b.tvvv = Tensor3(d);
    b.txvv = Tensor3(d);
    b.txxv = Tensor3(d);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          b.tvvv(i, k, l) = j.third(d + i, d + k, d + l);
          b.txvv(i, k, l) = j.third(i, d + k, d + l);
          b.txxv(i, k, l) = j.third(i, k, d + l);
        }
  }
  return b;
}

double LagrangianModel::energy(const Vec& x, const Vec& v) const {
  const Jet3 j = jet(x, v, 1);
  double e = -j.value();
  for (int i = 0; i < d_; ++i) e += v(i) * j.grad(d_ + i);
  return e;
}

// ---------------------------------------------------------------- legendre

LegendreResult legendre(const LagrangianModel& L, const Vec& x, const Vec& p, const LegendreOptions& opt) {
  const int d = L.dim();
  const double tol = opt.tol * std::max(1.0, p.norm());
  Vec v = L.derivatives(x, Vec::Zero(d), 2).hvv_solve(p);
  // Newton on the convex objective phi(v) = L(x,v) - <p,v>
  DerivativeBundle b = L.derivatives(x, v, 2);
  Vec F = b.gv - p;
  double phi = b.value - p.dot(v);
  LegendreResult r;
  for (int it = 0; it <= opt.max_iter; ++it) {
    r.iterations = it;
    if (F.norm() <= tol) {
      r.v = v;
      r.residual = F.norm();
      r.H = p.dot(v) - b.value;
      return r;
    }
    if (it == opt.max_iter) break;
    const Vec step = -b.hvv_solve(F);
    const double slope = F.dot(step);
    double t = 1.0;
    Vec vn;
    DerivativeBundle bn;
    for (int ls = 0; ls < 40; ++ls) {
      vn = v + t * step;
      bool ok = true;
      try {
        bn = L.derivatives(x, vn, 2);
      } catch (const Error&) {
        ok = false;
      }
      if (ok) {
        const double phin = bn.value - p.dot(vn);
        // near convergence phi stalls at rounding level; accept any gradient decrease
        if (phin <= phi + 1e-4 * t * slope || (bn.gv - p).norm() < F.norm()) break;
      }
      t *= 0.5;
    }
    v = vn;
    b = bn;
    F = b.gv - p;
    phi = b.value - p.dot(v);
  }
  std::ostringstream os;
  os.precision(6);
  os << "Newton did not converge after " << opt.max_iter << " iterations (residual " << F.norm() << ")";
  throw LegendreFailure(os.str(), F.norm());
}

Vec hamiltonian_grad(const LagrangianModel& L, const Vec& x, const Vec& p, const LegendreOptions& opt) {
  return legendre(L, x, p, opt).v;
}

double hamiltonian(const LagrangianModel& L, const Vec& x, const Vec& p) { return legendre(L, x, p).H; }

// ---------------------------------------------------------------- tonelli probe

std::vector<Vec> sphere_directions(int d, int count) {
  std::vector<Vec> out;
  if (d == 1) {
    out.push_back(Vec::Constant(1, 1.0));
    out.push_back(Vec::Constant(1, -1.0));
    return out;
  }
  if (d == 2) {
    for (int k = 0; k < count; ++k) {
      const double a = 2.0 * M_PI * k / count;
      Vec u(2);
      u << std::cos(a), std::sin(a);
      out.push_back(u);
    }
    return out;
  }
  // Fibonacci lattice on S^2, then a deterministic quasi-random fill for d > 3
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    Vec u = Vec::Zero(d);
    const double z = 1.0 - 2.0 * (k + 0.5) / count;
    const double r = std::sqrt(1.0 - z * z);
    u(0) = r * std::cos(golden * k);
    u(1) = r * std::sin(golden * k);
    u(2) = z;
    for (int i = 3; i < d; ++i) u(i) = std::sin(1.7 * k + 0.9 * i);
    out.push_back(u.normalized());
  }
  for (int i = 0; i < d; ++i) {
    out.push_back(Vec::Unit(d, i));
    out.push_back(-Vec::Unit(d, i));
  }
  return out;
}

TonelliProbe tonelli_probe(const LagrangianModel& L, const std::vector<Vec>& xs, const std::vector<double>& radii) {
  for (size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw ContractViolation("tonelli_probe: radii must be positive");
    if (i && !(radii[i] > radii[i - 1])) throw ContractViolation("tonelli_probe: radii must increase");
  }
  const int d = L.dim();
  const auto dirs = sphere_directions(d, d == 2 ? 64 : 200);
  TonelliProbe r;
  r.radii = radii;
  r.min_hvv_eig = std::numeric_limits<double>::infinity();
  for (double rad : radii) {
    double ratio = std::numeric_limits<double>::infinity();
    for (const Vec& x : xs)
      for (const Vec& u : dirs) {
        const Vec v = rad * u;
        ratio = std::min(ratio, L.value(x, v) / rad);
        const Jet3 j = L.jet(x, v, 2);
        Mat hvv(d, d);
        for (int a = 0; a < d; ++a)
          for (int c = 0; c < d; ++c) hvv(a, c) = j.hess(d + a, d + c);
        r.min_hvv_eig = std::min(r.min_hvv_eig, min_eig(hvv));
      }
    r.ratios.push_back(ratio);
  }
  for (size_t i = 1; i < r.ratios.size(); ++i)
    if (!(r.ratios[i] > r.ratios[i - 1])) r.superlinear_warning = true;
  return r;
}

}  // namespace tonelli
