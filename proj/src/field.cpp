#include "tonelli/field.hpp"

#include "tonelli/error.hpp"

namespace tonelli {

Potential::Potential(int d, const std::string& expression)
    : d_(d), expr_(Expression::parse(expression, VariableSet::positions(d))) {}

double Potential::value(const Vec& x) const { return q_.size() ? expr_(q_ * x) : expr_(x); }

Jet3 Potential::jet(const Vec& x, int order) const {
  if (!q_.size()) return expr_.jet(x, order);
  return expr_.jet(q_ * x, order).pullback(q_);
}

Potential Potential::linear_change(const Mat& p) const {
  Potential u = *this;
  const Mat pinv = p.inverse();
  u.q_ = q_.size() ? Mat(q_ * pinv) : pinv;
  return u;
}

VectorField VectorField::explicit_field(int d, const std::vector<std::string>& components) {
  if (static_cast<int>(components.size()) != d) throw ContractViolation("explicit field needs d components");
  VectorField f;
  f.d_ = d;
  const VariableSet vars = VariableSet::positions(d);
  for (const auto& c : components) f.comps_.push_back(Expression::parse(c, vars));
  return f;
}

VectorField VectorField::affine(const Mat& m, const Vec& c) {
  const int d = static_cast<int>(m.rows());
  std::vector<std::string> comps;
  for (int i = 0; i < d; ++i) {
    std::string s = num(c(i));
    for (int j = 0; j < d; ++j)
      if (m(i, j) != 0.0) s += " + " + num(m(i, j)) + "*x" + std::to_string(j + 1);
    comps.push_back(s);
  }
  return explicit_field(d, comps);
}

VectorField VectorField::gradient_type(const Potential& u, const LagrangianModel& L) {
  if (u.dim() != L.dim()) throw ContractViolation("potential and Lagrangian dimensions differ");
  VectorField f;
  f.d_ = L.dim();
  f.gradient_ = true;
  f.u_ = u;
  f.L_ = L;
  return f;
}

Vec VectorField::value(const Vec& x) const { return jet(x, 0).value; }

FieldJet VectorField::jet(const Vec& x, int order) const {
  const int d = d_;
  if (x.size() != d) throw ContractViolation("field evaluated at a point of the wrong dimension");
  FieldJet out;
  if (!gradient_) {
    const Vec y = p_.size() ? Vec(pinv_ * x) : x;
    out.value.resize(d);
    out.jac.resize(d, d);
    std::vector<Mat> h;
    for (int i = 0; i < d; ++i) {
      const Jet3 j = comps_[i].jet(y, std::max(order, 1));
      out.value(i) = j.value();
      for (int k = 0; k < d; ++k) out.jac(i, k) = j.grad(k);
      if (order >= 2) h.push_back(j.hessian());
    }
    if (!p_.size()) {
      out.hess = std::move(h);
      return out;
    }
    out.value = p_ * out.value;
    out.jac = p_ * out.jac * pinv_;
    if (order >= 2) {
      std::vector<Mat> hy(d, Mat::Zero(d, d));
      for (int a = 0; a < d; ++a) {
        const Mat ha = pinv_.transpose() * h[a] * pinv_;
        for (int i = 0; i < d; ++i) hy[i] += p_(i, a) * ha;
      }
      out.hess = std::move(hy);
    }
    return out;
  }

  const Jet3 uj = u_.jet(x, std::min(order + 1, 3));
  const Vec p = uj.gradient();
  out.value = legendre(L_, x, p).v;
  if (order < 1) return out;
  const DerivativeBundle b = L_.derivatives(x, out.value, order >= 2 ? 3 : 2);
  // differentiate dL/dv(x, xi(x)) = grad u(x)
  const Mat M = b.hvv_solve(Mat(uj.hessian() - b.hxv.transpose()));
  out.jac = M;
  if (order < 2) return out;
  out.hess.assign(d, Mat::Zero(d, d));
  Vec rhs(d);
  for (int j = 0; j < d; ++j)
    for (int k = j; k < d; ++k) {
      for (int i = 0; i < d; ++i) {
        double r = uj.third(i, j, k) - b.txxv(j, k, i);
        for (int n = 0; n < d; ++n) r -= b.txvv(j, i, n) * M(n, k) + b.txvv(k, i, n) * M(n, j);
        for (int m = 0; m < d; ++m)
          for (int n = 0; n < d; ++n) r -= b.tvvv(i, m, n) * M(n, k) * M(m, j);
        rhs(i) = r;
      }
      const Vec col = b.hvv_solve(rhs);
      for (int m = 0; m < d; ++m) {
        out.hess[m](j, k) = col(m);
        out.hess[m](k, j) = col(m);
      }
    }
  return out;
}

VectorField VectorField::linear_change(const Mat& p) const {
  if (p.rows() != d_ || p.cols() != d_) throw ContractViolation("linear_change: P must be d x d");
  if (gradient_) {
    VectorField f = gradient_type(u_.linear_change(p), L_.linear_change(p));
    f.label_ = label_;
    return f;
  }
  VectorField f = *this;
  f.p_ = p_.size() ? Mat(p * p_) : p;
  f.pinv_ = f.p_.inverse();
  return f;
}

}  // namespace tonelli
