#include "tonelli/curvature.hpp"

#include <cmath>

#include "tonelli/error.hpp"
#include "tonelli/flow.hpp"

namespace tonelli {

JacobiMatrices jacobi_matrices(const DerivativeBundle& b, const Vec& a) {
  if (!b.has_third) throw ContractViolation("Jacobi matrices need third derivatives of L");
  const int d = static_cast<int>(b.x.size());
  Mat dH = Mat::Zero(d, d), dLvx = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double h = 0.0, c = 0.0;
      for (int k = 0; k < d; ++k) {
        h += b.txvv(k, i, j) * b.v(k) + b.tvvv(k, i, j) * a(k);
        c += b.txxv(k, j, i) * b.v(k) + b.txvv(j, i, k) * a(k);
      }
      dH(i, j) = h;
      dLvx(i, j) = c;
    }
  JacobiMatrices m;
  m.A = b.hvv_solve(Mat(dH + b.hxv.transpose() - b.hxv));
  m.B = b.hvv_solve(Mat(dLvx - b.hxx));
  return m;
}

JacobiMatrices jacobi_matrices(const DerivativeBundle& b) { return jacobi_matrices(b, el_acceleration(b)); }

Mat matrix_A(const LagrangianModel& L, const Vec& x, const Vec& v) {
  return jacobi_matrices(L.derivatives(x, v, 3)).A;
}

Mat matrix_B(const LagrangianModel& L, const Vec& x, const Vec& v) {
  return jacobi_matrices(L.derivatives(x, v, 3)).B;
}

Vec gamma_L(const LagrangianModel& L, const VectorField& field, const Vec& x) {
  const FieldJet f = field.jet(x, 1);
  return el_acceleration(L.derivatives(x, f.value, 2)) - f.jac * f.value;
}

double curvature_def(const LagrangianModel& L, const VectorField& field, const Vec& x) {
  const FieldJet f = field.jet(x, 1);
  const JacobiMatrices m = jacobi_matrices(L.derivatives(x, f.value, 3));
  return (f.jac * f.jac + m.A * f.jac + m.B).trace();
}

double curvature_divergence(const LagrangianModel& L, const VectorField& field, const Vec& x) {
  const int d = field.dim();
  const FieldJet f = field.jet(x, 2);
  const Vec& xi = f.value;
  const Mat& M = f.jac;
  const DerivativeBundle b = L.derivatives(x, xi, 3);
  const Vec a = el_acceleration(b);

  // a = H^-1 r with r = dL/dx - Lvx v, so da/dz = H^-1 (dr/dz - (dH/dz) a)
  Mat da_dx(d, d), da_dv(d, d);
  Vec col(d);
  for (int k = 0; k < d; ++k) {
    for (int i = 0; i < d; ++i) {
      double r = b.hxx(i, k);
      for (int j = 0; j < d; ++j) r -= b.txxv(k, j, i) * xi(j) + b.txvv(k, i, j) * a(j);
      col(i) = r;
    }
    da_dx.col(k) = b.hvv_solve(col);
    for (int i = 0; i < d; ++i) {
      double r = b.hxv(i, k) - b.hxv(k, i);
      for (int j = 0; j < d; ++j) r -= b.txvv(j, i, k) * xi(j) + b.tvvv(k, i, j) * a(j);
      col(i) = r;
    }
    da_dv.col(k) = b.hvv_solve(col);
  }
  const double div_a = da_dx.trace() + (da_dv * M).trace();

  double div_transport = (M * M).trace(), xi_graddiv = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      div_transport += f.hess[i](i, j) * xi(j);
      xi_graddiv += f.hess[i](i, j) * xi(j);
    }
  return -(div_a - div_transport) - xi_graddiv;
}

const std::array<const char*, IndexTerms::kCount>& IndexTerms::names() {
  static const std::array<const char*, kCount> n = {"I",    "II",   "III",  "IV",   "V",    "VI",   "VII",
                                                    "VIII", "XA_x", "XA_v", "XA_t", "XB_x", "XB_v", "XB_t"};
  return n;
}

double IndexTerms::printed() const {
  double s = 0.0;
  for (int i = 0; i < 8; ++i) s += g[i];
  return s;
}

double IndexTerms::total() const {
  double s = 0.0;
  for (double v : g) s += v;
  return s;
}

double IndexTerms::total_general() const { return total() - g[0] + I_general; }

IndexTerms index_groups(const LagrangianModel& L, const VectorField& field, const Vec& x) {
  const int d = field.dim();
  const FieldJet f = field.jet(x, 1);
  const Vec& xi = f.value;
  const Mat& M = f.jac;
  const DerivativeBundle b = L.derivatives(x, xi, 3);
  const Mat& H = b.hvv;
  const Mat Hi = b.hvv_inverse();

  const Vec w = M * xi;  // (xi . grad) xi
  const Vec agx = b.hvv_solve(b.gx);
  const Vec axv = b.hvv_solve(Vec(b.hxv * xi));
  const Vec at = b.hvv_solve(Vec((b.hxv.transpose() - b.hxv) * xi));

  // C_k = L^{im} d3L/dv_m dv_j dv_k d_i xi_j,  D_k = L^{ij} d3L/dx_i dv_j dv_k
  Vec C = Vec::Zero(d), D = Vec::Zero(d);
  double xa_x = 0.0, xb_x = 0.0;
  for (int i = 0; i < d; ++i)
    for (int m = 0; m < d; ++m) {
      const double him = Hi(i, m);
      for (int k = 0; k < d; ++k) {
        D(k) += him * b.txvv(i, m, k);
        xb_x += him * b.txxv(k, i, m) * xi(k);
        for (int j = 0; j < d; ++j) {
          C(k) += him * b.tvvv(m, j, k) * M(j, i);
          xa_x += him * b.txvv(k, m, j) * xi(k) * M(j, i);
        }
      }
    }

  IndexTerms t;
  t[0] = (Hi * M.transpose() * H * M).trace();
  t[1] = -C.dot(w);
  t[2] = C.dot(agx);
  t[3] = -C.dot(axv);
  t[4] = -D.dot(w);
  t[5] = D.dot(agx);
  t[6] = -D.dot(axv);
  t[7] = -(Hi * b.hxx).trace();
  t[8] = xa_x;
  t[9] = C.dot(w);
  t[10] = -C.dot(at);
  t[11] = xb_x;
  t[12] = D.dot(w);
  t[13] = -D.dot(at);
  t.I_general = (M * M + Hi * (b.hxv.transpose() - b.hxv) * M).trace();
  return t;
}

IndexedCurvature curvature_indexed(const LagrangianModel& L, const VectorField& field, const Vec& x) {
  if (!field.is_gradient())
    throw ContractViolation("the index formula applies to gradient-type fields only");
  IndexedCurvature r;
  r.terms = index_groups(L, field, x);
  r.value = r.terms.total();
  r.printed = r.terms.printed();
  return r;
}

IndexedCurvature curvature_indexed(const LagrangianModel& L, const Potential& u, const Vec& x) {
  return curvature_indexed(L, VectorField::gradient_type(u, L), x);
}

namespace {

/// div V(t, x) where V(t, sigma(t, y)) = d/dt sigma(t, y) and sigma(0, y) = y.
double flow_divergence(const LagrangianModel& L, const VectorField& field, const Vec& x, double t) {
  const int d = field.dim();
  constexpr int kSub = 8;
  Vec y = x - t * field.value(x);
  FlowOptions opt;
  opt.jacobian = true;
  opt.J0 = Mat::Identity(d, d);
  for (int it = 0;; ++it) {
    const FieldJet f = field.jet(y, 1);
    opt.Jdot0 = f.jac;
    const Trajectory tr = integrate(L, y, f.value, t, kSub, opt);
    const Vec r = tr.x.back() - x;
    if (r.norm() <= 1e-15 * (1.0 + x.norm()) || it == 12) {
      if (r.norm() > 1e-10 * (1.0 + x.norm())) break;
      return (tr.Jdot.back() * tr.J.back().inverse()).trace();
    }
    y -= tr.J.back().partialPivLu().solve(r);
  }
  throw DomainError("flow inversion did not converge");
}

}  // namespace

double bochner_residual(const LagrangianModel& L, const VectorField& field, const Vec& x, double h) {
  if (!(h > 0.0)) throw ContractViolation("bochner_residual needs h > 0");
  const int d = field.dim();
  const FieldJet f = field.jet(x, 2);
  double xi_graddiv = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) xi_graddiv += f.hess[i](i, j) * f.value(j);
  const double ddiv = (flow_divergence(L, field, x, h) - flow_divergence(L, field, x, -h)) / (2 * h);
  return std::abs(ddiv + xi_graddiv + curvature_def(L, field, x));
}

namespace {

struct MetricDerivs {
  Mat g, gi;
  std::vector<Mat> dg;                ///< dg[k](i,j) = d_k g_ij
  std::vector<std::vector<Mat>> ddg;  ///< ddg[k][l](i,j)
};

MetricDerivs metric_derivs(const Metric& g, const Vec& x, int order) {
  const int d = g.dim();
  const std::vector<Jet3> jets = g.jets(x, order);
  MetricDerivs m;
  m.g = g.value(x);
  m.gi = spd_factor(m.g, "metric").solve(Mat::Identity(d, d));
  m.dg.assign(d, Mat(d, d));
  if (order >= 2) m.ddg.assign(d, std::vector<Mat>(d, Mat(d, d)));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const Jet3& e = jets[i * d + j];
      for (int k = 0; k < d; ++k) {
        m.dg[k](i, j) = e.grad(k);
        if (order >= 2)
          for (int l = 0; l < d; ++l) m.ddg[k][l](i, j) = e.hess(k, l);
      }
    }
  return m;
}

Tensor3 christoffel_of(const MetricDerivs& m) {
  const int d = static_cast<int>(m.g.rows());
  Tensor3 G(d);
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int l = 0; l < d; ++l) s += m.gi(k, l) * (m.dg[i](j, l) + m.dg[j](i, l) - m.dg[l](i, j));
        G(k, i, j) = 0.5 * s;
      }
  return G;
}

}  // namespace

Tensor3 christoffel(const Metric& g, const Vec& x) { return christoffel_of(metric_derivs(g, x, 1)); }

BakryEmeryTensor bakry_emery_tensor(const Metric& g, const Vec& x) {
  const int d = g.dim();
  const MetricDerivs m = metric_derivs(g, x, 2);
  const Tensor3 G = christoffel_of(m);

  // dG[mu](k,i,j) = d_mu Gamma^k_ij
  std::vector<Tensor3> dG(d, Tensor3(d));
  for (int mu = 0; mu < d; ++mu) {
    const Mat dgi = -m.gi * m.dg[mu] * m.gi;
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          double s = 0.0;
          for (int l = 0; l < d; ++l) {
            const double first = 0.5 * (m.dg[i](j, l) + m.dg[j](i, l) - m.dg[l](i, j));
            const double dfirst = 0.5 * (m.ddg[mu][i](j, l) + m.ddg[mu][j](i, l) - m.ddg[mu][l](i, j));
            s += dgi(k, l) * first + m.gi(k, l) * dfirst;
          }
          dG[mu](k, i, j) = s;
        }
  }

  BakryEmeryTensor be;
  be.ricci = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double r = 0.0;
      for (int k = 0; k < d; ++k) {
        r += dG[k](k, i, j) - dG[j](k, i, k);
        for (int l = 0; l < d; ++l) r += G(k, k, l) * G(l, i, j) - G(k, j, l) * G(l, i, k);
      }
      be.ricci(i, j) = r;
    }

  // f = 1/2 log det g
  Vec df(d);
  for (int i = 0; i < d; ++i) df(i) = 0.5 * (m.gi * m.dg[i]).trace();
  be.hess_euc.resize(d, d);
  be.hess_cov.resize(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const double h = 0.5 * ((m.gi * m.ddg[i][j]).trace() - (m.gi * m.dg[j] * m.gi * m.dg[i]).trace());
      double c = h;
      for (int k = 0; k < d; ++k) c -= G(k, i, j) * df(k);
      be.hess_euc(i, j) = h;
      be.hess_cov(i, j) = c;
    }
  be.ricci = 0.5 * (be.ricci + be.ricci.transpose());
  be.hess_euc = 0.5 * (be.hess_euc + be.hess_euc.transpose());
  be.hess_cov = 0.5 * (be.hess_cov + be.hess_cov.transpose());
  return be;
}

BakryEmeryValue bakry_emery(const Metric& g, const Vec& x, const Vec& xi) {
  const BakryEmeryTensor t = bakry_emery_tensor(g, x);
  return {xi.dot(t.covariant() * xi), xi.dot(t.euclidean() * xi)};
}

Mat covariant_jacobian(const Metric& g, const Vec& x, const Vec& xi, const Mat& jac) {
  const int d = g.dim();
  const Tensor3 G = christoffel(g, x);
  Mat N = jac;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) N(i, j) += G(i, j, k) * xi(k);
  return N;
}

double RiemannianIdentity::residual(bool covariant_hs, bool covariant_hessian) const {
  return std::abs(k_def - (covariant_hs ? hs_covariant : hs_printed) -
                  (covariant_hessian ? be_covariant : be_euclidean));
}

RiemannianIdentity riemannian_identity(const Metric& g, const Potential& u, const Vec& x) {
  const LagrangianModel L = LagrangianModel::riemannian(g);
  const VectorField field = VectorField::gradient_type(u, L);
  const FieldJet f = field.jet(x, 1);
  const Mat gx = g.value(x);
  const Mat gi = spd_factor(gx, "metric").solve(Mat::Identity(g.dim(), g.dim()));
  const Mat N = covariant_jacobian(g, x, f.value, f.jac);
  RiemannianIdentity r;
  r.k_def = curvature_def(L, field, x);
  r.hs_printed = (gi * f.jac.transpose() * gx * f.jac).trace();
  r.hs_covariant = (gi * N.transpose() * gx * N).trace();
  const BakryEmeryValue be = bakry_emery(g, x, f.value);
  r.be_covariant = be.covariant;
  r.be_euclidean = be.euclidean;
  return r;
}

CurvatureReport curvature_report(const LagrangianModel& L, const VectorField& field, const Vec& x) {
  CurvatureReport r;
  r.x = x;
  r.field_id = field.label();
  r.k_def = curvature_def(L, field, x);
  r.k_div = curvature_divergence(L, field, x);
  r.residual_div = std::abs(r.k_def - r.k_div);
  if (field.is_gradient()) {
    const IndexedCurvature ic = curvature_indexed(L, field, x);
    r.k_indexed = ic.value;
    r.k_indexed_printed = ic.printed;
    r.terms = ic.terms;
    r.residual_indexed = std::abs(r.k_def - ic.value);
  }
  return r;
}

}  // namespace tonelli
