#pragma once

#include <array>
#include <optional>
#include <string>

#include "tonelli/field.hpp"
#include "tonelli/lagrangian.hpp"

namespace tonelli {

struct JacobiMatrices {
  Mat A, B;
};

/// A and B of the Jacobi equation J'' + A J' + B J = 0 at the bundle's (x, v), with the
/// time derivatives along the Euler-Lagrange curve expanded by the chain rule. `accel`
/// is the Euler-Lagrange acceleration at the same point. Requires third derivatives.
JacobiMatrices jacobi_matrices(const DerivativeBundle& b, const Vec& accel);
JacobiMatrices jacobi_matrices(const DerivativeBundle& b);

Mat matrix_A(const LagrangianModel& L, const Vec& x, const Vec& v);
Mat matrix_B(const LagrangianModel& L, const Vec& x, const Vec& v);

/// Gamma_L(xi)(x) = a(x, xi(x)) - (grad xi) xi.
Vec gamma_L(const LagrangianModel& L, const VectorField& field, const Vec& x);

/// tr(M^2 + A M + B) with M = grad xi(x) and A, B at (x, xi(x)).
double curvature_def(const LagrangianModel& L, const VectorField& field, const Vec& x);

/// -div Gamma_L(xi) - <xi, grad div xi>, differentiating Gamma_L directly.
double curvature_divergence(const LagrangianModel& L, const VectorField& field, const Vec& x);

/// Groups of the index expansion of the curvature.
///
/// I..VIII are the eight groups exactly as printed. The printed expansion differentiates
/// the L-blocks along the field at a fixed point and contracts the mixed block on the
/// wrong side; the six correction groups restore the derivative along the
/// Euler-Lagrange curve:
///   XA_x  = L^{im} d3L/dx_k dv_m dv_j xi_k d_i xi_j
///   XA_v  = L^{im} d3L/dv_m dv_j dv_k (xi . grad xi)_k d_i xi_j        (= -II)
///   XA_t  = -L^{im} d3L/dv_m dv_j dv_k [L^-1 (Lvx - Lxv) xi]_k d_i xi_j
///   XB_x  = L^{ij} d3L/dx_k dx_i dv_j xi_k
///   XB_v  = L^{ij} d3L/dx_i dv_j dv_k (xi . grad xi)_k                 (= -V)
///   XB_t  = -L^{ij} d3L/dx_i dv_j dv_k [L^-1 (Lvx - Lxv) xi]_k
/// `I_general` = tr(M^2 + L^-1 (Lvx - Lxv) M) replaces I for fields that are not of
/// gradient type; the two agree for gradient-type fields.
struct IndexTerms {
  static constexpr int kCount = 14;
  static const std::array<const char*, kCount>& names();

  std::array<double, kCount> g{};  ///< I, II, ..., VIII, XA_x, XA_v, XA_t, XB_x, XB_v, XB_t
  double I_general = 0.0;

  double& operator[](int i) { return g[i]; }
  double operator[](int i) const { return g[i]; }
  /// Sum of the eight printed groups.
  double printed() const;
  /// All fourteen groups, using I (gradient-type fields).
  double total() const;
  /// All fourteen groups with I replaced by I_general (any field).
  double total_general() const;
};

/// Groups for any field; I is meaningful only for gradient-type fields.
IndexTerms index_groups(const LagrangianModel& L, const VectorField& field, const Vec& x);

struct IndexedCurvature {
  double value = 0.0;    ///< corrected expansion
  double printed = 0.0;  ///< eight printed groups only
  IndexTerms terms;
};

/// Index formula for xi = dH/dp(x, grad u). Throws ContractViolation for explicit fields.
IndexedCurvature curvature_indexed(const LagrangianModel& L, const Potential& u, const Vec& x);
IndexedCurvature curvature_indexed(const LagrangianModel& L, const VectorField& field, const Vec& x);

/// |div V'(0,x) + <xi, grad div xi> + tr(M^2 + A M + B)| with V the Euler-Lagrange
/// extension of the field, div V' estimated by a central difference of step h.
double bochner_residual(const LagrangianModel& L, const VectorField& field, const Vec& x, double h);

/// Bakry-Emery tensors of a metric with Lebesgue reference measure: Ric + Hess(1/2 log det g),
/// with the Hessian taken covariantly and as plain second partials.
struct BakryEmeryTensor {
  Mat ricci;
  Mat hess_cov, hess_euc;
  Mat covariant() const { return ricci + hess_cov; }
  Mat euclidean() const { return ricci + hess_euc; }
};

BakryEmeryTensor bakry_emery_tensor(const Metric& g, const Vec& x);

struct BakryEmeryValue {
  double covariant = 0.0;
  double euclidean = 0.0;
};

BakryEmeryValue bakry_emery(const Metric& g, const Vec& x, const Vec& xi);

/// Christoffel symbols Gamma^k_ij stored as (k, i, j).
Tensor3 christoffel(const Metric& g, const Vec& x);

/// Covariant derivative of a field: N(i,j) = d_j xi_i + Gamma^i_jk xi_k.
Mat covariant_jacobian(const Metric& g, const Vec& x, const Vec& xi, const Mat& jac);

/// Both sides of K(xi) = |grad xi|^2 + BE(xi, xi) for xi = g^-1 grad u, under the
/// four readings of the norm (printed partials or covariant) and Hessian convention.
struct RiemannianIdentity {
  double k_def = 0.0;
  double hs_printed = 0.0;    ///< g^{ik} d_k xi_j g_jl d_i xi_l
  double hs_covariant = 0.0;  ///< same contraction of the covariant derivative
  double be_covariant = 0.0;
  double be_euclidean = 0.0;
  /// residual for (printed|covariant HS) x (euclidean|covariant Hessian)
  double residual(bool covariant_hs, bool covariant_hessian) const;
  /// Residual of the calibrated convention (covariant HS, covariant Hessian).
  double residual() const { return residual(true, true); }
};

RiemannianIdentity riemannian_identity(const Metric& g, const Potential& u, const Vec& x);

struct CurvatureReport {
  Vec x;
  std::string field_id;
  double k_def = 0.0;
  double k_div = 0.0;
  std::optional<double> k_indexed;
  std::optional<double> k_indexed_printed;
  std::optional<IndexTerms> terms;
  double residual_div = 0.0;
  std::optional<double> residual_indexed;
};

CurvatureReport curvature_report(const LagrangianModel& L, const VectorField& field, const Vec& x);

}  // namespace tonelli
