#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tonelli/expression.hpp"
#include "tonelli/linalg.hpp"

namespace tonelli {

/// Smooth symmetric positive-definite matrix field x -> g(x) on R^d, one expression per
/// upper-triangular entry.
class Metric {
 public:
  Metric() = default;
  /// `entries` is row-major upper triangle: g11, g12, ..., g1d, g22, ...
  Metric(int d, std::vector<std::string> entries);

  static Metric identity(int d);
  static Metric constant(const Mat& g);
  static Metric diagonal(std::vector<std::string> diag);
  /// g = exp(2 lambda) I.
  static Metric conformal(int d, const std::string& lambda);

  int dim() const { return d_; }
  const std::string& entry(int i, int j) const;
  bool is_constant() const;

  /// g(x); throws TonelliViolation if not positive definite.
  Mat value(const Vec& x) const;
  /// Jets of g_ij in x, indexed [i*d + j].
  std::vector<Jet3> jets(const Vec& x, int order = 3) const;

 private:
  int d_ = 0;
  std::vector<std::string> src_;   // full d*d, mirrored
  std::vector<Expression> expr_;   // full d*d, mirrored
};

enum class LagrangianKind { euclidean, riemannian, mechanical, perturbed, custom };

const char* kind_name(LagrangianKind k);

/// Everything the curvature formulas need at one phase-space point.
struct DerivativeBundle {
  Vec x, v;
  double value = 0.0;
  Vec gx, gv;
  Mat hxx, hxv, hvv;  ///< hxv(i,j) = d2L/dx_i dv_j
  Tensor3 tvvv;       ///< d3L/dv_i dv_j dv_k
  Tensor3 txvv;       ///< d3L/dx_i dv_j dv_k
  Tensor3 txxv;       ///< d3L/dx_i dx_j dv_k
  bool has_third = false;
  Eigen::LLT<Mat> hvv_llt;

  Mat hvx() const { return hxv.transpose(); }
  Vec hvv_solve(const Vec& b) const { return hvv_llt.solve(b); }
  Mat hvv_solve(const Mat& b) const { return hvv_llt.solve(b); }
  Mat hvv_inverse() const { return hvv_llt.solve(Mat::Identity(v.size(), v.size())); }
};

/// A Tonelli Lagrangian L(x, v) on R^d.
///
/// Every kind is compiled to a single phase-space expression over x1..xd, v1..vd;
/// the kind and its parts are kept for reporting and for the metric-based routes.
class LagrangianModel {
 public:
  static LagrangianModel euclidean(int d);
  static LagrangianModel riemannian(const Metric& g);
  /// L = 1/2 <v, g v> + U(x).
  static LagrangianModel mechanical(const Metric& g, const std::string& potential);
  /// L = 1/2 <v, g v> + phi(v).
  static LagrangianModel perturbed(const Metric& g, const std::string& phi);
  static LagrangianModel custom(int d, const std::string& expression);

  /// The same Lagrangian in coordinates y = P x, w = P v: L'(y, w) = L(P^-1 y, P^-1 w).
  LagrangianModel linear_change(const Mat& p) const;

  int dim() const { return d_; }
  LagrangianKind kind() const { return kind_; }
  const std::optional<Metric>& metric() const { return metric_; }
  const std::string& potential() const { return potential_; }
  const std::string& perturbation() const { return perturbation_; }
  const std::string& expression() const { return expr_.source(); }
  /// True after linear_change.
  bool transformed() const { return q_.size() > 0; }

  double value(const Vec& x, const Vec& v) const;
  Jet3 jet(const Vec& x, const Vec& v, int order = 3) const;
  /// Throws TonelliViolation if hvv is not positive definite at (x, v).
  DerivativeBundle derivatives(const Vec& x, const Vec& v, int order = 3) const;
  /// Energy H(x, dL/dv(x, v)) = <v, dL/dv> - L.
  double energy(const Vec& x, const Vec& v) const;

 private:
  static LagrangianModel build(LagrangianKind kind, int d, const std::string& src);

  int d_ = 0;
  LagrangianKind kind_ = LagrangianKind::custom;
  std::optional<Metric> metric_;
  std::string potential_, perturbation_;
  Expression expr_;
  Mat q_;  ///< 2d x 2d map from transformed to original phase coordinates, empty if none
};

struct LegendreResult {
  Vec v;            ///< maximiser of <p,v> - L(x,v), equal to dH/dp
  double H = 0.0;
  double residual = 0.0;  ///< |dL/dv(x,v) - p|
  int iterations = 0;
};

struct LegendreOptions {
  double tol = 1e-10;  ///< scaled by max(1, |p|)
  int max_iter = 60;
};

/// Numerical Legendre transform by damped Newton. Throws LegendreFailure.
LegendreResult legendre(const LagrangianModel& L, const Vec& x, const Vec& p, const LegendreOptions& opt = {});
Vec hamiltonian_grad(const LagrangianModel& L, const Vec& x, const Vec& p, const LegendreOptions& opt = {});
double hamiltonian(const LagrangianModel& L, const Vec& x, const Vec& p);

struct TonelliProbe {
  double min_hvv_eig = 0.0;
  std::vector<double> radii;
  std::vector<double> ratios;  ///< min over |v| = r and the sample of L(x, v) / r
  bool superlinear_warning = false;  ///< ratios failed to increase
};

/// Heuristic check of convexity and superlinear growth; never proves either.
TonelliProbe tonelli_probe(const LagrangianModel& L, const std::vector<Vec>& xs, const std::vector<double>& radii);

/// Unit vectors used to sample spheres in R^d (deterministic).
std::vector<Vec> sphere_directions(int d, int count);

}  // namespace tonelli
