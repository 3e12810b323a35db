#pragma once

#include <string>
#include <vector>

#include "tonelli/lagrangian.hpp"

namespace tonelli {

/// Smooth scalar function u(x) on R^d, optionally precomposed with a linear map.
class Potential {
 public:
  Potential() = default;
  Potential(int d, const std::string& expression);

  int dim() const { return d_; }
  const std::string& expression() const { return expr_.source(); }
  double value(const Vec& x) const;
  Jet3 jet(const Vec& x, int order = 3) const;
  /// u'(y) = u(P^-1 y).
  Potential linear_change(const Mat& p) const;

 private:
  int d_ = 0;
  Expression expr_;
  Mat q_;  ///< x = q_ y, empty if none
};

/// Value, Jacobian and second derivatives of a vector field at one point.
struct FieldJet {
  Vec value;
  Mat jac;                ///< jac(i,j) = d xi_i / d x_j
  std::vector<Mat> hess;  ///< hess[i](j,k) = d2 xi_i / d x_j d x_k; empty for order 1
};

/// A vector field on R^d: either explicit component expressions, or gradient type,
/// xi(x) = dH/dp(x, grad u(x)) for a potential u and Lagrangian L.
class VectorField {
 public:
  static VectorField explicit_field(int d, const std::vector<std::string>& components);
  /// xi(x) = M x + c.
  static VectorField affine(const Mat& m, const Vec& c);
  static VectorField linear(const Mat& m) { return affine(m, Vec::Zero(m.rows())); }
  static VectorField gradient_type(const Potential& u, const LagrangianModel& L);

  int dim() const { return d_; }
  bool is_gradient() const { return gradient_; }
  const Potential& potential() const { return u_; }
  const LagrangianModel& lagrangian() const { return L_; }
  const std::string& label() const { return label_; }
  VectorField& with_label(std::string s) {
    label_ = std::move(s);
    return *this;
  }

  Vec value(const Vec& x) const;
  /// order 1: value and Jacobian; order 2 adds second derivatives.
  FieldJet jet(const Vec& x, int order = 2) const;

  /// The field in coordinates y = P x: xi'(y) = P xi(P^-1 y). A gradient-type field
  /// stays gradient type for the transformed Lagrangian and potential.
  VectorField linear_change(const Mat& p) const;

 private:
  int d_ = 0;
  bool gradient_ = false;
  std::vector<Expression> comps_;
  Mat p_, pinv_;  ///< explicit fields only; empty if untransformed
  Potential u_;
  LagrangianModel L_;
  std::string label_;
};

}  // namespace tonelli
