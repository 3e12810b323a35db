#pragma once

#include <vector>

#include "tonelli/linalg.hpp"

namespace tonelli {

/// Truncated Taylor expansion of a scalar function of n variables through order 3.
///
/// Holds the value, gradient, Hessian and the full third-derivative tensor. Every
/// arithmetic result is written symmetrically: entries are computed once for
/// i <= j <= k and mirrored, so the symmetry invariants hold bit-for-bit.
///
/// `order` < 3 drops the higher coefficients (they read as zero), which is what
/// the flow integrators use when only second derivatives are needed.
class Jet3 {
 public:
  Jet3() = default;
  Jet3(int n, int order = 3);

  static Jet3 constant(int n, double c, int order = 3);
  /// The coordinate function x_i evaluated at `value`.
  static Jet3 variable(int n, int i, double value, int order = 3);

  int size() const { return n_; }
  int order() const { return order_; }
  /// 0 for constants, 1 for affine functions, 2 otherwise. Only used to skip work.
  int degree() const { return degree_; }

  double value() const { return data_[0]; }
  double grad(int i) const { return data_[1 + i]; }
  double hess(int i, int j) const { return order_ >= 2 ? data_[1 + n_ + i * n_ + j] : 0.0; }
  double third(int i, int j, int k) const {
    return order_ >= 3 ? data_[1 + n_ + n_ * n_ + (i * n_ + j) * n_ + k] : 0.0;
  }

  Vec gradient() const;
  Mat hessian() const;
  Tensor3 third_tensor() const;

  /// Exact symmetry check of hess and third.
  bool symmetric() const;

  /// Coefficients of f(Q y) in the variables y, given the jet of f at x = Q y.
  Jet3 pullback(const Mat& q) const;

  // In-place kernels used by the expression evaluator; `out` may alias neither input.
  void reset(int n, int order);
  void set_constant(double c);
  void set_variable(int i, double value);
  static void add(Jet3& out, const Jet3& a, const Jet3& b, double sb = 1.0);
  static void scale(Jet3& out, const Jet3& a, double s);
  static void mul(Jet3& out, const Jet3& a, const Jet3& b);
  /// out = f(a) where f0..f3 are f and its derivatives at a.value().
  static void compose(Jet3& out, const Jet3& a, double f0, double f1, double f2, double f3);

  friend Jet3 operator+(const Jet3& a, const Jet3& b);
  friend Jet3 operator-(const Jet3& a, const Jet3& b);
  friend Jet3 operator*(const Jet3& a, const Jet3& b);
  friend Jet3 operator/(const Jet3& a, const Jet3& b);
  friend Jet3 operator*(double s, const Jet3& a);
  friend Jet3 operator+(const Jet3& a, double c);
  friend Jet3 operator-(const Jet3& a);

 private:
  double* g() { return data_.data() + 1; }
  double* h() { return data_.data() + 1 + n_; }
  double* t() { return data_.data() + 1 + n_ + n_ * n_; }
  const double* g() const { return data_.data() + 1; }
  const double* h() const { return data_.data() + 1 + n_; }
  const double* t() const { return data_.data() + 1 + n_ + n_ * n_; }
  void mirror();

  int n_ = 0;
  int order_ = 3;
  int degree_ = 0;
  std::vector<double> data_;
};

Jet3 exp(const Jet3& a);
Jet3 log(const Jet3& a);
Jet3 sin(const Jet3& a);
Jet3 cos(const Jet3& a);
Jet3 sqrt(const Jet3& a);
Jet3 pow(const Jet3& a, double p);

/// Derivatives f, f', f'', f''' of the supported unary primitives at x.
/// Throws DomainError outside the domain.
void exp_derivs(double x, double f[4]);
void log_derivs(double x, double f[4]);
void sin_derivs(double x, double f[4]);
void cos_derivs(double x, double f[4]);
void sqrt_derivs(double x, double f[4]);
void pow_derivs(double x, double p, double f[4]);

}  // namespace tonelli
