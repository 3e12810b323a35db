#include "tonelli/jet.hpp"

#include <cmath>
#include <sstream>

#include "tonelli/error.hpp"

namespace tonelli {

namespace {

size_t storage(int n, int order) {
  size_t s = 1 + static_cast<size_t>(n);
  if (order >= 2) s += static_cast<size_t>(n) * n;
  if (order >= 3) s += static_cast<size_t>(n) * n * n;
  return s;
}

std::string show(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

Jet3::Jet3(int n, int order) { reset(n, order); }

void Jet3::reset(int n, int order) {
  n_ = n;
  order_ = order;
  degree_ = 0;
  data_.assign(storage(n, order), 0.0);
}

Jet3 Jet3::constant(int n, double c, int order) {
  Jet3 j(n, order);
  j.data_[0] = c;
  return j;
}

Jet3 Jet3::variable(int n, int i, double value, int order) {
  Jet3 j(n, order);
  j.set_variable(i, value);
  return j;
}

void Jet3::set_constant(double c) {
  std::fill(data_.begin(), data_.end(), 0.0);
  data_[0] = c;
  degree_ = 0;
}

void Jet3::set_variable(int i, double value) {
  std::fill(data_.begin(), data_.end(), 0.0);
  data_[0] = value;
  data_[1 + i] = 1.0;
  degree_ = 1;
}

Vec Jet3::gradient() const { return Eigen::Map<const Vec>(g(), n_); }

Mat Jet3::hessian() const {
  Mat m = Mat::Zero(n_, n_);
  if (order_ < 2) return m;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) m(i, j) = h()[i * n_ + j];
  return m;
}

Tensor3 Jet3::third_tensor() const {
  Tensor3 out(n_);
  if (order_ < 3) return out;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k) out(i, j, k) = t()[(i * n_ + j) * n_ + k];
  return out;
}

bool Jet3::symmetric() const {
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      if (hess(i, j) != hess(j, i)) return false;
      for (int k = 0; k < n_; ++k) {
        const double a = third(i, j, k);
        if (a != third(i, k, j) || a != third(j, i, k) || a != third(j, k, i) || a != third(k, i, j) ||
            a != third(k, j, i))
          return false;
      }
    }
  return true;
}

void Jet3::mirror() {
  const int n = n_;
  if (order_ >= 2) {
    double* H = h();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) H[j * n + i] = H[i * n + j];
  }
  if (order_ >= 3) {
    double* T = t();
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        for (int k = j; k < n; ++k) {
          const double a = T[(i * n + j) * n + k];
          T[(i * n + k) * n + j] = a;
          T[(j * n + i) * n + k] = a;
          T[(j * n + k) * n + i] = a;
          T[(k * n + i) * n + j] = a;
          T[(k * n + j) * n + i] = a;
        }
  }
}

void Jet3::add(Jet3& out, const Jet3& a, const Jet3& b, double sb) {
  out.reset(a.n_, a.order_);
  for (size_t i = 0; i < out.data_.size(); ++i) out.data_[i] = a.data_[i] + sb * b.data_[i];
  out.degree_ = std::max(a.degree_, b.degree_);
}

void Jet3::scale(Jet3& out, const Jet3& a, double s) {
  out.reset(a.n_, a.order_);
  for (size_t i = 0; i < out.data_.size(); ++i) out.data_[i] = s * a.data_[i];
  out.degree_ = a.degree_;
}

void Jet3::mul(Jet3& out, const Jet3& a, const Jet3& b) {
  if (a.degree_ == 0) return scale(out, b, a.value());
  if (b.degree_ == 0) return scale(out, a, b.value());
  const int n = a.n_;
  out.reset(n, a.order_);
  const double fa = a.value(), fb = b.value();
  out.data_[0] = fa * fb;
  const double* ag = a.g();
  const double* bg = b.g();
  double* og = out.g();
  for (int i = 0; i < n; ++i) og[i] = ag[i] * fb + fa * bg[i];
  out.degree_ = 2;
  if (a.order_ < 2) return;
  const double* ah = a.h();
  const double* bh = b.h();
  double* oh = out.h();
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double v = ag[i] * bg[j] + ag[j] * bg[i];
      if (a.degree_ > 1) v += ah[i * n + j] * fb;
      if (b.degree_ > 1) v += fa * bh[i * n + j];
      oh[i * n + j] = v;
    }
  if (a.order_ >= 3 && (a.degree_ > 1 || b.degree_ > 1)) {
    const double* at = a.t();
    const double* bt = b.t();
    double* ot = out.t();
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        for (int k = j; k < n; ++k) {
          double v = 0.0;
          if (a.degree_ > 1)
            v += at[(i * n + j) * n + k] * fb + ah[i * n + j] * bg[k] + ah[i * n + k] * bg[j] +
                 ah[j * n + k] * bg[i];
          if (b.degree_ > 1)
            v += fa * bt[(i * n + j) * n + k] + ag[i] * bh[j * n + k] + ag[j] * bh[i * n + k] +
                 ag[k] * bh[i * n + j];
          ot[(i * n + j) * n + k] = v;
        }
  }
  out.mirror();
}

void Jet3::compose(Jet3& out, const Jet3& a, double f0, double f1, double f2, double f3) {
  const int n = a.n_;
  out.reset(n, a.order_);
  out.data_[0] = f0;
  if (a.degree_ == 0) return;
  out.degree_ = 2;
  const double* ag = a.g();
  double* og = out.g();
  for (int i = 0; i < n; ++i) og[i] = f1 * ag[i];
  if (a.order_ < 2) return;
  const double* ah = a.h();
  const bool curved = a.degree_ > 1;
  double* oh = out.h();
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double v = f2 * ag[i] * ag[j];
      if (curved) v += f1 * ah[i * n + j];
      oh[i * n + j] = v;
    }
  if (a.order_ >= 3) {
    const double* at = a.t();
    double* ot = out.t();
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        for (int k = j; k < n; ++k) {
          double v = f3 * ag[i] * ag[j] * ag[k];
          if (curved)
            v += f2 * (ah[i * n + j] * ag[k] + ah[i * n + k] * ag[j] + ah[j * n + k] * ag[i]) +
                 f1 * at[(i * n + j) * n + k];
          ot[(i * n + j) * n + k] = v;
        }
  }
  out.mirror();
}

Jet3 Jet3::pullback(const Mat& q) const {
  const int m = static_cast<int>(q.cols());
  Jet3 out(m, order_);
  out.data_[0] = value();
  out.degree_ = degree_;
  const Vec gy = q.transpose() * gradient();
  for (int i = 0; i < m; ++i) out.g()[i] = gy(i);
  if (order_ >= 2) {
    const Mat hy = q.transpose() * hessian() * q;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) out.h()[i * m + j] = hy(i, j);
  }
  if (order_ >= 3) {
    // contract one index at a time: T1(a,j,k) = sum_i T(i,j,k) Q(i,a), and so on.
    const int n = n_;
    std::vector<double> t1(static_cast<size_t>(m) * n * n, 0.0), t2(static_cast<size_t>(m) * m * n, 0.0);
    for (int a = 0; a < m; ++a)
      for (int i = 0; i < n; ++i) {
        const double c = q(i, a);
        if (c == 0.0) continue;
        for (int jk = 0; jk < n * n; ++jk) t1[a * n * n + jk] += c * t()[i * n * n + jk];
      }
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int j = 0; j < n; ++j) {
          const double c = q(j, b);
          if (c == 0.0) continue;
          for (int k = 0; k < n; ++k) t2[(a * m + b) * n + k] += c * t1[(a * n + j) * n + k];
        }
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b)
        for (int e = b; e < m; ++e) {
          double v = 0.0;
          for (int k = 0; k < n; ++k) v += q(k, e) * t2[(a * m + b) * n + k];
          out.t()[(a * m + b) * m + e] = v;
        }
  }
  out.mirror();
  return out;
}

Jet3 operator+(const Jet3& a, const Jet3& b) {
  Jet3 out;
  Jet3::add(out, a, b);
  return out;
}

Jet3 operator-(const Jet3& a, const Jet3& b) {
  Jet3 out;
  Jet3::add(out, a, b, -1.0);
  return out;
}

Jet3 operator*(const Jet3& a, const Jet3& b) {
  Jet3 out;
  Jet3::mul(out, a, b);
  return out;
}

Jet3 operator/(const Jet3& a, const Jet3& b) {
  Jet3 inv, out;
  const double s = b.value();
  if (s == 0.0) throw DomainError("division by zero");
  Jet3::compose(inv, b, 1.0 / s, -1.0 / (s * s), 2.0 / (s * s * s), -6.0 / (s * s * s * s));
  Jet3::mul(out, a, inv);
  return out;
}

Jet3 operator*(double s, const Jet3& a) {
  Jet3 out;
  Jet3::scale(out, a, s);
  return out;
}

Jet3 operator+(const Jet3& a, double c) {
  Jet3 out = a;
  out.data_[0] += c;
  return out;
}

Jet3 operator-(const Jet3& a) { return -1.0 * a; }

void exp_derivs(double x, double f[4]) {
  const double e = std::exp(x);
  f[0] = f[1] = f[2] = f[3] = e;
}

void log_derivs(double x, double f[4]) {
  if (!(x > 0.0)) throw DomainError("log of non-positive argument " + show(x));
  f[0] = std::log(x);
  f[1] = 1.0 / x;
  f[2] = -f[1] * f[1];
  f[3] = 2.0 * f[1] * f[1] * f[1];
}

void sin_derivs(double x, double f[4]) {
  const double s = std::sin(x), c = std::cos(x);
  f[0] = s;
  f[1] = c;
  f[2] = -s;
  f[3] = -c;
}

void cos_derivs(double x, double f[4]) {
  const double s = std::sin(x), c = std::cos(x);
  f[0] = c;
  f[1] = -s;
  f[2] = -c;
  f[3] = s;
}

void sqrt_derivs(double x, double f[4]) {
  if (!(x > 0.0)) throw DomainError("sqrt requires a positive argument, got " + show(x));
  const double r = std::sqrt(x);
  f[0] = r;
  f[1] = 0.5 / r;
  f[2] = -0.25 / (r * x);
  f[3] = 0.375 / (r * x * x);
}

void pow_derivs(double x, double p, double f[4]) {
  const bool integer = p == std::floor(p) && std::abs(p) < 1e9;
  if (!integer && !(x > 0.0))
    throw DomainError("pow with non-integer exponent requires a positive base, got " + show(x));
  if (integer && p < 0 && x == 0.0) throw DomainError("pow: zero base with negative exponent");
  // falling factorial coefficients; a zero coefficient kills the term even when x^(p-k) is infinite
  double c = 1.0;
  for (int k = 0; k < 4; ++k) {
    f[k] = c == 0.0 ? 0.0 : c * std::pow(x, p - k);
    c *= (p - k);
  }
}

namespace {

template <void (*D)(double, double*)>
Jet3 apply(const Jet3& a) {
  double f[4];
  D(a.value(), f);
  Jet3 out;
  Jet3::compose(out, a, f[0], f[1], f[2], f[3]);
  return out;
}

}  // namespace

Jet3 exp(const Jet3& a) { return apply<exp_derivs>(a); }
Jet3 log(const Jet3& a) { return apply<log_derivs>(a); }
Jet3 sin(const Jet3& a) { return apply<sin_derivs>(a); }
Jet3 cos(const Jet3& a) { return apply<cos_derivs>(a); }
Jet3 sqrt(const Jet3& a) { return apply<sqrt_derivs>(a); }

Jet3 pow(const Jet3& a, double p) {
  double f[4];
  pow_derivs(a.value(), p, f);
  Jet3 out;
  Jet3::compose(out, a, f[0], f[1], f[2], f[3]);
  return out;
}

}  // namespace tonelli
