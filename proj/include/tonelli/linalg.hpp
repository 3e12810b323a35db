#pragma once

#include <string>

#include <Eigen/Dense>
#include <vector>

namespace tonelli {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Dense rank-3 array with row-major layout, T(i,j,k) at (i*n + j)*n + k.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), data_(static_cast<size_t>(n) * n * n, 0.0) {}

  int dim() const { return n_; }
  double& operator()(int i, int j, int k) { return data_[(static_cast<size_t>(i) * n_ + j) * n_ + k]; }
  double operator()(int i, int j, int k) const {
    return data_[(static_cast<size_t>(i) * n_ + j) * n_ + k];
  }
  /// Contract the first index with w: M(j,k) = sum_i w_i T(i,j,k).
  Mat contract_first(const Vec& w) const;
  double max_abs() const;

 private:
  int n_ = 0;
  std::vector<double> data_;
};

/// Cholesky factor of an SPD matrix; throws TonelliViolation when not positive definite.
Eigen::LLT<Mat> spd_factor(const Mat& m, const char* what);

/// Smallest eigenvalue of a symmetric matrix.
double min_eig(const Mat& m);
double max_eig(const Mat& m);

/// "(x1, x2, ...)" with 17 significant digits.
std::string point_str(const Vec& x);

}  // namespace tonelli
