#include "tonelli/linalg.hpp"

#include <cmath>
#include <sstream>

#include "tonelli/error.hpp"

namespace tonelli {

Mat Tensor3::contract_first(const Vec& w) const {
  Mat m = Mat::Zero(n_, n_);
  for (int i = 0; i < n_; ++i) {
    if (w(i) == 0.0) continue;
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k) m(j, k) += w(i) * (*this)(i, j, k);
  }
  return m;
}

double Tensor3::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

Eigen::LLT<Mat> spd_factor(const Mat& m, const char* what) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success || !m.allFinite())
    throw TonelliViolation(std::string(what) + ": matrix is not positive definite");
  const Mat& l = llt.matrixLLT();
  for (int i = 0; i < m.rows(); ++i)
    if (!(l(i, i) > 0.0)) throw TonelliViolation(std::string(what) + ": matrix is not positive definite");
  return llt;
}

double min_eig(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eig(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(m.rows() - 1);
}

std::string point_str(const Vec& x) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
  os << ")";
  return os.str();
}

}  // namespace tonelli
