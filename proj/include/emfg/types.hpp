#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <vector>

namespace emfg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

/// Nodal values of a scalar field over a space-time grid, in node-index order.
using DiscreteField = Eigen::VectorXd;

/// Dense rank-3 array stored as one matrix slice per leading index;
/// slice(i)(j, k) is the (i, j, k) entry.
class Tensor3 {
public:
  Tensor3() = default;
  Tensor3(Index n0, Index rows, Index cols) { resize(n0, rows, cols); }

  void resize(Index n0, Index rows, Index cols) {
    slices_.assign(static_cast<std::size_t>(n0), Mat::Zero(rows, cols));
  }
  void setZero() {
    for (auto& s : slices_) s.setZero();
  }

  Index extent0() const { return static_cast<Index>(slices_.size()); }
  Mat& slice(Index i) { return slices_[static_cast<std::size_t>(i)]; }
  const Mat& slice(Index i) const { return slices_[static_cast<std::size_t>(i)]; }

  double frobenius_norm() const {
    double acc = 0.0;
    for (const auto& s : slices_) acc += s.squaredNorm();
    return std::sqrt(acc);
  }

  bool all_finite() const {
    for (const auto& s : slices_)
      if (!s.allFinite()) return false;
    return true;
  }

private:
  std::vector<Mat> slices_;
};

template <class Derived>
double sup_norm(const Eigen::MatrixBase<Derived>& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

/// Largest singular value; used for the matrix growth envelopes.
template <class Derived>
double spectral_norm(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m.eval());
  return svd.singularValues()(0);
}

template <class Derived>
Mat symmetrized(const Eigen::MatrixBase<Derived>& m) {
  return 0.5 * (m + m.transpose());
}

/// Smallest eigenvalue of a symmetric matrix.
inline double min_eigenvalue(const Mat& sym) {
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Deterministic low-discrepancy sequence (Halton); dimension-wise radical
/// inverses in the first `dim` primes.
class HaltonSequence {
public:
  explicit HaltonSequence(int dim);

  /// Point in [0,1)^dim; advances the sequence.
  Vec next();

private:
  std::vector<int> bases_;
  long index_ = 0;
};

}  // namespace emfg
