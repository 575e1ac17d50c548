#pragma once

#include <Eigen/Dense>

#include "tensamp/tensor.hpp"

namespace tensamp::detail {

/// Solves G x = b for Hermitian positive semidefinite G. Eigenvalues at or
/// below rel * trace(G) are dropped, so a rank-deficient G yields the
/// minimum-norm least-squares solution; `truncated` records that.
class HermitianSolver {
 public:
  explicit HermitianSolver(const Matrix& g, double rel = 1e-12);
  Matrix solve(const Matrix& rhs) const;
  bool truncated() const { return truncated_; }

 private:
  Matrix vecs_;
  Eigen::VectorXd inv_vals_;
  bool truncated_ = false;
};

inline HermitianSolver::HermitianSolver(const Matrix& g, double rel) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
  const Eigen::VectorXd& vals = eig.eigenvalues();
  const double cut = rel * std::max(g.trace().real(), 0.0);
  vecs_ = eig.eigenvectors();
  inv_vals_.resize(vals.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals(i) > cut && vals(i) > 0.0) {
      inv_vals_(i) = 1.0 / vals(i);
    } else {
      inv_vals_(i) = 0.0;
      truncated_ = true;
    }
  }
}

inline Matrix HermitianSolver::solve(const Matrix& rhs) const {
  return vecs_ * (inv_vals_.asDiagonal() * (vecs_.adjoint() * rhs));
}

}  // namespace tensamp::detail
