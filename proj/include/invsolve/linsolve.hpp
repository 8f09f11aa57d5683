#pragma once

#include <functional>
#include <memory>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include "invsolve/mesh_fem.hpp"

namespace invsolve {

/// Sparse Cholesky factorization (AMD ordering) of a fixed SPD matrix.
/// Immutable once built; concurrent solve() calls are fine.
class SpdSolver {
public:
  /// Throws NotSpdError on a non-positive pivot.
  explicit SpdSolver(const SparseSymMatrix& S);

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  int dim() const { return dim_; }

private:
  int dim_;
  Eigen::SimplicialLLT<SparseSymMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
};

using SpdSolverPtr = std::shared_ptr<const SpdSolver>;

inline SpdSolverPtr factor_spd(const SparseSymMatrix& S) {
  return std::make_shared<const SpdSolver>(S);
}

struct IterSolveConfig {
  double rel_tol = 1e-12;
  /// <= 0 means 10 * dimension.
  int max_iter = 0;
};

using LinearMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using InnerProduct = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

inline double euclidean_inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b);
}

struct CgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  /// ||apply(x) - b|| / ||b|| in the supplied inner product.
  double rel_residual = 0.0;
  /// Last search direction and the recursive residual, kept for diagnostics.
  Eigen::VectorXd last_direction;
  Eigen::VectorXd last_residual;
};

/// Conjugate gradients for an operator that is self-adjoint positive definite
/// with respect to `inner`. Throws NoConvergence (carrying the best iterate)
/// when max_iter is exhausted.
CgResult cg_solve(const LinearMap& apply, const Eigen::VectorXd& b, const InnerProduct& inner,
                  const IterSolveConfig& cfg = {});

/// Power iteration on a self-adjoint PSD operator B; returns sqrt(lambda_max(B)).
/// With B = T*T this is the operator norm of T. Returns 0 when B annihilates
/// the iterate.
double operator_norm(const LinearMap& apply, const InnerProduct& inner, int dim,
                     double tol = 1e-10, int max_iter = 1000);

}  // namespace invsolve
