#include "invsolve/linsolve.hpp"

#include <cmath>
#include <random>

#include "invsolve/errors.hpp"

namespace invsolve {

SpdSolver::SpdSolver(const SparseSymMatrix& S) : dim_(static_cast<int>(S.rows())) {
  if (S.rows() != S.cols()) throw InvalidArgument("factor_spd: matrix is not square");
  llt_.compute(S);
  if (llt_.info() != Eigen::Success) {
    throw NotSpdError("factor_spd: non-positive pivot in sparse Cholesky");
  }
}

Eigen::VectorXd SpdSolver::solve(const Eigen::VectorXd& b) const {
  if (b.size() != dim_) throw InvalidArgument("SpdSolver::solve: dimension mismatch");
  return llt_.solve(b);
}

CgResult cg_solve(const LinearMap& apply, const Eigen::VectorXd& b, const InnerProduct& inner,
                  const IterSolveConfig& cfg) {
  if (!(cfg.rel_tol > 0.0)) throw InvalidArgument("cg_solve: rel_tol must be positive");
  const Eigen::Index n = b.size();
  const int max_iter = cfg.max_iter > 0 ? cfg.max_iter : static_cast<int>(10 * std::max<Eigen::Index>(n, 1));

  CgResult out;
  out.x = Eigen::VectorXd::Zero(n);
  const double bnorm = std::sqrt(std::max(inner(b, b), 0.0));
  if (bnorm == 0.0) {
    out.last_direction = Eigen::VectorXd::Zero(n);
    out.last_residual = Eigen::VectorXd::Zero(n);
    return out;
  }
  const double target = cfg.rel_tol * bnorm;

  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  double rho = inner(r, r);
  Eigen::VectorXd best = out.x;
  double best_res = bnorm;

  int it = 0;
  while (it < max_iter) {
    const Eigen::VectorXd q = apply(p);
    const double pq = inner(p, q);
    if (!(pq > 0.0)) {
      throw NoConvergence("cg_solve: operator is not positive definite along a search direction",
                          best, best_res / bnorm, it);
    }
    const double step = rho / pq;
    out.x += step * p;
    r -= step * q;
    ++it;
    const double rho_new = inner(r, r);
    const double rnorm = std::sqrt(std::max(rho_new, 0.0));
    if (rnorm <= target) {
      // Recursive residual says done; confirm with the true one and restart
      // from it if rounding has let the two drift apart.
      const Eigen::VectorXd true_r = b - apply(out.x);
      const double true_norm = std::sqrt(std::max(inner(true_r, true_r), 0.0));
      if (true_norm < best_res) {
        best_res = true_norm;
        best = out.x;
      }
      if (true_norm <= target) {
        out.iterations = it;
        out.rel_residual = true_norm / bnorm;
        out.last_direction = p;
        out.last_residual = r;
        return out;
      }
      r = true_r;
      rho = inner(r, r);
      p = r;
      continue;
    }
    if (rnorm < best_res) {
      best_res = rnorm;
      best = out.x;
    }
    p = r + (rho_new / rho) * p;
    rho = rho_new;
  }
  throw NoConvergence("cg_solve: no convergence within " + std::to_string(max_iter) +
                          " iterations",
                      best, best_res / bnorm, it);
}

double operator_norm(const LinearMap& apply, const InnerProduct& inner, int dim, double tol,
                     int max_iter) {
  if (dim <= 0) return 0.0;
  std::mt19937_64 gen(0x5eed);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = dist(gen) * ((i % 2) ? -1.0 : 1.0);
  x /= std::sqrt(inner(x, x));

  double lambda = 0.0;
  for (int k = 0; k < max_iter; ++k) {
    Eigen::VectorXd y = apply(x);
    const double ynorm = std::sqrt(std::max(inner(y, y), 0.0));
    if (ynorm == 0.0) return 0.0;
    const double next = inner(x, y);
    x = y / ynorm;
    if (k > 0 && std::abs(next - lambda) <= tol * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

}  // namespace invsolve
