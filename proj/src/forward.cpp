#include "invsolve/forward.hpp"

#include <cmath>

#include <Eigen/SparseLU>

#include "invsolve/errors.hpp"

namespace invsolve {

namespace {

void require_dim(const FEOperators& ops, Eigen::Index n, const char* what) {
  if (n != ops.dofs()) {
    throw InvalidArgument(std::string(what) + ": dimension mismatch (" + std::to_string(n) +
                          " vs " + std::to_string(ops.dofs()) + ")");
  }
}

double state_residual(const FEOperators& ops, const NodeField& y, const Eigen::VectorXd& Mu) {
  const Eigen::VectorXd r = ops.A * y + ops.D.cwiseProduct(y.cwiseMax(0.0)) - Mu;
  return r.lpNorm<Eigen::Infinity>();
}

}  // namespace

SpdSolverPtr factor_linearized(const FEOperators& ops, const ActiveSet& active) {
  return factor_spd(add_diagonal(ops.A, indicator_matrix(ops, active)));
}

StateSolution solve_state(const FEOperators& ops, const NodeField& u,
                          const std::optional<NodeField>& y0, const SsnConfig& cfg) {
  require_dim(ops, u.size(), "solve_state");
  if (y0) require_dim(ops, y0->size(), "solve_state");

  const Eigen::VectorXd Mu = ops.M * u;
  ActiveSet active = y0 ? active_set(*y0) : ActiveSet(ops.dofs(), false);
  NodeField y = y0 ? *y0 : NodeField::Zero(ops.dofs());

  for (int k = 1; k <= cfg.max_iter; ++k) {
    SpdSolverPtr fac = factor_linearized(ops, active);
    y = fac->solve(Mu);
    ActiveSet next = active_set(y);
    if (next == active) {
      StateSolution out;
      out.final_residual = state_residual(ops, y, Mu);
      out.y = std::move(y);
      out.active = std::move(next);
      out.ssn_iters = k;
      out.factor = std::move(fac);
      return out;
    }
    active = std::move(next);
  }
  throw NoConvergence("solve_state: active set did not settle within " +
                          std::to_string(cfg.max_iter) + " semismooth Newton steps",
                      y, state_residual(ops, y, Mu), cfg.max_iter);
}

NodeField apply_G(const FEOperators& ops, const NodeField& h, const SpdSolver& fac) {
  require_dim(ops, h.size(), "apply_G");
  return fac.solve(ops.M * h);
}

NodeField apply_G(const FEOperators& ops, const ActiveSet& active, const NodeField& h) {
  return apply_G(ops, h, *factor_linearized(ops, active));
}

CorrectionStep correction_step(const FEOperators& ops, const NodeField& b, double alpha,
                               const SpdSolver& fac, const IterSolveConfig& cfg) {
  require_dim(ops, b.size(), "correction_step");
  if (!(alpha > 0.0)) throw InvalidArgument("correction_step: alpha must be positive");

  CorrectionStep step;
  if (b.isZero(0.0)) {
    step.s = NodeField::Zero(ops.dofs());
    step.z = NodeField::Zero(ops.dofs());
    return step;
  }

  const NodeField Gb = apply_G(ops, b, fac);
  auto normal_op = [&](const Eigen::VectorXd& s) -> Eigen::VectorXd {
    return alpha * s + apply_G(ops, apply_G(ops, s, fac), fac);
  };
  auto m_inner = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    return x.dot(ops.M * y);
  };
  CgResult cg = cg_solve(normal_op, Gb, m_inner, cfg);
  step.s = std::move(cg.x);
  step.z = apply_G(ops, step.s, fac);
  step.inner_iters = cg.iterations;
  return step;
}

CorrectionStep correction_step(const FEOperators& ops, const ActiveSet& active,
                               const NodeField& b, double alpha, const IterSolveConfig& cfg,
                               CorrectionMethod method) {
  require_dim(ops, b.size(), "correction_step");
  if (!(alpha > 0.0)) throw InvalidArgument("correction_step: alpha must be positive");
  if (method == CorrectionMethod::ReducedCg) {
    return correction_step(ops, b, alpha, *factor_linearized(ops, active), cfg);
  }

  const int n = ops.dofs();
  CorrectionStep step;
  if (b.isZero(0.0)) {
    step.s = NodeField::Zero(n);
    step.z = NodeField::Zero(n);
    return step;
  }

  const SparseSymMatrix AK = add_diagonal(ops.A, indicator_matrix(ops, active));
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * (AK.nonZeros() + ops.M.nonZeros()));
  const double inv_alpha = 1.0 / alpha;
  for (int c = 0; c < n; ++c) {
    for (SparseSymMatrix::InnerIterator it(AK, c); it; ++it) {
      trip.emplace_back(it.row(), it.col(), it.value());
      trip.emplace_back(n + it.row(), n + it.col(), it.value());
    }
    for (SparseSymMatrix::InnerIterator it(ops.M, c); it; ++it) {
      trip.emplace_back(it.row(), n + it.col(), -it.value());
      trip.emplace_back(n + it.row(), it.col(), inv_alpha * it.value());
    }
  }
  Eigen::SparseMatrix<double> block(2 * n, 2 * n);
  block.setFromTriplets(trip.begin(), trip.end());
  block.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(block);
  if (lu.info() != Eigen::Success) {
    throw SolverError("correction_step: block LU factorization failed: " + lu.lastErrorMessage());
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * n);
  rhs.tail(n) = inv_alpha * (ops.M * b);
  const Eigen::VectorXd zs = lu.solve(rhs);
  if (lu.info() != Eigen::Success) throw SolverError("correction_step: block LU solve failed");
  step.z = zs.head(n);
  step.s = zs.tail(n);
  step.inner_iters = 1;
  return step;
}

double normal_equation_residual(const FEOperators& ops, const SpdSolver& fac,
                                const NodeField& b, double alpha, const NodeField& s) {
  const NodeField Gb = apply_G(ops, b, fac);
  const NodeField r = alpha * s + apply_G(ops, apply_G(ops, s, fac), fac) - Gb;
  const double gb = l2_norm(ops, Gb);
  const double rn = l2_norm(ops, r);
  if (gb == 0.0) return rn;
  return rn / gb;
}

std::pair<double, StateSolution> residual(const FEOperators& ops, const NodeField& u,
                                          const NodeField& ydelta,
                                          const std::optional<NodeField>& y0) {
  require_dim(ops, ydelta.size(), "residual");
  StateSolution state = solve_state(ops, u, y0);
  const double res = l2_norm(ops, ydelta - state.y);
  return {res, std::move(state)};
}

NodeField apply_Q(const FEOperators& ops, const SpdSolver& fac1, const ActiveSet& active2,
                  const NodeField& v) {
  require_dim(ops, v.size(), "apply_Q");
  const Eigen::VectorXd rhs = ops.A * v + indicator_matrix(ops, active2).cwiseProduct(v);
  return fac1.solve(rhs);
}

NodeField apply_Q(const FEOperators& ops, const ActiveSet& active1, const ActiveSet& active2,
                  const NodeField& v) {
  require_dim(ops, v.size(), "apply_Q");
  if (active1 == active2) return v;
  return apply_Q(ops, *factor_linearized(ops, active1), active2, v);
}

}  // namespace invsolve
