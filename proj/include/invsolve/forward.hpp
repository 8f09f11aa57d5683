#pragma once

// Discrete forward operator F(u) = y solving  A y + D max(y, 0) = M u,
// the Bouligand subderivative G_u = (A + K_y)^{-1} M and the
// Levenberg-Marquardt correction step built on it.

#include <optional>
#include <utility>

#include "invsolve/linsolve.hpp"
#include "invsolve/mesh_fem.hpp"

namespace invsolve {

struct StateSolution {
  NodeField y;
  ActiveSet active;
  int ssn_iters = 0;
  /// ||A y + D max(y,0) - M u||_inf
  double final_residual = 0.0;
  /// Cholesky factor of A + K_y for this state's active set.
  SpdSolverPtr factor;
};

struct SsnConfig {
  int max_iter = 100;
};

/// Semismooth Newton: (A + D Theta_k) y^{k+1} = M u until two consecutive
/// active sets coincide. Throws NoConvergence after cfg.max_iter steps.
StateSolution solve_state(const FEOperators& ops, const NodeField& u,
                          const std::optional<NodeField>& y0 = std::nullopt,
                          const SsnConfig& cfg = {});

/// Factorization of A + K for the given active set.
SpdSolverPtr factor_linearized(const FEOperators& ops, const ActiveSet& active);

/// zeta = G h, i.e. (A + K) zeta = M h, with `fac` the factor of A + K.
NodeField apply_G(const FEOperators& ops, const NodeField& h, const SpdSolver& fac);
NodeField apply_G(const FEOperators& ops, const ActiveSet& active, const NodeField& h);

enum class CorrectionMethod {
  /// CG on (alpha I + G G) s = G b in the M inner product.
  ReducedCg,
  /// Sparse LU on the 2n x 2n block system in (z, s).
  Block,
};

struct CorrectionStep {
  NodeField s;
  NodeField z;  // G s
  int inner_iters = 0;
};

/// Solves (alpha I + G*G) s = G* b with G* = G (M-self-adjoint) by CG on
/// the reduced operator, reusing `fac` (factor of A + K) for every G.
CorrectionStep correction_step(const FEOperators& ops, const NodeField& b, double alpha,
                               const SpdSolver& fac, const IterSolveConfig& cfg = {});
CorrectionStep correction_step(const FEOperators& ops, const ActiveSet& active,
                               const NodeField& b, double alpha,
                               const IterSolveConfig& cfg = {},
                               CorrectionMethod method = CorrectionMethod::ReducedCg);

/// ||alpha s + G(G s) - G b||_M / ||G b||_M (0 when G b = 0 and s = 0).
double normal_equation_residual(const FEOperators& ops, const SpdSolver& fac,
                                const NodeField& b, double alpha, const NodeField& s);

/// (||ydelta - F(u)||_M, state).
std::pair<double, StateSolution> residual(const FEOperators& ops, const NodeField& u,
                                          const NodeField& ydelta,
                                          const std::optional<NodeField>& y0 = std::nullopt);

/// w = (A + K_1)^{-1} (A + K_2) v.
NodeField apply_Q(const FEOperators& ops, const ActiveSet& active1, const ActiveSet& active2,
                  const NodeField& v);
NodeField apply_Q(const FEOperators& ops, const SpdSolver& fac1, const ActiveSet& active2,
                  const NodeField& v);

}  // namespace invsolve
