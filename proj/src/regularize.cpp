#include "invsolve/regularize.hpp"

#include <chrono>
#include <cmath>
#include <functional>

namespace invsolve {

AlphaSchedule::AlphaSchedule(double alpha0, double r) : alpha0_(alpha0), r_(r) {
  if (!(alpha0 > 0.0)) throw InvalidArgument("AlphaSchedule: alpha0 must be positive");
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("AlphaSchedule: r must lie in (0, 1)");
}

double AlphaSchedule::at(int n) const {
  double a = alpha0_;
  for (int k = 0; k < n; ++k) a *= r_;
  return a;
}

void StoppingRule::validate() const {
  if (!(tau > 1.0)) throw InvalidArgument("StoppingRule: tau must exceed 1");
  if (!(delta >= 0.0)) throw InvalidArgument("StoppingRule: delta must be nonnegative");
  if (max_iter < 0) throw InvalidArgument("StoppingRule: max_iter must be nonnegative");
}

const char* to_string(Termination t) {
  return t == Termination::Discrepancy ? "discrepancy" : "max_iter";
}

namespace {

using Clock = std::chrono::steady_clock;

struct StepOutcome {
  NodeField s;
  int cg_iters = 0;
};

// Computes the update from the current state and data misfit b = ydelta - y_n.
using StepFn = std::function<StepOutcome(int n, const StateSolution&, const NodeField& b)>;

MethodResult drive(const FEOperators& ops, const NodeField& ydelta, const StoppingRule& rule,
                   const NodeField& u0, const std::optional<NodeField>& utruth,
                   const DriverOptions& opts, const StepFn& step, const char* name) {
  rule.validate();
  if (ydelta.size() != ops.dofs() || u0.size() != ops.dofs() ||
      (utruth && utruth->size() != ops.dofs())) {
    throw InvalidArgument(std::string(name) + ": dimension mismatch");
  }

  MethodResult result;
  NodeField u = u0;
  std::optional<NodeField> warm;
  const double threshold = rule.threshold();
  const auto t_start = Clock::now();

  for (int n = 0;; ++n) {
    const auto t0 = Clock::now();
    if (opts.store_iterates) result.iterates.push_back(u);
    if (utruth) result.errors_to_truth.push_back(l2_norm(ops, *utruth - u));

    StateSolution state;
    try {
      state = solve_state(ops, u, warm);
    } catch (const SolverError& e) {
      result.stop_index = n;
      result.u_final = u;
      throw DriverFailure(std::string(name) + ": state solve failed at n=" + std::to_string(n) +
                              ": " + e.what(),
                          std::move(result));
    }
    const NodeField b = ydelta - state.y;
    const double res = l2_norm(ops, b);
    result.residuals.push_back(res);
    result.ssn_iters.push_back(state.ssn_iters);

    if (res <= threshold || n >= rule.max_iter) {
      result.stop_index = n;
      result.terminated_by = res <= threshold ? Termination::Discrepancy : Termination::MaxIter;
      result.u_final = u;
      result.wall_times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
      break;
    }

    StepOutcome out;
    try {
      out = step(n, state, b);
    } catch (const SolverError& e) {
      result.stop_index = n;
      result.u_final = u;
      throw DriverFailure(std::string(name) + ": update failed at n=" + std::to_string(n) + ": " +
                              e.what(),
                          std::move(result));
    }
    u += out.s;
    result.step_norms.push_back(l2_norm(ops, out.s));
    result.cg_iters.push_back(out.cg_iters);
    if (opts.warm_start) warm = std::move(state.y);
    result.wall_times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
  }
  result.total_seconds = std::chrono::duration<double>(Clock::now() - t_start).count();
  return result;
}

}  // namespace

MethodResult blm_run(const FEOperators& ops, const NodeField& ydelta, const StoppingRule& rule,
                     const NodeField& u0, const AlphaSchedule& sched,
                     const std::optional<NodeField>& utruth, const DriverOptions& opts) {
  std::vector<double> alphas;
  double alpha = sched.alpha0();
  alphas.push_back(alpha);

  auto step = [&](int n, const StateSolution& state, const NodeField& b) {
    // alphas[n] is the parameter of this step; extend for the next index.
    const double a = alphas[static_cast<std::size_t>(n)];
    alpha *= sched.r();
    alphas.push_back(alpha);
    StepOutcome out;
    if (opts.correction == CorrectionMethod::ReducedCg) {
      CorrectionStep cs = correction_step(ops, b, a, *state.factor, opts.cg);
      out.s = std::move(cs.s);
      out.cg_iters = cs.inner_iters;
    } else {
      CorrectionStep cs = correction_step(ops, state.active, b, a, opts.cg, opts.correction);
      out.s = std::move(cs.s);
      out.cg_iters = cs.inner_iters;
    }
    return out;
  };

  MethodResult result;
  try {
    result = drive(ops, ydelta, rule, u0, utruth, opts, step, "blm_run");
  } catch (DriverFailure& f) {
    MethodResult partial = f.partial();
    alphas.resize(static_cast<std::size_t>(partial.stop_index) + 1);
    partial.alphas = alphas;
    throw DriverFailure(f.what(), std::move(partial));
  }
  alphas.resize(static_cast<std::size_t>(result.stop_index) + 1);
  result.alphas = std::move(alphas);
  return result;
}

MethodResult bl_run(const FEOperators& ops, const NodeField& ydelta, const StoppingRule& rule,
                    const NodeField& u0, double step_w, const std::optional<NodeField>& utruth,
                    const DriverOptions& opts) {
  if (!(step_w > 0.0)) throw InvalidArgument("bl_run: step size must be positive");
  auto step = [&](int, const StateSolution& state, const NodeField& b) {
    StepOutcome out;
    out.s = step_w * apply_G(ops, b, *state.factor);
    return out;
  };
  return drive(ops, ydelta, rule, u0, utruth, opts, step, "bl_run");
}

ScalingCheck check_scaling(const FEOperators& ops, const NodeField& uref,
                           const AlphaSchedule& sched) {
  const StateSolution state = solve_state(ops, uref);
  const SpdSolver& fac = *state.factor;
  auto g2 = [&](const Eigen::VectorXd& h) -> Eigen::VectorXd {
    return apply_G(ops, apply_G(ops, h, fac), fac);
  };
  auto m_inner = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.dot(ops.M * b);
  };
  ScalingCheck out;
  out.norm_estimate = operator_norm(g2, m_inner, ops.dofs(), 1e-12, 2000);
  out.satisfied = out.norm_estimate <= std::sqrt(sched.alpha0());
  return out;
}

}  // namespace invsolve
