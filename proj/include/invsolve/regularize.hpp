#pragma once

// Outer iterative regularization drivers. Both stop by the discrepancy
// principle: the first n with ||ydelta - F(u_n)||_M <= tau * delta.

#include <optional>
#include <vector>

#include "invsolve/errors.hpp"
#include "invsolve/forward.hpp"

namespace invsolve {

/// alpha_n = alpha0 * r^n.
class AlphaSchedule {
public:
  AlphaSchedule(double alpha0, double r);

  double alpha0() const { return alpha0_; }
  double r() const { return r_; }
  /// alpha_n by repeated multiplication, matching what the drivers record.
  double at(int n) const;

private:
  double alpha0_;
  double r_;
};

struct StoppingRule {
  double tau = 1.5;
  double delta = 0.0;
  int max_iter = 60;

  /// Throws InvalidArgument unless tau > 1, delta >= 0, max_iter >= 0.
  void validate() const;
  double threshold() const { return tau * delta; }
};

enum class Termination { Discrepancy, MaxIter };

const char* to_string(Termination t);

struct MethodResult {
  int stop_index = 0;
  Termination terminated_by = Termination::MaxIter;
  NodeField u_final;
  /// Entries 0..stop_index unless noted.
  std::vector<double> residuals;
  std::vector<double> errors_to_truth;  // empty without a truth
  std::vector<double> alphas;           // BLM only
  /// Entries 0..stop_index-1: one per update actually taken.
  std::vector<double> step_norms;
  std::vector<int> ssn_iters;  // 0..stop_index
  std::vector<int> cg_iters;   // 0..stop_index-1
  std::vector<double> wall_times;  // seconds per index 0..stop_index
  std::vector<NodeField> iterates;  // only when requested
  double total_seconds = 0.0;
};

/// Driver aborted by an inner solver; carries the trace up to the failure.
class DriverFailure : public SolverError {
public:
  DriverFailure(const std::string& what, MethodResult partial)
      : SolverError(what), partial_(std::move(partial)) {}
  const MethodResult& partial() const noexcept { return partial_; }

private:
  MethodResult partial_;
};

struct DriverOptions {
  IterSolveConfig cg;
  CorrectionMethod correction = CorrectionMethod::ReducedCg;
  bool store_iterates = false;
  /// Start each semismooth Newton solve from the previous state. The
  /// converged state does not depend on the start.
  bool warm_start = true;
};

/// Bouligand-Levenberg-Marquardt:
///   u_{n+1} = u_n + (alpha_n I + G_n* G_n)^{-1} G_n* (ydelta - F(u_n)).
MethodResult blm_run(const FEOperators& ops, const NodeField& ydelta, const StoppingRule& rule,
                     const NodeField& u0, const AlphaSchedule& sched,
                     const std::optional<NodeField>& utruth = std::nullopt,
                     const DriverOptions& opts = {});

/// (2 - 2 mu) / Lbar^2 with mu = 0.1, Lbar = 0.05.
inline constexpr double kDefaultLandweberStep = (2.0 - 2.0 * 0.1) / (0.05 * 0.05);

/// Bouligand-Landweber: u_{n+1} = u_n + w G_n* (ydelta - F(u_n)).
MethodResult bl_run(const FEOperators& ops, const NodeField& ydelta, const StoppingRule& rule,
                    const NodeField& u0, double step_w = kDefaultLandweberStep,
                    const std::optional<NodeField>& utruth = std::nullopt,
                    const DriverOptions& opts = {});

struct ScalingCheck {
  double norm_estimate = 0.0;
  bool satisfied = false;
};

/// Estimates ||G_uref|| in the M geometry and compares it with sqrt(alpha0).
/// Advisory only.
ScalingCheck check_scaling(const FEOperators& ops, const NodeField& uref,
                           const AlphaSchedule& sched);

}  // namespace invsolve
