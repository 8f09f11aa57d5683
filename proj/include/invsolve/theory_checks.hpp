#pragma once

// Executable checks of the parameter-sequence and spectral-filter estimates
// behind the Levenberg-Marquardt convergence theory, plus empirical probes
// of the tangential cone condition and of ||I - Q||.

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "invsolve/forward.hpp"

namespace invsolve {

struct LemmaReport {
  std::string lemma_id;
  /// max over cases of (lhs - bound); <= 0 means every inequality held.
  double max_violation = -std::numeric_limits<double>::infinity();
  long cases_tested = 0;
  std::string worst_case;

  static constexpr double kThreshold = 1e-10;
  bool passed() const { return max_violation <= kThreshold; }

  void record(double lhs, double bound, const std::string& description);
  /// Folds another report into this one (worst case wins).
  void merge(const LemmaReport& other);
};

struct ConstantsC {
  double c0, c1, c2, c3, c4;
  double K0, K1;

  /// Throws InvalidArgument for r outside (0,1) or nu outside [0, 1/2).
  static ConstantsC from(double r, double nu = 0.0);
};

/// Geometric sequence alpha_0 .. alpha_{count-1} by repeated multiplication.
std::vector<double> geometric_alphas(double alpha0, double r, int count);

LemmaReport check_sum_estimates(double alpha0, double r, int k_max);

/// Requires 0 <= nu < 1/2.
LemmaReport check_sum_nu(double alpha0, double r, double nu, int k_max);

/// || prod_{j=m}^{l} alpha_j (alpha_j I + T'T)^{-1} (T'T)^nu ||, 0 <= nu <= 1.
LemmaReport check_spectral_nu(const Eigen::MatrixXd& T, double alpha0, double r, int m, int l,
                              double nu);

/// || prod alpha_j (alpha_j I + T'T)^{-1} T' || against (1/2)(sum 1/alpha_j)^{-1/2}.
LemmaReport check_spectral_half(const Eigen::MatrixXd& T, double alpha0, double r, int m, int l);

/// || prod alpha_j (alpha_j I + T'T)^{-1} (T'T)^nu T' ||, 0 <= nu <= 1/2.
LemmaReport check_spectral_halfnu(const Eigen::MatrixXd& T, double alpha0, double r, int m,
                                  int l, double nu);

/// Left-hand side norms, exposed for tests.
double spectral_filter_norm(const Eigen::MatrixXd& T, const std::vector<double>& alphas, int m,
                            int l, double nu, bool times_adjoint);

/// ||F(uhat) - F(u) - G_u (uhat - u)||_M / ||F(uhat) - F(u)||_M.
/// Throws DegeneratePair when the denominator is <= 1e-14.
double gtcc_probe(const FEOperators& ops, const NodeField& u, const NodeField& uhat);

/// M-operator norm of I - Q(u1, u2) by power iteration on (I-Q)*(I-Q).
double kappa_probe(const FEOperators& ops, const NodeField& u1, const NodeField& u2,
                   double tol = 1e-10);
double kappa_probe(const FEOperators& ops, const ActiveSet& active1, const ActiveSet& active2,
                   double tol = 1e-10);

enum class CheckGrid { Small, Full };

/// Runs every lemma check over the parameter grid; one aggregated report per
/// lemma plus the half-power sharpness witness.
std::vector<LemmaReport> run_lemma_suite(CheckGrid grid = CheckGrid::Full,
                                         int matrices_per_check = 20);

}  // namespace invsolve
