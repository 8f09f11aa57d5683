#include "invsolve/theory_checks.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "invsolve/errors.hpp"

namespace invsolve {

void LemmaReport::record(double lhs, double bound, const std::string& description) {
  const double violation = lhs - bound;
  ++cases_tested;
  if (violation > max_violation) {
    max_violation = violation;
    worst_case = description;
  }
}

void LemmaReport::merge(const LemmaReport& other) {
  cases_tested += other.cases_tested;
  if (other.max_violation > max_violation) {
    max_violation = other.max_violation;
    worst_case = other.worst_case;
  }
}

ConstantsC ConstantsC::from(double r, double nu) {
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("ConstantsC: r must lie in (0, 1)");
  if (!(nu >= 0.0 && nu < 0.5)) throw InvalidArgument("ConstantsC: nu must lie in [0, 1/2)");
  const double sr = std::sqrt(r);
  const double denom = std::pow(r, nu - 0.5) - 1.0;
  return ConstantsC{1.0 / sr,
                    1.0 / (1.0 - sr),
                    1.0 / (sr * (1.0 - sr)),
                    sr / (1.0 - r),
                    1.0 / (1.0 - r),
                    1.0 / (sr * denom),
                    1.0 / (r * denom)};
}

std::vector<double> geometric_alphas(double alpha0, double r, int count) {
  std::vector<double> a(static_cast<std::size_t>(std::max(count, 0)));
  double v = alpha0;
  for (auto& x : a) {
    x = v;
    v *= r;
  }
  return a;
}

namespace {

void require_sequence(double alpha0, double r) {
  if (!(alpha0 > 0.0)) throw InvalidArgument("alpha0 must be positive");
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("r must lie in (0, 1)");
}

std::string describe(const char* which, double alpha0, double r, int k, double nu = -1.0) {
  std::ostringstream os;
  os << which << " alpha0=" << alpha0 << " r=" << r << " k=" << k;
  if (nu >= 0.0) os << " nu=" << nu;
  return os.str();
}

// tail[m] = sum_{j=m}^{k} 1/alpha_j for m = 0..k
std::vector<double> tail_sums(const std::vector<double>& alphas, int k) {
  std::vector<double> tail(static_cast<std::size_t>(k) + 1);
  double acc = 0.0;
  for (int m = k; m >= 0; --m) {
    acc += 1.0 / alphas[m];
    tail[m] = acc;
  }
  return tail;
}

}  // namespace

LemmaReport check_sum_estimates(double alpha0, double r, int k_max) {
  require_sequence(alpha0, r);
  if (k_max < 1) throw InvalidArgument("check_sum_estimates: k_max must be >= 1");
  const ConstantsC c = ConstantsC::from(r);
  const std::vector<double> alpha = geometric_alphas(alpha0, r, k_max + 2);

  LemmaReport report;
  report.lemma_id = "sum_estimates";
  for (int k = 0; k <= k_max; ++k) {
    const std::vector<double> tail = tail_sums(alpha, k);
    double s2 = 0.0, s3 = 0.0, s4 = 0.0, s5 = 0.0;
    for (int m = 0; m <= k; ++m) {
      const double a = alpha[m];
      s2 += std::pow(a, -0.5) * std::pow(tail[m], -0.5);
      s3 += std::pow(a, -0.5) / tail[m];
      s4 += (1.0 / a) * std::pow(tail[m], -0.5);
      s5 += (1.0 / a) / tail[m];
    }
    const double next = alpha[k + 1];
    report.record(1.0 / tail[0], c.c0 * c.c0 * next, describe("c0", alpha0, r, k));
    report.record(s2, c.c1, describe("c1", alpha0, r, k));
    report.record(s3, c.c2 * std::sqrt(next), describe("c2", alpha0, r, k));
    report.record(s4, c.c3 / std::sqrt(next), describe("c3", alpha0, r, k));
    report.record(s5, c.c4, describe("c4", alpha0, r, k));
  }
  return report;
}

LemmaReport check_sum_nu(double alpha0, double r, double nu, int k_max) {
  require_sequence(alpha0, r);
  if (!(nu >= 0.0 && nu < 0.5)) {
    throw InvalidArgument("check_sum_nu: nu must lie in [0, 1/2)");
  }
  if (k_max < 1) throw InvalidArgument("check_sum_nu: k_max must be >= 1");
  const ConstantsC c = ConstantsC::from(r, nu);
  const std::vector<double> alpha = geometric_alphas(alpha0, r, k_max + 2);

  LemmaReport report;
  report.lemma_id = "sum_nu";
  for (int k = 0; k <= k_max; ++k) {
    const std::vector<double> tail = tail_sums(alpha, k);
    double s0 = 0.0, s1 = 0.0;
    for (int m = 0; m <= k; ++m) {
      const double w = std::pow(alpha[m], nu - 0.5);
      s0 += w * std::pow(tail[m], -0.5);
      s1 += w / tail[m];
    }
    const double next = alpha[k + 1];
    report.record(s0, c.K0 * std::pow(next, nu), describe("K0", alpha0, r, k, nu));
    report.record(s1, c.K1 * std::pow(next, nu + 0.5), describe("K1", alpha0, r, k, nu));
  }
  return report;
}

double spectral_filter_norm(const Eigen::MatrixXd& T, const std::vector<double>& alphas, int m,
                            int l, double nu, bool times_adjoint) {
  const Eigen::Index q = T.cols();
  if (T.size() == 0) return 0.0;

  // Eigenpairs of T'T from the SVD of T: t_i = sigma_i^2 (zero beyond the
  // rank), which keeps the null space exactly zero instead of O(eps ||T||^2).
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_t(T, Eigen::ComputeFullV);
  const Eigen::VectorXd& sigma = svd_t.singularValues();
  Eigen::VectorXd filter(q);
  for (Eigen::Index i = 0; i < q; ++i) {
    const double t = i < sigma.size() ? sigma[i] * sigma[i] : 0.0;
    double g = 1.0;
    for (int j = m; j <= l; ++j) g *= alphas[j] / (alphas[j] + t);
    filter[i] = g * std::pow(t, nu);
  }
  const Eigen::MatrixXd& W = svd_t.matrixV();
  Eigen::MatrixXd X = W * filter.asDiagonal() * W.transpose();
  if (times_adjoint) X = X * T.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
  return svd.singularValues()(0);
}

namespace {

void require_range(int m, int l) {
  if (m < 0 || l < m) throw InvalidArgument("spectral check: need 0 <= m <= l");
}

double inverse_sum(const std::vector<double>& alphas, int m, int l) {
  double s = 0.0;
  for (int j = m; j <= l; ++j) s += 1.0 / alphas[j];
  return s;
}

std::string describe_spectral(const char* which, const Eigen::MatrixXd& T, double alpha0,
                              double r, int m, int l, double nu) {
  std::ostringstream os;
  os << which << " T=" << T.rows() << "x" << T.cols() << " alpha0=" << alpha0 << " r=" << r
     << " m=" << m << " l=" << l << " nu=" << nu;
  return os.str();
}

}  // namespace

LemmaReport check_spectral_nu(const Eigen::MatrixXd& T, double alpha0, double r, int m, int l,
                              double nu) {
  require_sequence(alpha0, r);
  require_range(m, l);
  if (!(nu >= 0.0 && nu <= 1.0)) throw InvalidArgument("check_spectral_nu: nu must lie in [0, 1]");
  const auto alphas = geometric_alphas(alpha0, r, l + 1);
  LemmaReport report;
  report.lemma_id = "spectral_nu";
  report.record(spectral_filter_norm(T, alphas, m, l, nu, false),
                std::pow(inverse_sum(alphas, m, l), -nu),
                describe_spectral("spectral_nu", T, alpha0, r, m, l, nu));
  return report;
}

LemmaReport check_spectral_half(const Eigen::MatrixXd& T, double alpha0, double r, int m, int l) {
  require_sequence(alpha0, r);
  require_range(m, l);
  const auto alphas = geometric_alphas(alpha0, r, l + 1);
  LemmaReport report;
  report.lemma_id = "spectral_half";
  report.record(spectral_filter_norm(T, alphas, m, l, 0.0, true),
                0.5 / std::sqrt(inverse_sum(alphas, m, l)),
                describe_spectral("spectral_half", T, alpha0, r, m, l, 0.5));
  return report;
}

LemmaReport check_spectral_halfnu(const Eigen::MatrixXd& T, double alpha0, double r, int m,
                                  int l, double nu) {
  require_sequence(alpha0, r);
  require_range(m, l);
  if (!(nu >= 0.0 && nu <= 0.5)) {
    throw InvalidArgument("check_spectral_halfnu: nu must lie in [0, 1/2]");
  }
  const auto alphas = geometric_alphas(alpha0, r, l + 1);
  LemmaReport report;
  report.lemma_id = "spectral_halfnu";
  report.record(spectral_filter_norm(T, alphas, m, l, nu, true),
                std::pow(inverse_sum(alphas, m, l), -nu - 0.5),
                describe_spectral("spectral_halfnu", T, alpha0, r, m, l, nu));
  return report;
}

double gtcc_probe(const FEOperators& ops, const NodeField& u, const NodeField& uhat) {
  if (u.size() != ops.dofs() || uhat.size() != ops.dofs()) {
    throw InvalidArgument("gtcc_probe: dimension mismatch");
  }
  if (u == uhat) throw InvalidArgument("gtcc_probe: u and uhat must differ");
  const StateSolution s = solve_state(ops, u);
  const StateSolution shat = solve_state(ops, uhat);
  const NodeField diff = shat.y - s.y;
  const double denom = l2_norm(ops, diff);
  if (denom <= 1e-14) throw DegeneratePair("gtcc_probe: ||F(uhat) - F(u)|| is numerically zero");
  const NodeField lin = apply_G(ops, NodeField(uhat - u), *s.factor);
  return l2_norm(ops, diff - lin) / denom;
}

double kappa_probe(const FEOperators& ops, const ActiveSet& active1, const ActiveSet& active2,
                   double tol) {
  if (active1 == active2) return 0.0;
  const SpdSolverPtr fac1 = factor_linearized(ops, active1);
  const SpdSolver mass(ops.M);
  const Eigen::VectorXd k2 = indicator_matrix(ops, active2);

  // (I - Q) and its M-adjoint I - M^{-1} (A + K2) (A + K1)^{-1} M.
  auto i_minus_q = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return v - apply_Q(ops, *fac1, active2, v);
  };
  auto i_minus_q_adj = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const Eigen::VectorXd t = fac1->solve(ops.M * v);
    return v - mass.solve(ops.A * t + k2.cwiseProduct(t));
  };
  auto normal = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return i_minus_q_adj(i_minus_q(v));
  };
  auto m_inner = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.dot(ops.M * b);
  };
  return operator_norm(normal, m_inner, ops.dofs(), tol, 5000);
}

double kappa_probe(const FEOperators& ops, const NodeField& u1, const NodeField& u2, double tol) {
  const StateSolution s1 = solve_state(ops, u1);
  const StateSolution s2 = solve_state(ops, u2);
  return kappa_probe(ops, s1.active, s2.active, tol);
}

namespace {

// T = U diag(sigma) V' with log-uniform singular values in [1e-3, 10].
Eigen::MatrixXd random_operator(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> dim(2, 8);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> logsv(-3.0, 1.0);
  const int rows = dim(gen);
  const int cols = dim(gen);
  Eigen::MatrixXd gu(rows, rows), gv(cols, cols);
  for (Eigen::Index i = 0; i < gu.size(); ++i) gu.data()[i] = normal(gen);
  for (Eigen::Index i = 0; i < gv.size(); ++i) gv.data()[i] = normal(gen);
  const Eigen::MatrixXd U = Eigen::HouseholderQR<Eigen::MatrixXd>(gu).householderQ();
  const Eigen::MatrixXd V = Eigen::HouseholderQR<Eigen::MatrixXd>(gv).householderQ();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(rows, cols);
  for (int i = 0; i < std::min(rows, cols); ++i) S(i, i) = std::pow(10.0, logsv(gen));
  return U * S * V.transpose();
}

}  // namespace

std::vector<LemmaReport> run_lemma_suite(CheckGrid grid, int matrices_per_check) {
  const std::vector<double> rs = grid == CheckGrid::Full ? std::vector<double>{0.3, 0.5, 0.7, 0.9}
                                                         : std::vector<double>{0.5, 0.9};
  const std::vector<double> alpha0s =
      grid == CheckGrid::Full ? std::vector<double>{0.5, 1.0, 4.0} : std::vector<double>{1.0};
  const std::vector<double> nus_sum{0.0, 0.1, 0.25, 0.4, 0.49};
  const std::vector<double> nus_spec{0.0, 0.1, 0.25, 0.4, 0.5, 1.0};
  const std::vector<double> nus_halfnu{0.0, 0.1, 0.25, 0.4, 0.5};
  const int k_max = 50;
  const int mats = grid == CheckGrid::Full ? matrices_per_check : std::min(matrices_per_check, 5);

  auto named = [](const char* id) {
    LemmaReport r;
    r.lemma_id = id;
    return r;
  };
  LemmaReport sum = named("sum_estimates"), sum_nu = named("sum_nu"),
              spec_nu = named("spectral_nu"), spec_half = named("spectral_half"),
              spec_halfnu = named("spectral_halfnu"), sharp = named("spectral_half_sharpness");

  std::mt19937_64 gen(20190611);
  std::uniform_int_distribution<int> first(0, 10);
  std::uniform_int_distribution<int> span(0, 10);

  for (double r : rs) {
    for (double a0 : alpha0s) {
      sum.merge(check_sum_estimates(a0, r, k_max));
      for (double nu : nus_sum) sum_nu.merge(check_sum_nu(a0, r, nu, k_max));

      for (int i = 0; i < mats; ++i) {
        const Eigen::MatrixXd T = random_operator(gen);
        const int m = first(gen);
        const int l = m + span(gen);
        for (double nu : nus_spec) spec_nu.merge(check_spectral_nu(T, a0, r, m, l, nu));
        spec_half.merge(check_spectral_half(T, a0, r, m, l));
        for (double nu : nus_halfnu) spec_halfnu.merge(check_spectral_halfnu(T, a0, r, m, l, nu));
      }

      // Scalar T = sqrt(alpha_m) attains the half-power bound at m = l.
      for (int m = 0; m <= 10; ++m) {
        const auto alphas = geometric_alphas(a0, r, m + 1);
        Eigen::MatrixXd T(1, 1);
        T(0, 0) = std::sqrt(alphas[m]);
        const double value = spectral_filter_norm(T, alphas, m, m, 0.0, true);
        const double bound = 0.5 * std::sqrt(alphas[m]);
        std::ostringstream os;
        os << "sharpness alpha0=" << a0 << " r=" << r << " m=" << m;
        sharp.record(0.999999 * bound, value, os.str());
      }
    }
  }
  return {sum, sum_nu, spec_nu, spec_half, spec_halfnu, sharp};
}

}  // namespace invsolve
