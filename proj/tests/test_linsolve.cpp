#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "invsolve/errors.hpp"
#include "invsolve/forward.hpp"
#include "invsolve/linsolve.hpp"
#include "oracles.hpp"

using namespace invsolve;

namespace {

Eigen::MatrixXd random_spd(std::mt19937_64& gen, int n, double shift) {
  Eigen::MatrixXd B(n, n);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = normal(gen);
  return B.transpose() * B + shift * Eigen::MatrixXd::Identity(n, n);
}

SparseSymMatrix sparse_of(const Eigen::MatrixXd& dense) { return dense.sparseView(); }

double inf_residual(const SparseSymMatrix& S, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  return (S * x - b).lpNorm<Eigen::Infinity>();
}

double inf_norm(const SparseSymMatrix& S) {
  return Eigen::MatrixXd(S).cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

TEST_CASE("factor_spd: diagonal matrix") {
  Eigen::VectorXd d(4);
  d << 2.0, 4.0, 0.5, 8.0;
  const SparseSymMatrix S = sparse_of(Eigen::MatrixXd(d.asDiagonal()));
  const SpdSolver solver(S);
  Eigen::VectorXd b(4);
  b << 1.0, 2.0, 3.0, 4.0;
  const Eigen::VectorXd x = solver.solve(b);
  for (int i = 0; i < 4; ++i) CHECK(x[i] == doctest::Approx(b[i] / d[i]).epsilon(1e-15));
}

TEST_CASE("factor_spd: stiffness solve against dense LU") {
  const Mesh mesh = build_mesh(9);
  const FEOperators ops = assemble_operators(mesh);
  const Eigen::VectorXd b = ops.M * Eigen::VectorXd::Ones(ops.dofs());
  const Eigen::VectorXd x = factor_spd(ops.A)->solve(b);
  const Eigen::VectorXd ref = Eigen::MatrixXd(ops.A).partialPivLu().solve(b);
  CHECK((x - ref).norm() <= 1e-10 * ref.norm());
  CHECK(inf_residual(ops.A, x, b) <=
        1e-10 * (inf_norm(ops.A) * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("factor_spd: A + K_y is SPD for any sign pattern") {
  std::mt19937_64 gen(11);
  const FEOperators ops = assemble_operators(build_mesh(9));
  for (int trial = 0; trial < 5; ++trial) {
    const ActiveSet active = oracle::random_active(gen, ops.dofs());
    const SparseSymMatrix AK = add_diagonal(ops.A, indicator_matrix(ops, active));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(AK)};
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
    SpdSolverPtr fac;
    CHECK_NOTHROW(fac = factor_spd(AK));
    const Eigen::VectorXd b = oracle::random_vector(gen, ops.dofs());
    const Eigen::VectorXd x = fac->solve(b);
    CHECK(inf_residual(AK, x, b) <=
          1e-10 * (inf_norm(AK) * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("factor_spd: indefinite matrix is rejected") {
  Eigen::MatrixXd S(2, 2);
  S << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(SpdSolver{sparse_of(S)}, NotSpdError);
  S << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(SpdSolver{sparse_of(S)}, NotSpdError);
}

TEST_CASE("cg_solve: identity converges in one iteration") {
  Eigen::VectorXd b(5);
  b << 1, -2, 3, 0.5, 7;
  const CgResult res = cg_solve([](const Eigen::VectorXd& x) { return x; }, b, euclidean_inner);
  CHECK(res.iterations == 1);
  CHECK((res.x - b).norm() <= 1e-15 * b.norm());
}

TEST_CASE("cg_solve: zero right-hand side") {
  const CgResult res = cg_solve([](const Eigen::VectorXd& x) { return x; },
                                Eigen::VectorXd::Zero(3), euclidean_inner);
  CHECK(res.iterations == 0);
  CHECK(res.x.isZero(0.0));
}

TEST_CASE("cg_solve: dense SPD system against direct solve") {
  std::mt19937_64 gen(3);
  const Eigen::MatrixXd S = random_spd(gen, 5, 0.5);
  const Eigen::VectorXd b = oracle::random_vector(gen, 5);
  IterSolveConfig cfg;
  const CgResult res = cg_solve([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(S * x); },
                                b, euclidean_inner, cfg);
  const Eigen::VectorXd ref = S.llt().solve(b);
  CHECK((S * res.x - b).norm() <= cfg.rel_tol * b.norm());
  CHECK((res.x - ref).norm() <= 1e-9 * ref.norm());
}

TEST_CASE("cg_solve: alpha I + G^2 against the dense operator") {
  std::mt19937_64 gen(5);
  const FEOperators ops = assemble_operators(build_mesh(9));
  const int n = ops.dofs();
  const ActiveSet active = oracle::random_active(gen, n);
  const SpdSolverPtr fac = factor_linearized(ops, active);
  const double alpha = 0.5;
  auto apply = [&](const Eigen::VectorXd& s) -> Eigen::VectorXd {
    return alpha * s + apply_G(ops, apply_G(ops, s, *fac), *fac);
  };
  auto m_inner = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.dot(ops.M * b);
  };

  // dense operator assembled column by column from unit vectors
  Eigen::MatrixXd dense(n, n);
  for (int j = 0; j < n; ++j) dense.col(j) = apply(Eigen::VectorXd::Unit(n, j));
  const Eigen::VectorXd b = oracle::random_vector(gen, n);
  const Eigen::VectorXd ref = dense.partialPivLu().solve(b);
  const CgResult res = cg_solve(apply, b, m_inner);
  CHECK((res.x - ref).norm() <= 1e-9 * ref.norm());
}

TEST_CASE("cg_solve: no convergence reports the best iterate") {
  std::mt19937_64 gen(9);
  const Eigen::MatrixXd S = random_spd(gen, 30, 1e-3);
  const Eigen::VectorXd b = oracle::random_vector(gen, 30);
  IterSolveConfig cfg;
  cfg.max_iter = 2;
  try {
    (void)cg_solve([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(S * x); }, b,
                   euclidean_inner, cfg);
    FAIL("expected NoConvergence");
  } catch (const NoConvergence& e) {
    CHECK(e.iterate().size() == 30);
    CHECK(e.residual() > cfg.rel_tol);
    CHECK(e.residual() < 1.0 + 1e-12);
    CHECK(e.iterations() == 2);
  }
}

TEST_CASE("cg_solve: M-orthogonality of final residual and search direction") {
  std::mt19937_64 gen(13);
  const FEOperators ops = assemble_operators(build_mesh(9));
  const ActiveSet active = oracle::random_active(gen, ops.dofs());
  const SpdSolverPtr fac = factor_linearized(ops, active);
  auto apply = [&](const Eigen::VectorXd& s) -> Eigen::VectorXd {
    return 0.1 * s + apply_G(ops, apply_G(ops, s, *fac), *fac);
  };
  auto m_inner = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.dot(ops.M * b);
  };
  IterSolveConfig cfg;
  cfg.rel_tol = 1e-10;
  const Eigen::VectorXd b = oracle::random_vector(gen, ops.dofs());
  const CgResult res = cg_solve(apply, b, m_inner, cfg);
  const double rn = std::sqrt(m_inner(res.last_residual, res.last_residual));
  const double pn = std::sqrt(m_inner(res.last_direction, res.last_direction));
  CHECK(std::abs(m_inner(res.last_residual, res.last_direction)) <= cfg.rel_tol * rn * pn + 1e-14 * pn * std::sqrt(m_inner(b, b)));
}

TEST_CASE("property: direct and iterative solves agree on random SPD systems") {
  std::mt19937_64 gen(17);
  std::uniform_int_distribution<int> dim(2, 200);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = dim(gen);
    CAPTURE(n);
    const Eigen::MatrixXd S = random_spd(gen, n, static_cast<double>(n));
    const Eigen::VectorXd b = oracle::random_vector(gen, n);
    const Eigen::VectorXd direct = SpdSolver(sparse_of(S)).solve(b);
    const Eigen::VectorXd iter =
        cg_solve([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(S * x); }, b,
                 euclidean_inner)
            .x;
    CHECK((direct - iter).norm() <= 1e-8 * direct.norm());
  }
}

TEST_CASE("operator_norm: scaled identity") {
  const double est = operator_norm([](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); },
                                   euclidean_inner, 7, 1e-12);
  CHECK(est == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("operator_norm: random PSD against dense eigensolver") {
  std::mt19937_64 gen(19);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd S = random_spd(gen, 6, 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
    const double ref = std::sqrt(eig.eigenvalues().maxCoeff());
    const double est = operator_norm([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(S * x); },
                                     euclidean_inner, 6, 1e-14, 100000);
    CHECK(std::abs(est - ref) <= 1e-6 * ref);
  }
}

TEST_CASE("operator_norm: zero operator") {
  CHECK(operator_norm([](const Eigen::VectorXd& x) { return Eigen::VectorXd(0.0 * x); },
                      euclidean_inner, 4) == 0.0);
}
