#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace invsolve {

/// Bad input to a public entry point (dimension mismatch, out-of-range parameter).
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Base for numerical failures inside a solve.
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A Cholesky factorization hit a non-positive pivot.
class NotSpdError : public SolverError {
public:
  using SolverError::SolverError;
};

/// An iteration hit its cap. Carries the last (or best) iterate and its residual.
class NoConvergence : public SolverError {
public:
  NoConvergence(const std::string& what, Eigen::VectorXd iterate, double residual,
                int iterations)
      : SolverError(what), iterate_(std::move(iterate)), residual_(residual),
        iterations_(iterations) {}

  const Eigen::VectorXd& iterate() const noexcept { return iterate_; }
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

private:
  Eigen::VectorXd iterate_;
  double residual_;
  int iterations_;
};

/// The GTCC ratio is undefined because F(u) and F(uhat) coincide numerically.
class DegeneratePair : public SolverError {
public:
  using SolverError::SolverError;
};

}  // namespace invsolve
