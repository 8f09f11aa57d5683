#pragma once

// Uniform P1 discretization of the unit square with homogeneous Dirichlet
// boundary conditions. Everything here is built once per mesh and shared
// read-only afterwards.

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace invsolve {

/// Coefficient vector of a piecewise-linear function over the interior nodes.
using NodeField = Eigen::VectorXd;

/// Symmetric sparse matrix over interior DOFs; both triangles are stored.
using SparseSymMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// Per-node flag `y_i > 0`.
using ActiveSet = std::vector<bool>;

using Point2 = std::array<double, 2>;

/// Friedrichs-Keller triangulation with nh x nh vertices.
///
/// Vertex (i, j) sits at (i*h, j*h) and has global index i + j*nh. Interior
/// vertices are numbered with x running fastest, so dense index
/// (i-1) + (j-1)*(nh-2). Every cell is split along its bottom-left to
/// top-right diagonal.
struct Mesh {
  int nh = 0;
  double h = 0.0;
  std::vector<Point2> nodes;
  /// Global vertex -> dense interior index, or -1 on the boundary.
  std::vector<int> interior_index;
  /// Dense interior index -> global vertex.
  std::vector<int> interior_vertices;
  std::vector<std::array<int, 3>> triangles;

  int dofs() const { return static_cast<int>(interior_vertices.size()); }
  const Point2& interior_node(int k) const { return nodes[interior_vertices[k]]; }
};

struct FEOperators {
  SparseSymMatrix A;      // stiffness
  SparseSymMatrix M;      // consistent mass
  Eigen::VectorXd D;      // lumped mass, omega / 3
  Eigen::VectorXd omega;  // support area of each interior basis function

  int dofs() const { return static_cast<int>(D.size()); }
};

/// Throws InvalidArgument for nh < 3.
Mesh build_mesh(int nh);

FEOperators assemble_operators(const Mesh& mesh);

/// Diagonal of K_y: (omega_i / 3) * [y_i > 0].
Eigen::VectorXd indicator_matrix(const FEOperators& ops, const NodeField& y);
Eigen::VectorXd indicator_matrix(const FEOperators& ops, const ActiveSet& active);

ActiveSet active_set(const NodeField& y);

/// sqrt(v' M v).
double l2_norm(const FEOperators& ops, const NodeField& v);

/// v' M w.
double l2_inner(const FEOperators& ops, const NodeField& v, const NodeField& w);

/// Nodal interpolation at interior vertices. Throws InvalidArgument on a
/// non-finite value.
NodeField interpolate(const std::function<double(double, double)>& f, const Mesh& mesh);

/// A + diag(k).
SparseSymMatrix add_diagonal(const SparseSymMatrix& S, const Eigen::VectorXd& k);

/// MatrixMarket coordinate dump (general storage, 1-based).
void write_matrix_market(std::ostream& os, const SparseSymMatrix& S);
void write_matrix_market(std::ostream& os, const Eigen::VectorXd& diagonal);

}  // namespace invsolve
