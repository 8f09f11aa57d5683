#include "invsolve/mesh_fem.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "invsolve/errors.hpp"

namespace invsolve {

namespace {

void require_dim(const FEOperators& ops, Eigen::Index n, const char* what) {
  if (n != ops.dofs()) {
    throw InvalidArgument(std::string(what) + ": dimension " + std::to_string(n) +
                          " does not match " + std::to_string(ops.dofs()) + " DOFs");
  }
}

}  // namespace

Mesh build_mesh(int nh) {
  if (nh < 3) {
    throw InvalidArgument("build_mesh: nh must be >= 3, got " + std::to_string(nh));
  }
  Mesh mesh;
  mesh.nh = nh;
  mesh.h = 1.0 / (nh - 1);

  const int nv = nh * nh;
  mesh.nodes.resize(nv);
  mesh.interior_index.assign(nv, -1);
  mesh.interior_vertices.reserve(static_cast<std::size_t>(nh - 2) * (nh - 2));
  for (int j = 0; j < nh; ++j) {
    for (int i = 0; i < nh; ++i) {
      const int v = i + j * nh;
      mesh.nodes[v] = {i * mesh.h, j * mesh.h};
      if (i > 0 && i < nh - 1 && j > 0 && j < nh - 1) {
        mesh.interior_index[v] = static_cast<int>(mesh.interior_vertices.size());
        mesh.interior_vertices.push_back(v);
      }
    }
  }

  mesh.triangles.reserve(2 * static_cast<std::size_t>(nh - 1) * (nh - 1));
  for (int j = 0; j + 1 < nh; ++j) {
    for (int i = 0; i + 1 < nh; ++i) {
      const int v00 = i + j * nh;
      const int v10 = v00 + 1;
      const int v01 = v00 + nh;
      const int v11 = v01 + 1;
      mesh.triangles.push_back({v00, v10, v11});
      mesh.triangles.push_back({v00, v11, v01});
    }
  }
  return mesh;
}

FEOperators assemble_operators(const Mesh& mesh) {
  const int n = mesh.dofs();
  std::vector<Eigen::Triplet<double>> a_trip;
  std::vector<Eigen::Triplet<double>> m_trip;
  a_trip.reserve(mesh.triangles.size() * 9);
  m_trip.reserve(mesh.triangles.size() * 9);

  FEOperators ops;
  ops.omega = Eigen::VectorXd::Zero(n);

  for (const auto& tri : mesh.triangles) {
    const Point2& p0 = mesh.nodes[tri[0]];
    const Point2& p1 = mesh.nodes[tri[1]];
    const Point2& p2 = mesh.nodes[tri[2]];
    const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    const double area = 0.5 * std::abs(det);

    // grad(phi_a) = (y_b - y_c, x_c - x_b) / det for (a, b, c) cyclic
    std::array<std::array<double, 2>, 3> grad;
    for (int a = 0; a < 3; ++a) {
      const Point2& pb = mesh.nodes[tri[(a + 1) % 3]];
      const Point2& pc = mesh.nodes[tri[(a + 2) % 3]];
      grad[a] = {(pb[1] - pc[1]) / det, (pc[0] - pb[0]) / det};
    }

    for (int a = 0; a < 3; ++a) {
      const int ia = mesh.interior_index[tri[a]];
      if (ia < 0) continue;
      ops.omega[ia] += area;
      for (int b = 0; b < 3; ++b) {
        const int ib = mesh.interior_index[tri[b]];
        if (ib < 0) continue;
        const double k = area * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
        const double m = area / 12.0 * (a == b ? 2.0 : 1.0);
        if (k != 0.0) a_trip.emplace_back(ia, ib, k);
        m_trip.emplace_back(ia, ib, m);
      }
    }
  }

  ops.A.resize(n, n);
  ops.A.setFromTriplets(a_trip.begin(), a_trip.end());
  ops.M.resize(n, n);
  ops.M.setFromTriplets(m_trip.begin(), m_trip.end());

  // Entries summed in different triangle orders can differ in the last bit;
  // mirror the lower triangle so symmetry is exact.
  for (SparseSymMatrix* S : {&ops.A, &ops.M}) {
    SparseSymMatrix lower = S->triangularView<Eigen::Lower>();
    SparseSymMatrix sym = lower.selfadjointView<Eigen::Lower>();
    sym.prune(0.0);
    *S = std::move(sym);
    S->makeCompressed();
  }

  ops.D = ops.omega / 3.0;
  return ops;
}

ActiveSet active_set(const NodeField& y) {
  ActiveSet active(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) active[i] = y[i] > 0.0;
  return active;
}

Eigen::VectorXd indicator_matrix(const FEOperators& ops, const ActiveSet& active) {
  require_dim(ops, static_cast<Eigen::Index>(active.size()), "indicator_matrix");
  Eigen::VectorXd k(ops.dofs());
  for (int i = 0; i < ops.dofs(); ++i) k[i] = active[i] ? ops.D[i] : 0.0;
  return k;
}

Eigen::VectorXd indicator_matrix(const FEOperators& ops, const NodeField& y) {
  require_dim(ops, y.size(), "indicator_matrix");
  return indicator_matrix(ops, active_set(y));
}

double l2_inner(const FEOperators& ops, const NodeField& v, const NodeField& w) {
  require_dim(ops, v.size(), "l2_inner");
  require_dim(ops, w.size(), "l2_inner");
  return v.dot(ops.M * w);
}

double l2_norm(const FEOperators& ops, const NodeField& v) {
  require_dim(ops, v.size(), "l2_norm");
  const double sq = v.dot(ops.M * v);
  return std::sqrt(std::max(sq, 0.0));
}

NodeField interpolate(const std::function<double(double, double)>& f, const Mesh& mesh) {
  NodeField values(mesh.dofs());
  for (int k = 0; k < mesh.dofs(); ++k) {
    const Point2& p = mesh.interior_node(k);
    const double v = f(p[0], p[1]);
    if (!std::isfinite(v)) {
      throw InvalidArgument("interpolate: non-finite value at (" + std::to_string(p[0]) +
                            ", " + std::to_string(p[1]) + ")");
    }
    values[k] = v;
  }
  return values;
}

SparseSymMatrix add_diagonal(const SparseSymMatrix& S, const Eigen::VectorXd& k) {
  SparseSymMatrix out = S;
  // The stiffness pattern always contains the diagonal.
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    if (k[i] != 0.0) out.coeffRef(i, i) += k[i];
  }
  return out;
}

void write_matrix_market(std::ostream& os, const SparseSymMatrix& S) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << S.rows() << ' ' << S.cols() << ' ' << S.nonZeros() << '\n';
  os << std::setprecision(17);
  for (int c = 0; c < S.outerSize(); ++c) {
    for (SparseSymMatrix::InnerIterator it(S, c); it; ++it) {
      os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
    }
  }
}

void write_matrix_market(std::ostream& os, const Eigen::VectorXd& diagonal) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << diagonal.size() << ' ' << diagonal.size() << ' ' << diagonal.size() << '\n';
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < diagonal.size(); ++i) {
    os << i + 1 << ' ' << i + 1 << ' ' << diagonal[i] << '\n';
  }
}

}  // namespace invsolve
