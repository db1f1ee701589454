// The SPSD multiplier operator S, its kernel at singular vertices, and
// plain-text export of the assembled system.
#pragma once

#include "hmfe/hybrid.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <Eigen/Sparse>

#include <optional>
#include <ostream>
#include <vector>

namespace hmfe {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// s(lambda, mu) = (A sigma_lambda, sigma_mu), applied element by element or
/// through an assembled sparse matrix.
class SchurOperator {
 public:
  explicit SchurOperator(const HybridSystem& sys) : sys_(&sys) {}

  const HybridSystem& system() const { return *sys_; }
  int size() const { return sys_->space().total_dofs(); }

  /// Element-by-element product; contributions are summed in element order.
  Eigen::VectorXd apply_matrix_free(const Eigen::VectorXd& x) const {
    const int ne = sys_->num_elements();
    std::vector<Eigen::VectorXd> local(ne);
    parallel_for(ne, [&](int t) { local[t] = sys_->condensation(t).schur_apply(sys_->gather(x, t)); });
    Eigen::VectorXd y = Eigen::VectorXd::Zero(size());
    for (int t = 0; t < ne; ++t) sys_->scatter_add(t, local[t], y);
    return y;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    if (matrix_) return *matrix_ * x;
    return apply_matrix_free(x);
  }

  const SparseMatrix& assemble() {
    if (matrix_) return *matrix_;
    std::vector<Eigen::Triplet<double>> trip;
    for (int t = 0; t < sys_->num_elements(); ++t) {
      const auto dofs = sys_->space().element_dofs(t);
      const auto& s = sys_->condensation(t).schur();
      for (std::size_t i = 0; i < dofs.size(); ++i) {
        if (dofs[i] < 0) continue;
        for (std::size_t j = 0; j < dofs.size(); ++j)
          if (dofs[j] >= 0) trip.emplace_back(dofs[i], dofs[j], s(int(i), int(j)));
      }
    }
    SparseMatrix m(size(), size());
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    matrix_ = std::move(m);
    return *matrix_;
  }

  bool assembled() const { return matrix_.has_value(); }
  const SparseMatrix& matrix() const {
    if (!matrix_) throw std::logic_error("SchurOperator: matrix not assembled");
    return *matrix_;
  }

  Eigen::VectorXd diagonal() const {
    if (matrix_) return matrix_->diagonal();
    Eigen::VectorXd d = Eigen::VectorXd::Zero(size());
    for (int t = 0; t < sys_->num_elements(); ++t) sys_->scatter_add(t, sys_->condensation(t).schur().diagonal(), d);
    return d;
  }

  /// Orthonormal basis of ker(S), sparse; zero columns when the grid has no
  /// interior singular vertex.
  const SparseMatrix& kernel_basis() const { return kernel_; }
  void set_kernel_basis(SparseMatrix z) { kernel_ = std::move(z); }

  /// Removes the kernel component: x - Z Z^T x.
  void project(Eigen::VectorXd& x) const {
    if (kernel_.cols() > 0) x -= kernel_ * (kernel_.transpose() * x);
  }

 private:
  const HybridSystem* sys_;
  std::optional<SparseMatrix> matrix_;
  SparseMatrix kernel_;
};

/// Coefficients of the edge dual basis function psi_a^F (the L2 dual of the
/// Lagrange node at endpoint `v` of edge e) in the nodal trace basis.
inline Eigen::VectorXd dual_vertex_function(const HybridSystem& sys, int e, int v) {
  const auto& eb = sys.bases();
  const int node = sys.mesh().edges[e][0] == v ? 0 : eb.trace.size() - 1;
  const Eigen::MatrixXd mass = sys.mesh().edge_length(e) * eb.trace_mass;
  return mass.ldlt().solve(Eigen::VectorXd::Unit(eb.trace.size(), node));
}

/// Local coupling <psi_a^F e_i, [phi_a^K T_c]> at vertex v; rows (edge, i),
/// columns (triangle, c). Built from the element trace blocks C_K.
inline Eigen::MatrixXd vertex_coupling_matrix(const HybridSystem& sys, int v, const std::vector<int>& incident_edges,
                                              const std::vector<int>& tris, std::vector<int>& patch_edges) {
  const TriMesh& m = sys.mesh();
  const int nte = sys.bases().n_trace_edge();
  patch_edges.clear();
  for (int e : incident_edges)
    if (!m.boundary_edge[e]) patch_edges.push_back(e);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2 * patch_edges.size(), 3 * tris.size());
  for (std::size_t f = 0; f < patch_edges.size(); ++f) {
    const int e = patch_edges[f];
    const Eigen::VectorXd psi = dual_vertex_function(sys, e, v);
    for (std::size_t kk = 0; kk < tris.size(); ++kk) {
      const int t = tris[kk];
      int j = -1, lv = -1;
      for (int q = 0; q < 3; ++q) {
        if (m.edge_of_triangle[t][q] == e) j = q;
        if (m.triangles[t][q] == v) lv = q;
      }
      if (j < 0) continue;
      const auto& c = sys.condensation(t).matrices().C;
      for (int i = 0; i < 2; ++i)
        for (int cc = 0; cc < 3; ++cc) {
          double s = 0.0;
          for (int r = 0; r < psi.size(); ++r) s += psi(r) * c(j * nte + 2 * r + i, 3 * lv + cc);
          g(2 * f + i, 3 * kk + cc) = s;
        }
    }
  }
  return g;
}

inline Eigen::MatrixXd vertex_coupling_matrix(const HybridSystem& sys, int v, std::vector<int>& patch_edges) {
  return vertex_coupling_matrix(sys, v, sys.mesh().vertex_edges()[v], sys.mesh().vertex_triangles()[v], patch_edges);
}

/// Kernel of S: for every interior singular vertex, the multipliers of the
/// vertex dual space that annihilate all jumps of the vertex stress space.
/// Vectors of vertices with overlapping support are orthonormalized together,
/// so the result is an orthonormal sparse basis.
inline SparseMatrix detect_kernel(const HybridSystem& sys, const VertexSingularityReport& report,
                                  double rank_tol = 1e-10) {
  const int n = sys.space().total_dofs();
  const TriMesh& m = sys.mesh();
  const auto ve = m.vertex_edges();
  const auto vt = m.vertex_triangles();

  struct Local {
    std::vector<int> dofs;  // sorted
    Eigen::MatrixXd cols;   // dofs.size() x count
  };
  std::vector<Local> locals;
  for (int v : report.interior_singular_vertices) {
    std::vector<int> patch_edges;
    const Eigen::MatrixXd g = vertex_coupling_matrix(sys, v, ve[v], vt[v], patch_edges);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g.transpose(), Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > rank_tol * smax) ++rank;
    if (rank == g.rows()) continue;
    Local loc;
    for (int e : patch_edges)
      for (int d : sys.space().edge_dofs(e)) loc.dofs.push_back(d);
    std::sort(loc.dofs.begin(), loc.dofs.end());
    loc.cols = Eigen::MatrixXd::Zero(loc.dofs.size(), g.rows() - rank);
    for (int col = rank; col < g.rows(); ++col) {
      const Eigen::VectorXd y = svd.matrixV().col(col);
      for (std::size_t f = 0; f < patch_edges.size(); ++f) {
        const int e = patch_edges[f];
        const Eigen::VectorXd psi = dual_vertex_function(sys, e, v);
        const int first = sys.space().first_dof(e);
        for (int r = 0; r < psi.size(); ++r)
          for (int i = 0; i < 2; ++i) {
            const int d = first + 2 * r + i;
            const auto pos = std::lower_bound(loc.dofs.begin(), loc.dofs.end(), d) - loc.dofs.begin();
            loc.cols(pos, col - rank) += y(2 * int(f) + i) * psi(r);
          }
      }
    }
    locals.push_back(std::move(loc));
  }

  // Group vertices sharing DOFs (union-find over the local supports).
  std::vector<int> parent(locals.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  std::vector<int> owner(n, -1);
  for (std::size_t i = 0; i < locals.size(); ++i)
    for (int d : locals[i].dofs) {
      if (owner[d] < 0) owner[d] = static_cast<int>(i);
      else parent[find(static_cast<int>(i))] = find(owner[d]);
    }
  std::vector<std::vector<int>> groups(locals.size());
  for (std::size_t i = 0; i < locals.size(); ++i) groups[find(static_cast<int>(i))].push_back(static_cast<int>(i));

  std::vector<Eigen::Triplet<double>> trip;
  int ncols = 0;
  for (const auto& grp : groups) {
    if (grp.empty()) continue;
    std::vector<int> dofs;
    int count = 0;
    for (int i : grp) {
      dofs.insert(dofs.end(), locals[i].dofs.begin(), locals[i].dofs.end());
      count += static_cast<int>(locals[i].cols.cols());
    }
    std::sort(dofs.begin(), dofs.end());
    dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(dofs.size(), count);
    int c0 = 0;
    for (int i : grp) {
      for (std::size_t r = 0; r < locals[i].dofs.size(); ++r) {
        const auto pos = std::lower_bound(dofs.begin(), dofs.end(), locals[i].dofs[r]) - dofs.begin();
        z.row(pos).segment(c0, locals[i].cols.cols()) = locals[i].cols.row(r);
      }
      c0 += static_cast<int>(locals[i].cols.cols());
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
    qr.setThreshold(rank_tol);
    const int r = static_cast<int>(qr.rank());
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(z.rows(), r);
    for (int j = 0; j < r; ++j)
      for (int i = 0; i < q.rows(); ++i)
        if (q(i, j) != 0.0) trip.emplace_back(dofs[i], ncols + j, q(i, j));
    ncols += r;
  }
  SparseMatrix out(n, ncols);
  out.setFromTriplets(trip.begin(), trip.end());
  out.makeCompressed();
  return out;
}

struct SchurOptions {
  bool assemble = true;
  bool detect_kernel = true;
  double kappa0 = 0.1;
};

/// Builds S (assembled or matrix-free) and attaches its kernel basis.
inline SchurOperator assemble_schur(const HybridSystem& sys, const SchurOptions& opt = {}) {
  SchurOperator s(sys);
  if (opt.assemble) s.assemble();
  if (opt.detect_kernel) s.set_kernel_basis(detect_kernel(sys, singularity_report(sys.mesh(), opt.kappa0)));
  else s.set_kernel_basis(SparseMatrix(sys.space().total_dofs(), 0));
  return s;
}

/// "triplets rows cols nnz" followed by 0-based "row col value" lines.
inline void write_triplets(std::ostream& out, const SparseMatrix& m) {
  out << "triplets " << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  out.precision(17);
  for (int c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

/// "vector n" followed by one value per line.
inline void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  out << "vector " << v.size() << '\n';
  out.precision(17);
  for (int i = 0; i < v.size(); ++i) out << v(i) << '\n';
}

}  // namespace hmfe
