// Vector P2 Lagrange spaces with zero boundary values, the primal elastic
// operator on them, uniform mesh hierarchies, and the transfer from a P2
// space to the multiplier space of the refined mesh.
#pragma once

#include "hmfe/element.hpp"
#include "hmfe/hybrid.hpp"
#include "hmfe/schur.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

namespace hmfe {

/// Continuous vector P2 on a mesh, homogeneous Dirichlet on the boundary.
/// Scalar nodes are the mesh vertices followed by one node per edge
/// (node id num_nodes + e). Free DOFs are numbered 2 * free_node + component.
class P2Space {
 public:
  explicit P2Space(const TriMesh& mesh) : mesh_(&mesh) {
    const int nv = mesh.num_nodes();
    const int n = nv + mesh.num_edges();
    free_.assign(n, -1);
    for (int v = 0; v < nv; ++v)
      if (!mesh.boundary_vertex[v]) free_[v] = nfree_++;
    for (int e = 0; e < mesh.num_edges(); ++e)
      if (!mesh.boundary_edge[e]) free_[nv + e] = nfree_++;
  }

  const TriMesh& mesh() const { return *mesh_; }
  int num_nodes() const { return static_cast<int>(free_.size()); }
  int num_free_nodes() const { return nfree_; }
  int size() const { return 2 * nfree_; }
  int free_index(int node) const { return free_[node]; }

  /// Local node order: vertices 0..2, then the midpoint of local edge j.
  std::array<int, 6> element_nodes(int t) const {
    const auto& tri = mesh_->triangles[t];
    const int nv = mesh_->num_nodes();
    return {tri[0], tri[1], tri[2], nv + mesh_->edge_of_triangle[t][0], nv + mesh_->edge_of_triangle[t][1],
            nv + mesh_->edge_of_triangle[t][2]};
  }

  Point node_point(int node) const {
    const int nv = mesh_->num_nodes();
    if (node < nv) return mesh_->nodes[node];
    const auto& e = mesh_->edges[node - nv];
    return 0.5 * (mesh_->nodes[e[0]] + mesh_->nodes[e[1]]);
  }

  /// One block per mesh vertex: the vertex and the midpoints of its edges,
  /// free DOFs only.
  std::vector<Block> vertex_patch_blocks() const {
    std::vector<Block> blocks;
    const auto ve = mesh_->vertex_edges();
    const int nv = mesh_->num_nodes();
    for (int v = 0; v < nv; ++v) {
      Block b;
      auto add = [&](int node) {
        if (free_[node] >= 0) {
          b.push_back(2 * free_[node]);
          b.push_back(2 * free_[node] + 1);
        }
      };
      add(v);
      for (int e : ve[v]) add(nv + e);
      if (!b.empty()) {
        std::sort(b.begin(), b.end());
        blocks.push_back(std::move(b));
      }
    }
    return blocks;
  }

 private:
  const TriMesh* mesh_;
  std::vector<int> free_;
  int nfree_ = 0;
};

/// a_H(w, v) = 2 mu (eps w, eps v) + lambda (P0 div w, P0 div v) on the free DOFs.
inline SparseMatrix assemble_p2_operator(const P2Space& space, const MaterialParams& mat) {
  std::vector<Eigen::Triplet<double>> trip;
  const TriMesh& m = space.mesh();
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto k = coarse_p2_matrices(ElementGeometry(m, t), mat);
    const auto nodes = space.element_nodes(t);
    for (int a = 0; a < 6; ++a) {
      const int fa = space.free_index(nodes[a]);
      if (fa < 0) continue;
      for (int b = 0; b < 6; ++b) {
        const int fb = space.free_index(nodes[b]);
        if (fb < 0) continue;
        for (int s = 0; s < 2; ++s)
          for (int r = 0; r < 2; ++r) trip.emplace_back(2 * fa + s, 2 * fb + r, k(2 * a + s, 2 * b + r));
      }
    }
  }
  SparseMatrix a(space.size(), space.size());
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  return a;
}

/// Meshes obtained by repeated red refinement; level 0 is the coarsest.
/// refinements[l] maps level l to level l+1.
class MeshHierarchy {
 public:
  MeshHierarchy(TriMesh base, int refinements) {
    if (refinements < 0) throw std::invalid_argument("MeshHierarchy: negative refinement count");
    meshes_.push_back(std::make_unique<TriMesh>(std::move(base)));
    for (int l = 0; l < refinements; ++l) {
      RefinedMesh r = uniform_refine(*meshes_.back());
      meshes_.push_back(std::make_unique<TriMesh>(std::move(r.mesh)));
      r.mesh = TriMesh();
      lineage_.push_back(std::move(r));
    }
  }

  /// Unit square hierarchy ending at resolution n = 2^L, starting from 1/h = 1.
  static MeshHierarchy unit_square(int n) {
    int levels = 0;
    while ((1 << levels) < n) ++levels;
    if ((1 << levels) != n) throw std::invalid_argument("MeshHierarchy: resolution must be a power of two");
    return MeshHierarchy(uniform_mesh(1), levels);
  }

  int num_levels() const { return static_cast<int>(meshes_.size()); }
  const TriMesh& mesh(int level) const { return *meshes_.at(level); }
  const TriMesh& finest() const { return *meshes_.back(); }
  /// Parent and child-slot maps from level l+1 to level l.
  const RefinedMesh& lineage(int level) const { return lineage_.at(level); }

 private:
  std::vector<std::unique_ptr<TriMesh>> meshes_;
  std::vector<RefinedMesh> lineage_;
};

/// Harmonic-extension prolongation from P2 on a coarse mesh to P2 on its
/// red refinement, as a matrix from coarse free DOFs to fine DOFs indexed
/// 2 * node + component over all fine nodes (boundary rows are zero).
///
/// Values on the edges of each coarse triangle are those of the coarse
/// function; the three fine nodes interior to it are the discrete
/// a_h-harmonic extension.
inline SparseMatrix harmonic_extension_all_nodes(const P2Space& coarse, const P2Space& fine, const RefinedMesh& lin,
                                                 const MaterialParams& mat) {
  const TriMesh& cm = coarse.mesh();
  const TriMesh& fm = fine.mesh();
  static const LagrangeBasis2D p2(2);
  std::vector<std::vector<int>> children(cm.num_triangles());
  for (int t = 0; t < fm.num_triangles(); ++t) children[lin.parent[t]].push_back(t);

  std::vector<char> done(fine.num_nodes(), 0);
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < cm.num_triangles(); ++c) {
    const ElementGeometry gc(cm, c);
    const auto cnodes = coarse.element_nodes(c);
    // Local numbering of the fine P2 nodes of this coarse triangle.
    std::map<int, int> local;
    std::vector<int> fnodes;
    std::vector<char> interior;
    int middle = -1;
    for (int t : children[c]) {
      if (lin.child_slot[t] == 3) middle = t;
      for (int n : fine.element_nodes(t))
        if (local.emplace(n, static_cast<int>(fnodes.size())).second) fnodes.push_back(n);
    }
    if (middle < 0 || fnodes.size() != 15) throw std::logic_error("harmonic_extension: refinement lineage mismatch");
    interior.assign(fnodes.size(), 0);
    for (int j = 0; j < 3; ++j) interior[local.at(fm.num_nodes() + fm.edge_of_triangle[middle][j])] = 1;

    // Coarse basis values at every fine node: 15 x 6.
    Eigen::MatrixXd eval(15, 6);
    for (int i = 0; i < 15; ++i) eval.row(i) = p2.eval(gc.to_reference(fine.node_point(fnodes[i]))).transpose();

    // Fine stiffness on the four children, 30 x 30 over the local nodes.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(30, 30);
    for (int t : children[c]) {
      const auto k = coarse_p2_matrices(ElementGeometry(fm, t), mat);
      const auto nodes = fine.element_nodes(t);
      for (int p = 0; p < 6; ++p)
        for (int q = 0; q < 6; ++q)
          for (int s = 0; s < 2; ++s)
            for (int r = 0; r < 2; ++r)
              a(2 * local.at(nodes[p]) + s, 2 * local.at(nodes[q]) + r) += k(2 * p + s, 2 * q + r);
    }
    std::vector<int> ii, bb;
    for (int i = 0; i < 15; ++i)
      for (int s = 0; s < 2; ++s) (interior[i] ? ii : bb).push_back(2 * i + s);
    Eigen::MatrixXd aii(ii.size(), ii.size()), aib(ii.size(), bb.size());
    for (std::size_t i = 0; i < ii.size(); ++i) {
      for (std::size_t j = 0; j < ii.size(); ++j) aii(i, j) = a(ii[i], ii[j]);
      for (std::size_t j = 0; j < bb.size(); ++j) aib(i, j) = a(ii[i], bb[j]);
    }
    // Map coarse local DOFs (2*p + r) -> values at all 30 fine local DOFs.
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(30, 12);
    for (int i = 0; i < 15; ++i)
      for (int p = 0; p < 6; ++p)
        for (int s = 0; s < 2; ++s) full(2 * i + s, 2 * p + s) = eval(i, p);
    Eigen::MatrixXd boundary(bb.size(), 12);
    for (std::size_t j = 0; j < bb.size(); ++j) boundary.row(j) = full.row(bb[j]);
    const Eigen::MatrixXd inner = -aii.ldlt().solve(aib * boundary);
    for (std::size_t i = 0; i < ii.size(); ++i) full.row(ii[i]) = inner.row(i);

    for (int i = 0; i < 15; ++i) {
      const int n = fnodes[i];
      if (done[n] || fine.free_index(n) < 0) continue;
      done[n] = 1;
      for (int s = 0; s < 2; ++s)
        for (int p = 0; p < 6; ++p) {
          const int fc = coarse.free_index(cnodes[p]);
          if (fc < 0) continue;
          for (int r = 0; r < 2; ++r) {
            const double v = full(2 * i + s, 2 * p + r);
            if (v != 0.0) trip.emplace_back(2 * n + s, 2 * fc + r, v);
          }
        }
    }
  }
  SparseMatrix out(2 * fine.num_nodes(), coarse.size());
  out.setFromTriplets(trip.begin(), trip.end());
  out.makeCompressed();
  return out;
}

/// Same prolongation restricted to the fine free DOFs.
inline SparseMatrix harmonic_extension(const P2Space& coarse, const P2Space& fine, const RefinedMesh& lin,
                                       const MaterialParams& mat) {
  const SparseMatrix all = harmonic_extension_all_nodes(coarse, fine, lin, mat);
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < all.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(all, c); it; ++it) {
      const int node = static_cast<int>(it.row()) / 2;
      const int f = fine.free_index(node);
      if (f >= 0) trip.emplace_back(2 * f + static_cast<int>(it.row()) % 2, c, it.value());
    }
  SparseMatrix out(fine.size(), coarse.size());
  out.setFromTriplets(trip.begin(), trip.end());
  out.makeCompressed();
  return out;
}

/// Per-edge L2 projection of a quadratic trace onto the multiplier trace
/// space: (k+2) x 3, columns for the values at t = 0, 1/2, 1.
inline Eigen::MatrixXd edge_trace_projection(const ElementBases& eb) {
  static const LagrangeBasis1D q2(2);
  const int nt = eb.trace.size();
  Eigen::MatrixXd n = Eigen::MatrixXd::Zero(nt, 3);
  const QuadratureRule1D rule = edge_rule(2 * (eb.k + 2) + 2);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const double t = rule.points[q];
    n += rule.weights[q] * eb.trace.eval(t) * q2.eval(t).transpose();
  }
  return eb.trace_mass.ldlt().solve(n);
}

/// Q_h: fine P2 DOFs (2 * node + component over all nodes) to multipliers.
inline SparseMatrix trace_projection(const P2Space& fine, const HybridSystem& sys) {
  const TriMesh& m = sys.mesh();
  const Eigen::MatrixXd qhat = edge_trace_projection(sys.bases());
  const int nv = m.num_nodes();
  std::vector<Eigen::Triplet<double>> trip;
  for (int e = 0; e < m.num_edges(); ++e) {
    const int first = sys.space().first_dof(e);
    if (first < 0) continue;
    const std::array<int, 3> nodes{m.edges[e][0], nv + e, m.edges[e][1]};
    for (int r = 0; r < qhat.rows(); ++r)
      for (int j = 0; j < 3; ++j)
        if (qhat(r, j) != 0.0)
          for (int s = 0; s < 2; ++s) trip.emplace_back(first + 2 * r + s, 2 * nodes[j] + s, qhat(r, j));
  }
  SparseMatrix q(sys.space().total_dofs(), 2 * fine.num_nodes());
  q.setFromTriplets(trip.begin(), trip.end());
  q.makeCompressed();
  return q;
}

/// I_H^h = Q_h * harmonic extension, from coarse P2 free DOFs to the
/// multipliers of `sys`, whose mesh must be the red refinement of the coarse
/// mesh described by `lin`.
inline SparseMatrix intergrid_operator(const P2Space& coarse, const HybridSystem& sys, const RefinedMesh& lin) {
  if (static_cast<int>(lin.parent.size()) != sys.mesh().num_triangles())
    throw std::invalid_argument("intergrid_operator: lineage does not match the fine mesh");
  const P2Space fine(sys.mesh());
  const SparseMatrix ext = harmonic_extension_all_nodes(coarse, fine, lin, sys.material());
  SparseMatrix i = trace_projection(fine, sys) * ext;
  i.prune(0.0);
  i.makeCompressed();
  return i;
}

}  // namespace hmfe
