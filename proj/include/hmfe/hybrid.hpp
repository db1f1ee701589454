// Global multiplier space and the hybridized discretization: condensation of
// every element, multiplier right-hand side, and local field recovery.
#pragma once

#include "hmfe/element.hpp"
#include "hmfe/local_condensation.hpp"
#include "hmfe/mesh.hpp"
#include "hmfe/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <memory>
#include <stdexcept>
#include <vector>

namespace hmfe {

using Block = std::vector<int>;

/// Vector-valued degree-(k+1) polynomials on interior edges, zero on the
/// boundary. DOFs are numbered by (edge index, node along the edge from its
/// lower-indexed vertex, component).
class MultiplierSpace {
 public:
  MultiplierSpace(const TriMesh& mesh, int k) : mesh_(&mesh), k_(k), dpe_(2 * (k + 2)) {
    if (k < 0) throw std::invalid_argument("MultiplierSpace: k must be >= 0");
    first_dof_.assign(mesh.num_edges(), -1);
    for (int e = 0; e < mesh.num_edges(); ++e) {
      if (mesh.boundary_edge[e]) continue;
      first_dof_[e] = total_;
      for (int i = 0; i < dpe_; ++i) edge_of_dof_.push_back(e);
      total_ += dpe_;
    }
  }

  const TriMesh& mesh() const { return *mesh_; }
  int k() const { return k_; }
  int dofs_per_edge() const { return dpe_; }
  int total_dofs() const { return total_; }
  int first_dof(int e) const { return first_dof_[e]; }
  const std::vector<int>& edge_of_dof() const { return edge_of_dof_; }

  /// Element-local multiplier index -> global DOF (-1 on boundary edges).
  std::vector<int> element_dofs(int t) const {
    std::vector<int> out(3 * dpe_, -1);
    for (int j = 0; j < 3; ++j) {
      const int f = first_dof_[mesh_->edge_of_triangle[t][j]];
      if (f < 0) continue;
      for (int i = 0; i < dpe_; ++i) out[j * dpe_ + i] = f + i;
    }
    return out;
  }

  std::vector<int> edge_dofs(int e) const {
    std::vector<int> out;
    if (first_dof_[e] < 0) return out;
    for (int i = 0; i < dpe_; ++i) out.push_back(first_dof_[e] + i);
    return out;
  }

  /// One block per interior edge.
  std::vector<Block> edge_blocks() const {
    std::vector<Block> blocks;
    for (int e = 0; e < mesh_->num_edges(); ++e)
      if (first_dof_[e] >= 0) blocks.push_back(edge_dofs(e));
    return blocks;
  }

  /// One block per element: the DOFs of its interior edges.
  std::vector<Block> element_blocks() const {
    std::vector<Block> blocks;
    for (int t = 0; t < mesh_->num_triangles(); ++t) {
      Block b;
      for (int j = 0; j < 3; ++j) {
        const auto d = edge_dofs(mesh_->edge_of_triangle[t][j]);
        b.insert(b.end(), d.begin(), d.end());
      }
      if (!b.empty()) blocks.push_back(std::move(b));
    }
    return blocks;
  }

  /// One block per vertex: the DOFs of all interior edges sharing it.
  std::vector<Block> vertex_patch_blocks() const {
    std::vector<Block> blocks;
    const auto ve = mesh_->vertex_edges();
    for (int v = 0; v < mesh_->num_nodes(); ++v) {
      Block b;
      for (int e : ve[v]) {
        const auto d = edge_dofs(e);
        b.insert(b.end(), d.begin(), d.end());
      }
      if (!b.empty()) {
        std::sort(b.begin(), b.end());
        blocks.push_back(std::move(b));
      }
    }
    return blocks;
  }

 private:
  const TriMesh* mesh_;
  int k_;
  int dpe_;
  int total_ = 0;
  std::vector<int> first_dof_;
  std::vector<int> edge_of_dof_;
};

/// Piecewise stress and displacement coefficients (sigma_h, u_h).
struct FieldSolution {
  std::vector<Eigen::VectorXd> stress;
  std::vector<Eigen::VectorXd> displacement;
};

/// Hybridized mixed discretization on a fixed mesh, degree k and material.
/// Holds one LocalCondensation per element; the mesh must outlive it.
class HybridSystem {
 public:
  HybridSystem(const TriMesh& mesh, int k, const MaterialParams& mat, int quad_boost = 0)
      : mesh_(&mesh), k_(k), mat_(mat), bases_(std::make_shared<ElementBases>(k, quad_boost)), space_(mesh, k) {
    if (k < 0 || k > 3) throw std::invalid_argument("HybridSystem: supported degrees are k = 0..3");
    std::vector<std::unique_ptr<LocalCondensation>> tmp(mesh.num_triangles());
    parallel_for(mesh.num_triangles(), [&](int t) {
      tmp[t] = std::make_unique<LocalCondensation>(ElementGeometry(mesh, t), *bases_, mat_);
    });
    cond_.reserve(tmp.size());
    for (auto& c : tmp) cond_.push_back(std::move(*c));
  }

  const TriMesh& mesh() const { return *mesh_; }
  int k() const { return k_; }
  const MaterialParams& material() const { return mat_; }
  const ElementBases& bases() const { return *bases_; }
  const MultiplierSpace& space() const { return space_; }
  const LocalCondensation& condensation(int t) const { return cond_[t]; }
  int num_elements() const { return mesh_->num_triangles(); }

  /// Local multiplier vector of element t (zeros on boundary edges).
  Eigen::VectorXd gather(const Eigen::VectorXd& global, int t) const {
    const auto dofs = space_.element_dofs(t);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<int>(dofs.size()));
    for (std::size_t i = 0; i < dofs.size(); ++i)
      if (dofs[i] >= 0) out(static_cast<int>(i)) = global(dofs[i]);
    return out;
  }

  void scatter_add(int t, const Eigen::VectorXd& local, Eigen::VectorXd& global) const {
    const auto dofs = space_.element_dofs(t);
    for (std::size_t i = 0; i < dofs.size(); ++i)
      if (dofs[i] >= 0) global(dofs[i]) += local(static_cast<int>(i));
  }

  std::vector<Eigen::VectorXd> load_moments_all(const LoadFunction& f) const {
    std::vector<Eigen::VectorXd> out(num_elements());
    parallel_for(num_elements(), [&](int t) { out[t] = load_moments(cond_[t].geometry(), *bases_, f); });
    return out;
  }

  /// b(mu) = -(f, u_mu), assembled from the condensed local loads.
  Eigen::VectorXd assemble_rhs(const LoadFunction& f) const {
    const auto moments = load_moments_all(f);
    std::vector<Eigen::VectorXd> local(num_elements());
    parallel_for(num_elements(), [&](int t) { local[t] = cond_[t].condensed_load(moments[t]); });
    Eigen::VectorXd b = Eigen::VectorXd::Zero(space_.total_dofs());
    for (int t = 0; t < num_elements(); ++t) scatter_add(t, local[t], b);
    return b;
  }

  /// sigma_h = sigma_{lambda_h} + sigma_f and u_h = u_{lambda_h} + u_f.
  FieldSolution recover_fields(const Eigen::VectorXd& lambda, const LoadFunction& f) const {
    if (lambda.size() != space_.total_dofs()) throw std::invalid_argument("recover_fields: DOF layout mismatch");
    const auto moments = load_moments_all(f);
    FieldSolution out;
    out.stress.resize(num_elements());
    out.displacement.resize(num_elements());
    parallel_for(num_elements(), [&](int t) {
      const auto a = cond_[t].solve_lambda(gather(lambda, t));
      const auto b = cond_[t].solve_load(moments[t]);
      out.stress[t] = a.stress + b.stress;
      out.displacement[t] = a.displacement + b.displacement;
    });
    return out;
  }

  /// Moments <mu_m, [sigma_h]> of the normal-stress jump on interior edges.
  Eigen::VectorXd stress_jump(const FieldSolution& fields) const {
    Eigen::VectorXd jump = Eigen::VectorXd::Zero(space_.total_dofs());
    for (int t = 0; t < num_elements(); ++t)
      scatter_add(t, cond_[t].matrices().C * fields.stress[t], jump);
    return jump;
  }

 private:
  const TriMesh* mesh_;
  int k_;
  MaterialParams mat_;
  std::shared_ptr<ElementBases> bases_;
  MultiplierSpace space_;
  std::vector<LocalCondensation> cond_;
};

}  // namespace hmfe
