// Independent reference computations for the test suite.
#pragma once

#include "hmfe/hmfe.hpp"

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace oracle {

using hmfe::FieldSolution;
using hmfe::HybridSystem;

inline Eigen::VectorXd random_vector(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

/// Dense monolithic hybrid saddle system in unknowns (sigma_K, u_K per
/// element, lambda on interior edges):
///   A sigma + B^T u - C^T lambda = 0,  B sigma = (f, v),  sum_K C sigma = 0.
/// Solved by a complete orthogonal decomposition, so singular grids return
/// the minimum-norm solution; sigma and u are unique either way.
struct DenseHybrid {
  FieldSolution fields;
  Eigen::VectorXd lambda;
};

inline DenseHybrid dense_hybrid_solve(const HybridSystem& sys, const hmfe::LoadFunction& f) {
  const int ne = sys.num_elements();
  const int ns = sys.bases().n_stress(), nu = sys.bases().n_disp();
  const int nloc = ns + nu;
  const int nl = sys.space().total_dofs();
  const int n = ne * nloc + nl;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (int t = 0; t < ne; ++t) {
    const hmfe::ElementGeometry g(sys.mesh(), t);
    const auto lm = hmfe::local_matrices(g, sys.bases(), sys.material());
    const int o = t * nloc;
    k.block(o, o, ns, ns) = lm.A;
    k.block(o, o + ns, ns, nu) = lm.B.transpose();
    k.block(o + ns, o, nu, ns) = lm.B;
    rhs.segment(o + ns, nu) = hmfe::load_moments(g, sys.bases(), f);
    const auto dofs = sys.space().element_dofs(t);
    for (std::size_t m = 0; m < dofs.size(); ++m) {
      if (dofs[m] < 0) continue;
      const int row = ne * nloc + dofs[m];
      for (int i = 0; i < ns; ++i) {
        k(o + i, row) -= lm.C(int(m), i);
        k(row, o + i) += lm.C(int(m), i);
      }
    }
  }
  const Eigen::VectorXd x = k.completeOrthogonalDecomposition().solve(rhs);
  DenseHybrid out;
  for (int t = 0; t < ne; ++t) {
    out.fields.stress.push_back(x.segment(t * nloc, ns));
    out.fields.displacement.push_back(x.segment(t * nloc + ns, nu));
  }
  out.lambda = x.tail(nl);
  return out;
}

/// Relative L2 distance of two piecewise fields, measured with the element
/// Gram matrices.
inline std::pair<double, double> relative_l2(const HybridSystem& sys, const FieldSolution& a, const FieldSolution& b) {
  double ds = 0, ns = 0, du = 0, nu = 0;
  for (int t = 0; t < sys.num_elements(); ++t) {
    const auto& lm = sys.condensation(t).matrices();
    const Eigen::VectorXd es = a.stress[t] - b.stress[t];
    const Eigen::VectorXd eu = a.displacement[t] - b.displacement[t];
    ds += es.dot(lm.stress_gram * es);
    ns += b.stress[t].dot(lm.stress_gram * b.stress[t]);
    du += eu.dot(lm.disp_mass * eu);
    nu += b.displacement[t].dot(lm.disp_mass * b.displacement[t]);
  }
  return {std::sqrt(ds / ns), std::sqrt(du / nu)};
}

inline Eigen::MatrixXd dense(const hmfe::SparseMatrix& m) { return Eigen::MatrixXd(m); }

/// Minimum-norm solution through the SVD.
inline Eigen::VectorXd pseudo_inverse_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double rel = 1e-10) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Eigen::VectorXd c = svd.matrixU().transpose() * b;
  for (int i = 0; i < s.size(); ++i) c(i) = s(i) > rel * s(0) ? c(i) / s(i) : 0.0;
  return svd.matrixV() * c;
}

inline int numerical_rank(const Eigen::MatrixXd& a, double rel = 1e-9) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > rel * s(0)) ++r;
  return r;
}

/// Element-local multiplier vector holding the nodal trace values of the
/// rigid motion a + b (-y, x) on all three edges.
inline Eigen::VectorXd rigid_trace(const hmfe::ElementGeometry& g, const hmfe::ElementBases& eb,
                                   const Eigen::Vector3d& coef) {
  const int nte = eb.n_trace_edge();
  Eigen::VectorXd v(3 * nte);
  for (int j = 0; j < 3; ++j) {
    const auto ends = g.edge_endpoints(j);
    for (int r = 0; r < eb.trace.size(); ++r) {
      const hmfe::Point p = ends[0] + eb.trace.node(r) * (ends[1] - ends[0]);
      v(j * nte + 2 * r) = coef(0) - coef(2) * p.y();
      v(j * nte + 2 * r + 1) = coef(1) + coef(2) * p.x();
    }
  }
  return v;
}

/// Same, for an arbitrary vector field.
template <class F>
Eigen::VectorXd field_trace(const hmfe::ElementGeometry& g, const hmfe::ElementBases& eb, F w) {
  const int nte = eb.n_trace_edge();
  Eigen::VectorXd v(3 * nte);
  for (int j = 0; j < 3; ++j) {
    const auto ends = g.edge_endpoints(j);
    for (int r = 0; r < eb.trace.size(); ++r) {
      const Eigen::Vector2d val = w(Eigen::Vector2d(ends[0] + eb.trace.node(r) * (ends[1] - ends[0])));
      v(j * nte + 2 * r) = val(0);
      v(j * nte + 2 * r + 1) = val(1);
    }
  }
  return v;
}

}  // namespace oracle
