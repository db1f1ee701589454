// Element geometry, the local bases of the three discrete spaces, and the
// element matrices of the hybridized mixed method and the coarse P2 problem.
#pragma once

#include "hmfe/basis.hpp"
#include "hmfe/material.hpp"
#include "hmfe/mesh.hpp"
#include "hmfe/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <stdexcept>

namespace hmfe {

using Vector2 = Eigen::Vector2d;
using LoadFunction = std::function<Vector2(const Point&)>;

/// Affine map x = v0 + J xi from the reference triangle.
///
/// `edge_reversed[j]` records whether local edge j, which runs from vertex
/// j+1 to vertex j+2, is traversed backwards by the global edge
/// parametrization (lower global vertex index first).
class ElementGeometry {
 public:
  ElementGeometry(const Point& a, const Point& b, const Point& c, std::array<int, 3> ids = {0, 1, 2})
      : v_{a, b, c} {
    jac_.col(0) = b - a;
    jac_.col(1) = c - a;
    det_ = jac_.determinant();
    const double scale = std::max((b - a).squaredNorm(), (c - a).squaredNorm());
    if (!(det_ > 1e-14 * scale)) throw std::invalid_argument("ElementGeometry: degenerate or inverted triangle");
    inv_ = jac_.inverse();
    for (int j = 0; j < 3; ++j) edge_reversed_[j] = ids[(j + 1) % 3] > ids[(j + 2) % 3];
  }

  ElementGeometry(const TriMesh& m, int t)
      : ElementGeometry(m.nodes[m.triangles[t][0]], m.nodes[m.triangles[t][1]], m.nodes[m.triangles[t][2]],
                        m.triangles[t]) {}

  const Point& vertex(int i) const { return v_[i]; }
  const Eigen::Matrix2d& jacobian() const { return jac_; }
  const Eigen::Matrix2d& inverse_jacobian() const { return inv_; }
  double det() const { return det_; }
  double area() const { return 0.5 * det_; }
  bool edge_reversed(int j) const { return edge_reversed_[j]; }

  Point map(const Eigen::Vector2d& xi) const { return v_[0] + jac_ * xi; }
  Eigen::Vector2d to_reference(const Point& x) const { return inv_ * (x - v_[0]); }

  /// Endpoints of local edge j in global parametrization order.
  std::array<Point, 2> edge_endpoints(int j) const {
    const Point& p = v_[(j + 1) % 3];
    const Point& q = v_[(j + 2) % 3];
    if (edge_reversed_[j]) return {q, p};
    return {p, q};
  }

  double edge_length(int j) const { return (v_[(j + 2) % 3] - v_[(j + 1) % 3]).norm(); }

  Point outward_normal(int j) const {
    const Point d = v_[(j + 2) % 3] - v_[(j + 1) % 3];
    return Point(d.y(), -d.x()).normalized();
  }

 private:
  std::array<Point, 3> v_;
  Eigen::Matrix2d jac_;
  Eigen::Matrix2d inv_;
  double det_ = 0;
  std::array<bool, 3> edge_reversed_{};
};

/// Generators T11, T22, T12 = (e1 e2^T + e2 e1^T) / 2 of the symmetric matrices.
inline Eigen::Matrix2d sym_generator(int c) {
  Eigen::Matrix2d t = Eigen::Matrix2d::Zero();
  if (c == 0) t(0, 0) = 1;
  else if (c == 1) t(1, 1) = 1;
  else t(0, 1) = t(1, 0) = 0.5;
  return t;
}

/// Reference bases and quadrature for polynomial degree k.
///
/// Stress:       P_{k+1}(K; S), index 3*a + c  (scalar node a, generator c)
/// Displacement: P_k(K; R^2),   index 2*q + s  (scalar node q, component s)
/// Trace:        P_{k+1}(F; R^2) per edge, index 2*r + s
struct ElementBases {
  int k;
  LagrangeBasis2D stress_scalar;
  LagrangeBasis2D disp_scalar;
  LagrangeBasis1D trace;
  QuadratureRule2D cell_rule;
  QuadratureRule1D face_rule;
  Eigen::MatrixXd trace_mass;       // reference mass on [0,1]
  Eigen::VectorXd trace_integrals;  // reference integrals of the trace basis

  explicit ElementBases(int degree, int quad_boost = 0)
      : k(degree),
        stress_scalar(degree + 1),
        disp_scalar(degree),
        trace(degree + 1),
        cell_rule(triangle_rule(2 * (degree + 1) + 2 + quad_boost)),
        face_rule(edge_rule(2 * (degree + 1) + 2 + quad_boost)) {
    if (degree < 0) throw std::invalid_argument("ElementBases: k must be >= 0");
    const int nt = trace.size();
    trace_mass = Eigen::MatrixXd::Zero(nt, nt);
    trace_integrals = Eigen::VectorXd::Zero(nt);
    for (std::size_t q = 0; q < face_rule.points.size(); ++q) {
      const Eigen::VectorXd chi = trace.eval(face_rule.points[q]);
      trace_mass += face_rule.weights[q] * chi * chi.transpose();
      trace_integrals += face_rule.weights[q] * chi;
    }
  }

  int n_stress() const { return 3 * stress_scalar.size(); }
  int n_disp() const { return 2 * disp_scalar.size(); }
  int n_trace_edge() const { return 2 * trace.size(); }
  int n_trace() const { return 3 * n_trace_edge(); }
};

/// Element blocks of the hybridized system.
///
/// A(i,j) = (A sigma_j, sigma_i)_K, B(p,i) = (v_p, div sigma_i)_K,
/// C(m,i) = <mu_m, sigma_i nu>_{dK} with the element's outward normal,
/// C rows ordered (local edge, trace node, component).
struct LocalMatrices {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  Eigen::MatrixXd stress_gram;  // (sigma_j, sigma_i)_K
  Eigen::MatrixXd disp_mass;
};

inline LocalMatrices local_matrices(const ElementGeometry& g, const ElementBases& eb, const MaterialParams& mat) {
  const int na = eb.stress_scalar.size();
  const int nq = eb.disp_scalar.size();
  const int ns = eb.n_stress(), nu = eb.n_disp(), nte = eb.n_trace_edge();
  LocalMatrices lm;
  lm.A = Eigen::MatrixXd::Zero(ns, ns);
  lm.B = Eigen::MatrixXd::Zero(nu, ns);
  lm.C = Eigen::MatrixXd::Zero(3 * nte, ns);
  lm.stress_gram = Eigen::MatrixXd::Zero(ns, ns);
  lm.disp_mass = Eigen::MatrixXd::Zero(nu, nu);

  Eigen::Matrix3d compliance, gram;
  for (int c = 0; c < 3; ++c)
    for (int d = 0; d < 3; ++d) {
      compliance(c, d) = apply_compliance(sym_generator(c), mat).cwiseProduct(sym_generator(d)).sum();
      gram(c, d) = sym_generator(c).cwiseProduct(sym_generator(d)).sum();
    }

  for (std::size_t q = 0; q < eb.cell_rule.points.size(); ++q) {
    const Eigen::Vector2d& xi = eb.cell_rule.points[q];
    const double w = eb.cell_rule.weights[q] * g.det();
    const Eigen::VectorXd phi = eb.stress_scalar.eval(xi);
    const Eigen::MatrixXd dphi = eb.stress_scalar.grad(xi) * g.inverse_jacobian();
    const Eigen::VectorXd psi = eb.disp_scalar.eval(xi);
    const Eigen::MatrixXd mass = w * phi * phi.transpose();
    for (int a = 0; a < na; ++a)
      for (int b = 0; b < na; ++b) {
        lm.A.block<3, 3>(3 * a, 3 * b) += mass(a, b) * compliance;
        lm.stress_gram.block<3, 3>(3 * a, 3 * b) += mass(a, b) * gram;
      }
    for (int a = 0; a < na; ++a)
      for (int c = 0; c < 3; ++c) {
        const Eigen::Vector2d div = sym_generator(c) * dphi.row(a).transpose();
        for (int p = 0; p < nq; ++p)
          for (int s = 0; s < 2; ++s) lm.B(2 * p + s, 3 * a + c) += w * psi(p) * div(s);
      }
    for (int p = 0; p < nq; ++p)
      for (int r = 0; r < nq; ++r)
        for (int s = 0; s < 2; ++s) lm.disp_mass(2 * p + s, 2 * r + s) += w * psi(p) * psi(r);
  }

  for (int j = 0; j < 3; ++j) {
    const auto [p0, p1] = g.edge_endpoints(j);
    const double len = g.edge_length(j);
    const Point nu_out = g.outward_normal(j);
    std::array<Eigen::Vector2d, 3> tn;
    for (int c = 0; c < 3; ++c) tn[c] = sym_generator(c) * nu_out;
    for (std::size_t q = 0; q < eb.face_rule.points.size(); ++q) {
      const double t = eb.face_rule.points[q];
      const double w = eb.face_rule.weights[q] * len;
      const Eigen::VectorXd phi = eb.stress_scalar.eval(g.to_reference(p0 + t * (p1 - p0)));
      const Eigen::VectorXd chi = eb.trace.eval(t);
      for (int r = 0; r < chi.size(); ++r)
        for (int s = 0; s < 2; ++s)
          for (int a = 0; a < na; ++a)
            for (int c = 0; c < 3; ++c) lm.C(j * nte + 2 * r + s, 3 * a + c) += w * chi(r) * phi(a) * tn[c](s);
    }
  }
  return lm;
}

/// Load moments (f, v_p)_K over the displacement basis.
inline Eigen::VectorXd load_moments(const ElementGeometry& g, const ElementBases& eb, const LoadFunction& f) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(eb.n_disp());
  for (std::size_t q = 0; q < eb.cell_rule.points.size(); ++q) {
    const Eigen::Vector2d& xi = eb.cell_rule.points[q];
    const double w = eb.cell_rule.weights[q] * g.det();
    const Vector2 fx = f(g.map(xi));
    const Eigen::VectorXd psi = eb.disp_scalar.eval(xi);
    for (int p = 0; p < psi.size(); ++p)
      for (int s = 0; s < 2; ++s) out(2 * p + s) += w * psi(p) * fx(s);
  }
  return out;
}

// Field evaluation from local coefficients at a reference point.

inline Eigen::Matrix2d eval_stress(const ElementBases& eb, const Eigen::VectorXd& coef, const Eigen::Vector2d& xi) {
  const Eigen::VectorXd phi = eb.stress_scalar.eval(xi);
  Eigen::Matrix2d s = Eigen::Matrix2d::Zero();
  for (int a = 0; a < phi.size(); ++a)
    for (int c = 0; c < 3; ++c) s += coef(3 * a + c) * phi(a) * sym_generator(c);
  return s;
}

inline Vector2 eval_stress_divergence(const ElementGeometry& g, const ElementBases& eb, const Eigen::VectorXd& coef,
                                      const Eigen::Vector2d& xi) {
  const Eigen::MatrixXd dphi = eb.stress_scalar.grad(xi) * g.inverse_jacobian();
  Vector2 d = Vector2::Zero();
  for (int a = 0; a < dphi.rows(); ++a)
    for (int c = 0; c < 3; ++c) d += coef(3 * a + c) * (sym_generator(c) * dphi.row(a).transpose());
  return d;
}

inline Vector2 eval_displacement(const ElementBases& eb, const Eigen::VectorXd& coef, const Eigen::Vector2d& xi) {
  const Eigen::VectorXd psi = eb.disp_scalar.eval(xi);
  Vector2 u = Vector2::Zero();
  for (int q = 0; q < psi.size(); ++q) u += Vector2(coef(2 * q), coef(2 * q + 1)) * psi(q);
  return u;
}

/// Element stiffness of a_H(w, v) = 2 mu (eps w, eps v) + lambda (P0 div w, P0 div v)
/// for vector P2 Lagrange DOFs ordered 2*node + component.
inline Eigen::Matrix<double, 12, 12> coarse_p2_matrices(const ElementGeometry& g, const MaterialParams& mat) {
  static const LagrangeBasis2D p2(2);
  static const QuadratureRule2D rule = triangle_rule(2);
  Eigen::Matrix<double, 12, 12> k = Eigen::Matrix<double, 12, 12>::Zero();
  Eigen::Matrix<double, 12, 1> div_mean = Eigen::Matrix<double, 12, 1>::Zero();
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const double w = rule.weights[q] * g.det();
    const Eigen::MatrixXd dphi = p2.grad(rule.points[q]) * g.inverse_jacobian();
    std::array<Eigen::Matrix2d, 12> eps;
    for (int a = 0; a < 6; ++a)
      for (int s = 0; s < 2; ++s) {
        Eigen::Matrix2d grad = Eigen::Matrix2d::Zero();
        grad.row(s) = dphi.row(a);
        eps[2 * a + s] = 0.5 * (grad + grad.transpose());
        div_mean(2 * a + s) += w * dphi(a, s);
      }
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j) k(i, j) += w * 2.0 * mat.mu * eps[i].cwiseProduct(eps[j]).sum();
  }
  k += mat.lambda / g.area() * div_mean * div_mean.transpose();
  return k;
}

}  // namespace hmfe
