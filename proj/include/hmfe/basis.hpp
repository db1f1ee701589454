// Nodal Lagrange bases on the reference edge and reference triangle.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace hmfe {

/// Degree-p Lagrange basis on [0,1] with equispaced nodes t_j = j/p.
class LagrangeBasis1D {
 public:
  explicit LagrangeBasis1D(int degree) : degree_(degree) {
    if (degree < 0) throw std::invalid_argument("LagrangeBasis1D: negative degree");
    for (int j = 0; j <= degree; ++j) nodes_.push_back(degree == 0 ? 0.5 : double(j) / degree);
  }

  int degree() const { return degree_; }
  int size() const { return degree_ + 1; }
  double node(int j) const { return nodes_[j]; }

  double eval(int j, double t) const {
    double v = 1.0;
    for (int i = 0; i <= degree_; ++i)
      if (i != j) v *= (t - nodes_[i]) / (nodes_[j] - nodes_[i]);
    return v;
  }

  Eigen::VectorXd eval(double t) const {
    Eigen::VectorXd v(size());
    for (int j = 0; j < size(); ++j) v(j) = eval(j, t);
    return v;
  }

 private:
  int degree_;
  std::vector<double> nodes_;
};

/// Degree-p Lagrange basis on the reference triangle.
///
/// Node order: the three vertices (0,0),(1,0),(0,1); then the interior
/// points of local edge j (opposite vertex j, running from vertex j+1 to
/// vertex j+2) for j = 0,1,2; then the interior nodes. Functions are stored
/// as monomial coefficients obtained from the inverse Vandermonde matrix.
class LagrangeBasis2D {
 public:
  explicit LagrangeBasis2D(int degree) : degree_(degree) {
    if (degree < 0) throw std::invalid_argument("LagrangeBasis2D: negative degree");
    build_nodes();
    for (int t = 0; t <= degree_; ++t)
      for (int b = 0; b <= t; ++b) exponents_.push_back({t - b, b});
    const int n = size();
    Eigen::MatrixXd vdm(n, n);
    for (int i = 0; i < n; ++i) vdm.row(i) = monomials(nodes_[i]).transpose();
    coeffs_ = vdm.inverse();  // column i: monomial coefficients of function i
  }

  int degree() const { return degree_; }
  int size() const { return (degree_ + 1) * (degree_ + 2) / 2; }
  const Eigen::Vector2d& node(int i) const { return nodes_[i]; }

  Eigen::VectorXd eval(const Eigen::Vector2d& xi) const { return coeffs_.transpose() * monomials(xi); }

  /// Reference gradients, one row per basis function.
  Eigen::MatrixXd grad(const Eigen::Vector2d& xi) const {
    const int n = size();
    Eigen::VectorXd dx(n), dy(n);
    for (int m = 0; m < n; ++m) {
      const auto [a, b] = exponents_[m];
      dx(m) = a == 0 ? 0.0 : a * std::pow(xi.x(), a - 1) * std::pow(xi.y(), b);
      dy(m) = b == 0 ? 0.0 : b * std::pow(xi.x(), a) * std::pow(xi.y(), b - 1);
    }
    Eigen::MatrixXd g(n, 2);
    g.col(0) = coeffs_.transpose() * dx;
    g.col(1) = coeffs_.transpose() * dy;
    return g;
  }

 private:
  Eigen::VectorXd monomials(const Eigen::Vector2d& xi) const {
    Eigen::VectorXd v(size());
    for (int m = 0; m < size(); ++m) v(m) = std::pow(xi.x(), exponents_[m][0]) * std::pow(xi.y(), exponents_[m][1]);
    return v;
  }

  void build_nodes() {
    const int p = degree_;
    if (p == 0) {
      nodes_.emplace_back(1.0 / 3.0, 1.0 / 3.0);
      return;
    }
    const Eigen::Vector2d v[3] = {{0, 0}, {1, 0}, {0, 1}};
    for (const auto& q : v) nodes_.push_back(q);
    for (int j = 0; j < 3; ++j) {
      const auto& a = v[(j + 1) % 3];
      const auto& b = v[(j + 2) % 3];
      for (int i = 1; i < p; ++i) nodes_.push_back(a + (b - a) * (double(i) / p));
    }
    for (int j = 1; j < p; ++j)
      for (int i = 1; i + j < p; ++i) nodes_.emplace_back(double(i) / p, double(j) / p);
  }

  int degree_;
  std::vector<Eigen::Vector2d> nodes_;
  std::vector<std::array<int, 2>> exponents_;
  Eigen::MatrixXd coeffs_;
};

}  // namespace hmfe
