// Gauss rules on the reference edge [0,1] and the reference triangle
// {(0,0),(1,0),(0,1)}.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hmfe {

struct QuadratureRule1D {
  std::vector<double> points;   // in [0,1]
  std::vector<double> weights;  // sum to 1
  int degree = 0;               // exact for polynomials up to this degree
};

struct QuadratureRule2D {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;  // sum to 1/2
  int degree = 0;
};

/// n-point Gauss-Legendre on [0,1] via the Golub-Welsch eigenproblem.
inline QuadratureRule1D gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    jacobi(i, i - 1) = jacobi(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  QuadratureRule1D rule;
  rule.degree = 2 * n - 1;
  for (int i = 0; i < n; ++i) {
    const double v0 = eig.eigenvectors()(0, i);
    rule.points.push_back(0.5 * (eig.eigenvalues()(i) + 1.0));
    rule.weights.push_back(v0 * v0);  // (2 * v0^2) on [-1,1], halved on [0,1]
  }
  return rule;
}

/// Edge rule exact to the requested polynomial degree.
inline QuadratureRule1D edge_rule(int degree) {
  auto r = gauss_legendre(degree / 2 + 1);
  return r;
}

/// Collapsed (Duffy) tensor Gauss rule on the reference triangle, exact to
/// the requested total degree. All weights are positive.
inline QuadratureRule2D triangle_rule(int degree) {
  if (degree < 0) throw std::invalid_argument("triangle_rule: negative degree");
  // The collapsed integrand gains one degree in the radial variable.
  const int n = (degree + 3) / 2;
  const auto g = gauss_legendre(n);
  QuadratureRule2D rule;
  rule.degree = degree;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double u = g.points[i], v = g.points[j];
      rule.points.emplace_back(u, v * (1.0 - u));
      rule.weights.push_back(g.weights[i] * g.weights[j] * (1.0 - u));
    }
  return rule;
}

}  // namespace hmfe
