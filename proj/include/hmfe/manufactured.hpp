// Closed-form test solution on the unit square and L2 error evaluation.
#pragma once

#include "hmfe/hybrid.hpp"

#include <cmath>
#include <numbers>

namespace hmfe {

/// u = (e^{x-y} x y (1-x)(1-y), sin(pi x) sin(pi y)), vanishing on the
/// boundary of (0,1)^2, with sigma = 2 mu eps(u) + lambda tr(eps(u)) I and
/// f = div sigma.
class ManufacturedSolution {
 public:
  explicit ManufacturedSolution(const MaterialParams& mat) : mat_(mat) {}

  const MaterialParams& material() const { return mat_; }

  Vector2 displacement(const Point& p) const {
    const double x = p.x(), y = p.y();
    return {std::exp(x - y) * x * y * (1 - x) * (1 - y), std::sin(pi * x) * std::sin(pi * y)};
  }

  /// Row i holds the gradient of u_i.
  Eigen::Matrix2d gradient(const Point& p) const {
    const Derivs d = derivs(p);
    Eigen::Matrix2d g;
    g << d.u1x, d.u1y, d.u2x, d.u2y;
    return g;
  }

  Eigen::Matrix2d strain(const Point& p) const {
    const Eigen::Matrix2d g = gradient(p);
    return 0.5 * (g + g.transpose());
  }

  Eigen::Matrix2d stress(const Point& p) const {
    const Eigen::Matrix2d e = strain(p);
    return 2.0 * mat_.mu * e + mat_.lambda * e.trace() * Eigen::Matrix2d::Identity();
  }

  /// f = div sigma = mu Lap u + (mu + lambda) grad div u.
  Vector2 load(const Point& p) const {
    const Derivs d = derivs(p);
    const double mu = mat_.mu, lam = mat_.lambda;
    return {mu * (d.u1xx + d.u1yy) + (mu + lam) * (d.u1xx + d.u2xy),
            mu * (d.u2xx + d.u2yy) + (mu + lam) * (d.u1xy + d.u2yy)};
  }

  LoadFunction load_function() const {
    return [this](const Point& p) { return load(p); };
  }

 private:
  static constexpr double pi = std::numbers::pi;

  struct Derivs {
    double u1x, u1y, u1xx, u1yy, u1xy;
    double u2x, u2y, u2xx, u2yy, u2xy;
  };

  static Derivs derivs(const Point& p) {
    const double x = p.x(), y = p.y();
    const double e = std::exp(x - y);
    const double g = x * (1 - x), gp = 1 - 2 * x;
    const double h = y * (1 - y), hp = 1 - 2 * y;
    const double sx = std::sin(pi * x), cx = std::cos(pi * x);
    const double sy = std::sin(pi * y), cy = std::cos(pi * y);
    Derivs d{};
    d.u1x = e * h * (g + gp);
    d.u1y = e * g * (hp - h);
    d.u1xx = e * h * (g + 2 * gp - 2);
    d.u1yy = e * g * (h - 2 * hp - 2);
    d.u1xy = e * (g + gp) * (hp - h);
    d.u2x = pi * cx * sy;
    d.u2y = pi * sx * cy;
    d.u2xx = -pi * pi * sx * sy;
    d.u2yy = -pi * pi * sx * sy;
    d.u2xy = pi * pi * cx * cy;
    return d;
  }

  MaterialParams mat_;
};

/// L2 errors of one discrete solution.
struct FieldErrors {
  double displacement = 0;  // ||u - u_h||_0
  double stress = 0;        // ||sigma - sigma_h||_0
  double divergence = 0;    // ||div sigma - div sigma_h||_0

  double hdiv() const { return std::sqrt(stress * stress + divergence * divergence); }
};

/// Element quadrature of the errors; the rule is exact to degree
/// 2(k+2) + 2 + extra_degree for polynomial integrands.
inline FieldErrors evaluate_errors(const HybridSystem& sys, const FieldSolution& fields,
                                   const ManufacturedSolution& exact, int extra_degree = 4) {
  const ElementBases& eb = sys.bases();
  const QuadratureRule2D rule = triangle_rule(2 * (sys.k() + 2) + 2 + extra_degree);
  const int ne = sys.num_elements();
  std::vector<std::array<double, 3>> local(ne);
  parallel_for(ne, [&](int t) {
    const ElementGeometry& g = sys.condensation(t).geometry();
    std::array<double, 3> acc{0, 0, 0};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Eigen::Vector2d& xi = rule.points[q];
      const double w = rule.weights[q] * g.det();
      const Point x = g.map(xi);
      acc[0] += w * (exact.displacement(x) - eval_displacement(eb, fields.displacement[t], xi)).squaredNorm();
      acc[1] += w * (exact.stress(x) - eval_stress(eb, fields.stress[t], xi)).squaredNorm();
      acc[2] += w * (exact.load(x) - eval_stress_divergence(g, eb, fields.stress[t], xi)).squaredNorm();
    }
    local[t] = acc;
  });
  FieldErrors err;
  for (const auto& a : local) {
    err.displacement += a[0];
    err.stress += a[1];
    err.divergence += a[2];
  }
  err.displacement = std::sqrt(err.displacement);
  err.stress = std::sqrt(err.stress);
  err.divergence = std::sqrt(err.divergence);
  return err;
}

}  // namespace hmfe
