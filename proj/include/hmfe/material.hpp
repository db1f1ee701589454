// Isotropic material parameters and the compliance tensor.
#pragma once

#include <Eigen/Dense>

#include <stdexcept>

namespace hmfe {

/// Lame parameters (shear modulus mu, first Lame constant lambda).
struct MaterialParams {
  double mu = 0.5;
  double lambda = 1.0;

  MaterialParams() = default;
  MaterialParams(double shear, double lame) : mu(shear), lambda(lame) {
    if (!(mu > 0)) throw std::invalid_argument("MaterialParams: mu must be positive");
    if (!(lambda >= 0)) throw std::invalid_argument("MaterialParams: lambda must be nonnegative");
  }

  /// lambda = nu / (1 - 2 nu) * 2 mu; with mu = 1/2 this is nu / (1 - 2 nu).
  static MaterialParams from_poisson(double mu, double nu) {
    if (!(nu >= 0 && nu < 0.5)) throw std::invalid_argument("MaterialParams: Poisson ratio must lie in [0, 0.5)");
    return {mu, nu / (1.0 - 2.0 * nu) * 2.0 * mu};
  }

  double poisson_ratio() const { return lambda / (2.0 * (lambda + mu)); }
};

/// A tau = (tau - lambda / (2 mu + 2 lambda) tr(tau) I) / (2 mu), in 2D.
inline Eigen::Matrix2d apply_compliance(const Eigen::Matrix2d& tau, const MaterialParams& m) {
  // deviatoric and spherical parts scale separately; no cancellation as lambda grows
  const double half_trace = 0.5 * tau.trace();
  const Eigen::Matrix2d dev = tau - half_trace * Eigen::Matrix2d::Identity();
  return dev / (2.0 * m.mu) + (half_trace / (2.0 * m.mu + 2.0 * m.lambda)) * Eigen::Matrix2d::Identity();
}

}  // namespace hmfe
