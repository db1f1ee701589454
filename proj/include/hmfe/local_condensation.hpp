// Element-local saddle solves, static condensation onto the edge
// multipliers, field recovery, and the local multiplier seminorms.
#pragma once

#include "hmfe/element.hpp"

#include <Eigen/Dense>
#include <Eigen/LU>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hmfe {

/// Stress and displacement coefficients on one element.
struct LocalFields {
  Eigen::VectorXd stress;
  Eigen::VectorXd displacement;
};

/// Condensed representation of one element.
///
/// The saddle matrix [[A, B^T], [B, 0]] is factorized once. With
/// X = saddle^{-1} [C^T; 0] the multiplier-driven fields are X * lambda_K and
/// the local Schur block is S_K = C * X_sigma (the A-weighted energy of
/// sigma_lambda). The load map is F = saddle^{-1} [0; I] applied to the
/// moments (f, v_p)_K.
class LocalCondensation {
 public:
  LocalCondensation(const ElementGeometry& geom, const ElementBases& bases, const MaterialParams& mat)
      : geom_(geom), ns_(bases.n_stress()), nu_(bases.n_disp()), nm_(bases.n_trace()) {
    lm_ = local_matrices(geom, bases, mat);
    lu_.compute(saddle(lm_.A));
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(ns_ + nu_, nm_);
    rhs.topRows(ns_) = lm_.C.transpose();
    lambda_map_ = lu_.solve(rhs);
    check_residual(saddle(lm_.A), rhs, lambda_map_);
    Eigen::MatrixXd frhs = Eigen::MatrixXd::Zero(ns_ + nu_, nu_);
    frhs.bottomRows(nu_).setIdentity();
    load_map_ = lu_.solve(frhs);
    schur_ = lm_.C * lambda_map_.topRows(ns_);
    schur_ = 0.5 * (schur_ + schur_.transpose()).eval();
    edge_trace_integrals_ = bases.trace_integrals;
  }

  const LocalMatrices& matrices() const { return lm_; }
  const Eigen::MatrixXd& schur() const { return schur_; }
  const ElementGeometry& geometry() const { return geom_; }
  int n_stress() const { return ns_; }
  int n_disp() const { return nu_; }
  int n_trace() const { return nm_; }

  /// (sigma_lambda, u_lambda) with div sigma_lambda = 0.
  LocalFields solve_lambda(const Eigen::VectorXd& lambda) const { return split(lambda_map_ * lambda); }

  /// (sigma_f, u_f) for load moments (f, v_p)_K.
  LocalFields solve_load(const Eigen::VectorXd& moments) const { return split(load_map_ * moments); }

  Eigen::VectorXd schur_apply(const Eigen::VectorXd& lambda) const { return schur_ * lambda; }

  /// ||lambda||^2_{S,K} = (A sigma_lambda, sigma_lambda)_K, computed from the fields.
  double energy(const Eigen::VectorXd& lambda) const {
    const Eigen::VectorXd s = solve_lambda(lambda).stress;
    return s.dot(lm_.A * s);
  }

  /// Multiplier right-hand side contribution -C sigma_f = -(f, u_mu)_K.
  Eigen::VectorXd condensed_load(const Eigen::VectorXd& moments) const {
    return -(lm_.C * solve_load(moments).stress);
  }

  /// |lambda|_{*,K} = |K|^{-1/2} |int_{dK} lambda . nu ds|.
  double seminorm_star(const Eigen::VectorXd& lambda) const {
    const int nte = nm_ / 3;
    double flux = 0.0;
    for (int j = 0; j < 3; ++j) {
      const Point nu_out = geom_.outward_normal(j);
      const double len = geom_.edge_length(j);
      for (int r = 0; r < nte / 2; ++r)
        for (int s = 0; s < 2; ++s) flux += lambda(j * nte + 2 * r + s) * nu_out(s) * len * edge_trace_integrals_(r);
    }
    return std::abs(flux) / std::sqrt(geom_.area());
  }

  /// |lambda|_{h,K} = ||sigma_bar||_{0,K} where sigma_bar solves the local
  /// problem with the compliance replaced by the identity pairing.
  double seminorm_h(const Eigen::VectorXd& lambda) const {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(saddle(lm_.stress_gram));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ns_ + nu_);
    rhs.head(ns_) = lm_.C.transpose() * lambda;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd s = sol.head(ns_);
    return std::sqrt(std::max(0.0, s.dot(lm_.stress_gram * s)));
  }

 private:
  Eigen::MatrixXd saddle(const Eigen::MatrixXd& a) const {
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(ns_ + nu_, ns_ + nu_);
    k.topLeftCorner(ns_, ns_) = a;
    k.topRightCorner(ns_, nu_) = lm_.B.transpose();
    k.bottomLeftCorner(nu_, ns_) = lm_.B;
    return k;
  }

  LocalFields split(const Eigen::VectorXd& v) const { return {v.head(ns_), v.tail(nu_)}; }

  static void check_residual(const Eigen::MatrixXd& k, const Eigen::MatrixXd& rhs, const Eigen::MatrixXd& sol) {
    const double scale = k.norm() * sol.norm() + rhs.norm();
    if (!((k * sol - rhs).norm() <= 1e-10 * scale))
      throw std::runtime_error("LocalCondensation: local saddle problem is singular");
  }

  ElementGeometry geom_;
  int ns_, nu_, nm_;
  LocalMatrices lm_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::MatrixXd lambda_map_;
  Eigen::MatrixXd load_map_;
  Eigen::MatrixXd schur_;
  Eigen::VectorXd edge_trace_integrals_;
};

}  // namespace hmfe
