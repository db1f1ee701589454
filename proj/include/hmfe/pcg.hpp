// Preconditioned conjugate gradients for the (possibly singular) SPSD
// multiplier system, with residual history and a Lanczos condition estimate.
#pragma once

#include "hmfe/schur.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cstdio>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace hmfe {

/// z = M r for a symmetric positive (semi)definite M.
class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual Eigen::VectorXd apply(const Eigen::VectorXd& r) const = 0;
  virtual std::string name() const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
 public:
  Eigen::VectorXd apply(const Eigen::VectorXd& r) const override { return r; }
  std::string name() const override { return "identity"; }
};

/// Jacobi scaling by diag(S); zero diagonal entries are left unscaled.
class DiagonalPreconditioner final : public Preconditioner {
 public:
  explicit DiagonalPreconditioner(const SchurOperator& s) : inv_(s.diagonal()) {
    for (int i = 0; i < inv_.size(); ++i) inv_(i) = inv_(i) > 0 ? 1.0 / inv_(i) : 1.0;
  }
  Eigen::VectorXd apply(const Eigen::VectorXd& r) const override { return inv_.cwiseProduct(r); }
  std::string name() const override { return "diagonal"; }

 private:
  Eigen::VectorXd inv_;
};

struct PcgOptions {
  double tol = 1e-6;  // relative Euclidean residual
  int maxit = 500;
  bool estimate_condition = true;
};

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  bool breakdown = false;
  int nonmonotone_steps = 0;  // steps where the residual grew by more than round-off
  double seconds = 0;
  std::vector<double> residual_history;  // relative residuals, entry 0 is 1 (or 0 for b = 0)
  double ritz_min = std::numeric_limits<double>::quiet_NaN();
  double ritz_max = std::numeric_limits<double>::quiet_NaN();

  double final_residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
  double condition_estimate() const { return ritz_max / ritz_min; }
};

struct PcgResult {
  Eigen::VectorXd x;
  SolveReport report;
};

/// Zero initial guess. The right-hand side and every preconditioned residual
/// are projected onto im(S) through the operator's kernel basis, so the
/// iteration stays in the range on singular grids.
inline PcgResult pcg(const SchurOperator& s, Eigen::VectorXd b, const Preconditioner& m, const PcgOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  PcgResult out;
  SolveReport& rep = out.report;
  s.project(b);
  out.x = Eigen::VectorXd::Zero(b.size());
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    rep.converged = true;
    rep.residual_history.push_back(0.0);
    return out;
  }
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = m.apply(r);
  s.project(z);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  rep.residual_history.push_back(1.0);
  std::vector<double> alphas, betas;
  if (!(rz > 0)) rep.breakdown = true;
  while (!rep.breakdown && rep.iterations < opt.maxit) {
    const Eigen::VectorXd q = s.apply(p);
    const double pq = p.dot(q);
    if (!(pq > 0)) {
      rep.breakdown = true;
      break;
    }
    const double alpha = rz / pq;
    out.x += alpha * p;
    r -= alpha * q;
    ++rep.iterations;
    alphas.push_back(alpha);
    const double rel = r.norm() / bnorm;
    if (rel > rep.residual_history.back() * (1 + 1e-12)) ++rep.nonmonotone_steps;
    rep.residual_history.push_back(rel);
    if (rel <= opt.tol) {
      rep.converged = true;
      break;
    }
    z = m.apply(r);
    s.project(z);
    const double rz_new = r.dot(z);
    if (!(rz_new > 0)) {
      rep.breakdown = true;
      break;
    }
    const double beta = rz_new / rz;
    betas.push_back(beta);
    rz = rz_new;
    p = z + beta * p;
  }
  s.project(out.x);

  if (opt.estimate_condition && !alphas.empty()) {
    // Lanczos tridiagonal from the CG coefficients.
    const int n = static_cast<int>(alphas.size());
    Eigen::VectorXd diag(n), off(std::max(n - 1, 0));
    for (int i = 0; i < n; ++i) {
      diag(i) = 1.0 / alphas[i];
      if (i > 0) diag(i) += betas[i - 1] / alphas[i - 1];
      if (i + 1 < n) off(i) = std::sqrt(betas[i]) / alphas[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    rep.ritz_min = eig.eigenvalues().minCoeff();
    rep.ritz_max = eig.eigenvalues().maxCoeff();
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// Summary row: "iterations,converged,breakdown,final_residual,nonmonotone_steps,seconds,ritz_min,ritz_max".
inline void write_report_csv(std::ostream& out, const SolveReport& rep, bool header = true) {
  if (header) out << "iterations,converged,breakdown,final_residual,nonmonotone_steps,seconds,ritz_min,ritz_max\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%d,%d,%.5e,%d,%.3f,%.5e,%.5e\n", rep.iterations, rep.converged ? 1 : 0,
                rep.breakdown ? 1 : 0, rep.final_residual(), rep.nonmonotone_steps, rep.seconds, rep.ritz_min,
                rep.ritz_max);
  out << buf;
}

/// One "iteration,relative_residual" row per step.
inline void write_history_csv(std::ostream& out, const SolveReport& rep) {
  out << "iteration,relative_residual\n";
  char buf[64];
  for (std::size_t i = 0; i < rep.residual_history.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.5e\n", i, rep.residual_history[i]);
    out << buf;
  }
}

}  // namespace hmfe
