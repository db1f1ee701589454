// Overlapping Schwarz preconditioners for the multiplier system: block
// Jacobi/Gauss-Seidel over edge, element or vertex-patch blocks, optionally
// combined with a P2 coarse space solved exactly or by a W-cycle.
#pragma once

#include "hmfe/coarse.hpp"
#include "hmfe/pcg.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace hmfe {

/// Dense inverses of the principal submatrices A(block, block). A block that
/// is singular (a kernel direction of A lives inside it) is inverted by the
/// eigenvalue pseudo-inverse; the count is exposed for logging.
class BlockInverses {
 public:
  BlockInverses() = default;
  BlockInverses(const SparseMatrix& a, std::vector<Block> blocks, const SparseMatrix& kernel = {})
      : blocks_(std::move(blocks)) {
    for (auto& b : blocks_) std::sort(b.begin(), b.end());
    std::vector<int> kernel_support(a.rows(), 0);
    for (int c = 0; c < kernel.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(kernel, c); it; ++it)
        if (std::abs(it.value()) > 1e-12) kernel_support[it.row()] = 1;
    inv_.resize(blocks_.size());
    std::vector<int> pinv(blocks_.size(), 0);
    parallel_for(static_cast<int>(blocks_.size()), [&](int b) {
      const Block& blk = blocks_[b];
      const Eigen::MatrixXd local = extract(a, blk);
      bool touches_kernel = false;
      for (int i : blk) touches_kernel = touches_kernel || kernel_support[i];
      if (!touches_kernel) {
        Eigen::LLT<Eigen::MatrixXd> llt(local);
        if (llt.info() == Eigen::Success) {
          inv_[b] = llt.solve(Eigen::MatrixXd::Identity(local.rows(), local.cols()));
          return;
        }
      }
      pinv[b] = 1;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(local);
      const Eigen::VectorXd& ev = eig.eigenvalues();
      const double cut = 1e-12 * ev.cwiseAbs().maxCoeff();
      Eigen::VectorXd d(ev.size());
      for (int i = 0; i < ev.size(); ++i) d(i) = ev(i) > cut ? 1.0 / ev(i) : 0.0;
      inv_[b] = eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
    });
    for (int p : pinv) pseudo_inverse_blocks_ += p;
  }

  static Eigen::MatrixXd extract(const SparseMatrix& a, const Block& blk) {
    const int n = static_cast<int>(blk.size());
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j)
      for (SparseMatrix::InnerIterator it(a, blk[j]); it; ++it) {
        const auto pos = std::lower_bound(blk.begin(), blk.end(), static_cast<int>(it.row()));
        if (pos != blk.end() && *pos == it.row()) local(static_cast<int>(pos - blk.begin()), j) = it.value();
      }
    return local;
  }

  int size() const { return static_cast<int>(blocks_.size()); }
  const Block& block(int b) const { return blocks_[b]; }
  const Eigen::MatrixXd& inverse(int b) const { return inv_[b]; }
  int pseudo_inverse_blocks() const { return pseudo_inverse_blocks_; }

  Eigen::VectorXd local_solve(int b, const Eigen::VectorXd& r) const {
    const Block& blk = blocks_[b];
    Eigen::VectorXd rl(blk.size());
    for (std::size_t i = 0; i < blk.size(); ++i) rl(static_cast<int>(i)) = r(blk[i]);
    return inv_[b] * rl;
  }

  /// Sum over blocks of R_i^T A_i^{-1} R_i r; block solves run concurrently
  /// and are summed in block order.
  Eigen::VectorXd additive(const Eigen::VectorXd& r) const {
    std::vector<Eigen::VectorXd> local(blocks_.size());
    parallel_for(size(), [&](int b) { local[b] = local_solve(b, r); });
    Eigen::VectorXd z = Eigen::VectorXd::Zero(r.size());
    for (int b = 0; b < size(); ++b)
      for (std::size_t i = 0; i < blocks_[b].size(); ++i) z(blocks_[b][i]) += local[b](static_cast<int>(i));
    return z;
  }

  /// One multiplicative pass: for each block in order, x += R^T A_i^{-1} R r
  /// and r -= A R^T (correction). `a` must be stored symmetric.
  void sweep(const SparseMatrix& a, Eigen::VectorXd& x, Eigen::VectorXd& r, bool forward) const {
    for (int k = 0; k < size(); ++k) {
      const int b = forward ? k : size() - 1 - k;
      const Eigen::VectorXd d = local_solve(b, r);
      const Block& blk = blocks_[b];
      for (std::size_t i = 0; i < blk.size(); ++i) {
        const double di = d(static_cast<int>(i));
        x(blk[i]) += di;
        for (SparseMatrix::InnerIterator it(a, blk[i]); it; ++it) r(it.row()) -= it.value() * di;
      }
    }
  }

 private:
  std::vector<Block> blocks_;
  std::vector<Eigen::MatrixXd> inv_;
  int pseudo_inverse_blocks_ = 0;
};

enum class SchwarzMode { additive, sym_multiplicative };
enum class BlockType { edges, elements, vertex_patches };

inline std::vector<Block> multiplier_blocks(const MultiplierSpace& space, BlockType type) {
  switch (type) {
    case BlockType::edges: return space.edge_blocks();
    case BlockType::elements: return space.element_blocks();
    case BlockType::vertex_patches: return space.vertex_patch_blocks();
  }
  return {};
}

/// Approximate or exact inverse of the coarse operator A_H.
class CoarseSolver {
 public:
  virtual ~CoarseSolver() = default;
  virtual Eigen::VectorXd solve(const Eigen::VectorXd& r) const = 0;
  virtual std::string name() const = 0;
};

class ExactCoarseSolver final : public CoarseSolver {
 public:
  explicit ExactCoarseSolver(const SparseMatrix& a) {
    if (a.rows() > 0) {
      ldlt_.compute(a);
      if (ldlt_.info() != Eigen::Success) throw std::runtime_error("coarse factorization failed");
    }
  }
  Eigen::VectorXd solve(const Eigen::VectorXd& r) const override {
    if (r.size() == 0) return r;
    return ldlt_.solve(r);
  }
  std::string name() const override { return "exact"; }

 private:
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

/// Multigrid cycle for the P2 primal problem over a mesh hierarchy.
/// Prolongation between P2 levels is the harmonic extension; operators are
/// rediscretized on every level. Smoothing is block Gauss-Seidel on P2 vertex
/// patches: forward sweeps before, backward sweeps after the coarse
/// correction, which keeps the cycle symmetric. The coarsest level is solved
/// exactly. cycle_index 2 gives a W-cycle.
class MultigridCoarseSolver final : public CoarseSolver {
 public:
  /// Levels 0..top of `h` carry the P2 problem; `top` is the coarse level of
  /// the two-level method.
  MultigridCoarseSolver(const MeshHierarchy& h, int top, const MaterialParams& mat, int pre = 2, int post = 2,
                        int cycle_index = 2)
      : pre_(pre), post_(post), gamma_(cycle_index) {
    if (top < 0 || top >= h.num_levels()) throw std::invalid_argument("multigrid: bad top level");
    for (int l = 0; l <= top; ++l) {
      spaces_.push_back(std::make_unique<P2Space>(h.mesh(l)));
      ops_.push_back(assemble_p2_operator(*spaces_.back(), mat));
    }
    for (int l = 1; l <= top; ++l) {
      prolong_.push_back(harmonic_extension(*spaces_[l - 1], *spaces_[l], h.lineage(l - 1), mat));
      smoothers_.push_back(BlockInverses(ops_[l], spaces_[l]->vertex_patch_blocks()));
    }
    coarsest_ = std::make_unique<ExactCoarseSolver>(ops_[0]);
  }

  int num_levels() const { return static_cast<int>(ops_.size()); }
  const SparseMatrix& op(int level) const { return ops_[level]; }

  Eigen::VectorXd solve(const Eigen::VectorXd& r) const override { return cycle(num_levels() - 1, r); }
  std::string name() const override {
    return std::string(gamma_ == 2 ? "W" : "V") + "-" + std::to_string(pre_) + "-" + std::to_string(post_);
  }

 private:
  Eigen::VectorXd cycle(int l, const Eigen::VectorXd& b) const {
    if (l == 0) return coarsest_->solve(b);
    const SparseMatrix& a = ops_[l];
    const BlockInverses& sm = smoothers_[l - 1];
    Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
    Eigen::VectorXd r = b;
    for (int s = 0; s < pre_; ++s) sm.sweep(a, x, r, true);
    const SparseMatrix& p = prolong_[l - 1];
    for (int g = 0; g < gamma_; ++g) {
      const Eigen::VectorXd e = p * cycle(l - 1, p.transpose() * r);
      x += e;
      r -= a * e;
    }
    for (int s = 0; s < post_; ++s) sm.sweep(a, x, r, false);
    return x;
  }

  int pre_, post_, gamma_;
  std::vector<std::unique_ptr<P2Space>> spaces_;
  std::vector<SparseMatrix> ops_;
  std::vector<SparseMatrix> prolong_;
  std::vector<BlockInverses> smoothers_;
  std::unique_ptr<ExactCoarseSolver> coarsest_;
};

/// One-level Schwarz: additive sum of block solves, or a forward followed
/// by a backward multiplicative sweep.
class OneLevelSchwarz final : public Preconditioner {
 public:
  OneLevelSchwarz(const SchurOperator& s, std::vector<Block> blocks, SchwarzMode mode)
      : s_(&s), blocks_(s.matrix(), std::move(blocks), s.kernel_basis()), mode_(mode) {}

  Eigen::VectorXd apply(const Eigen::VectorXd& r) const override {
    if (mode_ == SchwarzMode::additive) return blocks_.additive(r);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(r.size());
    Eigen::VectorXd res = r;
    blocks_.sweep(s_->matrix(), x, res, true);
    blocks_.sweep(s_->matrix(), x, res, false);
    return x;
  }
  std::string name() const override {
    return std::string("one-level ") + (mode_ == SchwarzMode::additive ? "additive" : "sym-multiplicative");
  }
  const BlockInverses& blocks() const { return blocks_; }

 private:
  const SchurOperator* s_;
  BlockInverses blocks_;
  SchwarzMode mode_;
};

/// Two-level Schwarz with coarse correction I B_H I^T: additive
/// (coarse + sum of block solves) or symmetrized multiplicative (forward
/// sweep, coarse correction, backward sweep).
class TwoLevelSchwarz final : public Preconditioner {
 public:
  TwoLevelSchwarz(const SchurOperator& s, std::vector<Block> blocks, SparseMatrix intergrid,
                  std::shared_ptr<const CoarseSolver> coarse, SchwarzMode mode)
      : s_(&s),
        blocks_(s.matrix(), std::move(blocks), s.kernel_basis()),
        i_(std::move(intergrid)),
        it_(i_.transpose()),
        coarse_(std::move(coarse)),
        mode_(mode) {
    if (i_.rows() != s.size()) throw std::invalid_argument("TwoLevelSchwarz: intergrid rows differ from multiplier DOFs");
  }

  Eigen::VectorXd coarse_correction(const Eigen::VectorXd& r) const { return i_ * coarse_->solve(it_ * r); }

  Eigen::VectorXd apply(const Eigen::VectorXd& r) const override {
    if (mode_ == SchwarzMode::additive) return coarse_correction(r) + blocks_.additive(r);
    const SparseMatrix& a = s_->matrix();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(r.size());
    Eigen::VectorXd res = r;
    blocks_.sweep(a, x, res, true);
    const Eigen::VectorXd c = coarse_correction(res);
    x += c;
    res -= a * c;
    blocks_.sweep(a, x, res, false);
    return x;
  }
  std::string name() const override {
    return "two-level " + std::string(mode_ == SchwarzMode::additive ? "additive" : "sym-multiplicative") + " (" +
           coarse_->name() + " coarse)";
  }
  const SparseMatrix& intergrid() const { return i_; }
  const BlockInverses& blocks() const { return blocks_; }

 private:
  const SchurOperator* s_;
  BlockInverses blocks_;
  SparseMatrix i_;
  SparseMatrix it_;
  std::shared_ptr<const CoarseSolver> coarse_;
  SchwarzMode mode_;
};

enum class PrecondKind { none, diagonal, one_level, two_level, multilevel };

struct PrecondConfig {
  PrecondKind kind = PrecondKind::diagonal;
  BlockType block_type = BlockType::vertex_patches;
  SchwarzMode mode = SchwarzMode::sym_multiplicative;
  bool use_blocks = true;  // false only to request a coarse-only method, which is rejected
  int pre_smooth = 2;
  int post_smooth = 2;
  int cycle_index = 2;
};

/// Empty string when valid.
inline std::string validate(const PrecondConfig& c) {
  if (c.kind == PrecondKind::one_level && !c.use_blocks) return "one-level Schwarz needs blocks";
  if ((c.kind == PrecondKind::two_level || c.kind == PrecondKind::multilevel) && !c.use_blocks)
    return "a coarse space alone is singular as a preconditioner; fine-level blocks are required";
  if (c.kind == PrecondKind::multilevel && (c.pre_smooth < 0 || c.post_smooth < 0 || c.cycle_index < 1))
    return "multilevel smoothing counts must be >= 0 and the cycle index >= 1";
  return {};
}

/// Builds the configured preconditioner for `s`. Two-level and multilevel
/// methods need `h` with s.system().mesh() as its finest level.
inline std::unique_ptr<Preconditioner> build_preconditioner(const PrecondConfig& c, const SchurOperator& s,
                                                            const MeshHierarchy* h = nullptr) {
  if (const std::string err = validate(c); !err.empty()) throw std::invalid_argument(err);
  switch (c.kind) {
    case PrecondKind::none: return std::make_unique<IdentityPreconditioner>();
    case PrecondKind::diagonal: return std::make_unique<DiagonalPreconditioner>(s);
    case PrecondKind::one_level:
      return std::make_unique<OneLevelSchwarz>(s, multiplier_blocks(s.system().space(), c.block_type), c.mode);
    case PrecondKind::two_level:
    case PrecondKind::multilevel: {
      if (!h || h->num_levels() < 2 || &h->finest() != &s.system().mesh())
        throw std::invalid_argument("two-level methods need a mesh hierarchy ending at the fine mesh");
      const int top = h->num_levels() - 2;
      const P2Space coarse_space(h->mesh(top));
      SparseMatrix i = intergrid_operator(coarse_space, s.system(), h->lineage(top));
      std::shared_ptr<const CoarseSolver> coarse;
      if (c.kind == PrecondKind::two_level || top == 0)
        coarse = std::make_shared<ExactCoarseSolver>(assemble_p2_operator(coarse_space, s.system().material()));
      else
        coarse = std::make_shared<MultigridCoarseSolver>(*h, top, s.system().material(), c.pre_smooth, c.post_smooth,
                                                          c.cycle_index);
      return std::make_unique<TwoLevelSchwarz>(s, multiplier_blocks(s.system().space(), c.block_type), std::move(i),
                                               std::move(coarse), c.mode);
    }
  }
  throw std::invalid_argument("unknown preconditioner kind");
}

}  // namespace hmfe
