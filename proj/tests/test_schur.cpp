#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace hmfe;

TEST(MultiplierSpace, DofCounts) {
  const TriMesh u1 = uniform_mesh(1), c1 = crisscross_mesh(1), u4 = uniform_mesh(4);
  EXPECT_EQ(MultiplierSpace(u1, 2).total_dofs(), 8);
  EXPECT_EQ(MultiplierSpace(c1, 2).total_dofs(), 32);
  // Euler: E = V + T - 1, of which 4n lie on the boundary
  const int interior = u4.num_nodes() + u4.num_triangles() - 1 - 4 * 4;
  EXPECT_EQ(MultiplierSpace(u4, 2).total_dofs(), 2 * 4 * interior);
}

TEST(MultiplierSpace, BlocksCoverEveryDof) {
  const TriMesh m = uniform_mesh(3);
  const MultiplierSpace s(m, 1);
  for (const auto& blocks : {s.edge_blocks(), s.element_blocks(), s.vertex_patch_blocks()}) {
    std::vector<int> seen(s.total_dofs(), 0);
    for (const auto& b : blocks)
      for (int d : b) ++seen[d];
    for (int c : seen) EXPECT_GE(c, 1);
  }
}

TEST(Schur, MatrixFreeEqualsAssembled) {
  const TriMesh m = crisscross_mesh(2);
  const HybridSystem sys(m, 2, MaterialParams(0.5, 3.0));
  SchurOptions opt;
  opt.assemble = false;
  SchurOperator s = assemble_schur(sys, opt);
  std::mt19937 rng(1);
  const Eigen::VectorXd x = oracle::random_vector(s.size(), rng);
  const Eigen::VectorXd y0 = s.apply(x);
  s.assemble();
  const Eigen::VectorXd y1 = s.apply(x);
  EXPECT_LT((y0 - y1).norm(), 1e-13 * y1.norm());
  EXPECT_LT((s.diagonal() - Eigen::VectorXd(s.matrix().diagonal())).norm(), 1e-14 * y1.norm());
}

TEST(Schur, QuadraticFormIsSumOfElementEnergies) {
  const TriMesh m = uniform_mesh(2);
  const HybridSystem sys(m, 2, MaterialParams(0.5, 1.0));
  const SchurOperator s = assemble_schur(sys);
  std::mt19937 rng(2);
  const Eigen::VectorXd x = oracle::random_vector(s.size(), rng);
  double energy = 0;
  for (int t = 0; t < sys.num_elements(); ++t) energy += sys.condensation(t).energy(sys.gather(x, t));
  EXPECT_NEAR(x.dot(s.apply(x)), energy, 1e-12 * energy);
}

TEST(Schur, OneInteriorEdgeIsDefinite) {
  const TriMesh m = uniform_mesh(1);
  const HybridSystem sys(m, 2, MaterialParams(0.5, 1.0));
  const SchurOperator s = assemble_schur(sys);
  ASSERT_EQ(s.size(), 8);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(oracle::dense(s.matrix())).eigenvalues();
  EXPECT_GT(ev.minCoeff(), 1e-8 * ev.maxCoeff());
}

class SchurGrids : public ::testing::TestWithParam<std::tuple<std::string, int, int>> {
 protected:
  static TriMesh grid(const std::string& kind, int n) {
    if (kind == "uniform") return uniform_mesh(n);
    if (kind == "crisscross") return crisscross_mesh(n);
    return hct_of(uniform_mesh(n));
  }
};

TEST_P(SchurGrids, SymmetricAndSemidefinite) {
  const auto [kind, n, k] = GetParam();
  const TriMesh m = grid(kind, n);
  const HybridSystem sys(m, k, MaterialParams(0.5, 1.0));
  const SchurOperator s = assemble_schur(sys);
  const SparseMatrix& a = s.matrix();
  const SparseMatrix at = a.transpose();
  EXPECT_LE((a - at).norm(), 1e-12 * a.norm());
  std::mt19937 rng(7);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::VectorXd x = oracle::random_vector(s.size(), rng);
    worst = std::min(worst, x.dot(a * x) / x.squaredNorm());
  }
  EXPECT_GE(worst, -1e-12 * a.norm());
}

TEST_P(SchurGrids, KernelMatchesDenseRank) {
  const auto [kind, n, k] = GetParam();
  if (n > 2) GTEST_SKIP() << "dense rank only on small grids";
  const TriMesh m = grid(kind, n);
  const HybridSystem sys(m, k, MaterialParams(0.5, 1.0));
  const SchurOperator s = assemble_schur(sys);
  const Eigen::MatrixXd dense = oracle::dense(s.matrix());
  const int nullity = s.size() - oracle::numerical_rank(dense, 1e-10);
  EXPECT_EQ(s.kernel_basis().cols(), nullity);
  if (kind == "crisscross") EXPECT_GT(nullity, 0);
  else EXPECT_EQ(nullity, 0);
  const Eigen::MatrixXd z = oracle::dense(s.kernel_basis());
  if (z.cols() > 0) {
    EXPECT_LT((z.transpose() * z - Eigen::MatrixXd::Identity(z.cols(), z.cols())).norm(), 1e-12);
    EXPECT_LT((dense * z).norm(), 1e-10 * dense.norm());
  }
}

INSTANTIATE_TEST_SUITE_P(Grids, SchurGrids,
                         ::testing::Values(std::make_tuple("uniform", 1, 2), std::make_tuple("uniform", 2, 2),
                                           std::make_tuple("uniform", 4, 3), std::make_tuple("crisscross", 1, 2),
                                           std::make_tuple("crisscross", 2, 2), std::make_tuple("crisscross", 2, 3),
                                           std::make_tuple("crisscross", 4, 2), std::make_tuple("hct", 1, 0),
                                           std::make_tuple("hct", 2, 0), std::make_tuple("hct", 2, 1)));

TEST(Kernel, PerturbedCenterRemovesKernel) {
  TriMesh m = crisscross_mesh(1);
  const int c = singularity_report(m).interior_singular_vertices.at(0);
  std::vector<Point> p = m.nodes;
  p[c] += Point(0.01, 0.0);
  const TriMesh q(p, m.triangles);
  const HybridSystem sys(q, 2, MaterialParams());
  const SchurOperator s = assemble_schur(sys);
  EXPECT_EQ(s.kernel_basis().cols(), 0);
  EXPECT_EQ(oracle::numerical_rank(oracle::dense(s.matrix()), 1e-10), s.size());
}

TEST(Kernel, GrowsWithSingularVertices) {
  const TriMesh m = crisscross_mesh(4);
  const HybridSystem sys(m, 2, MaterialParams());
  const SchurOperator s = assemble_schur(sys);
  const auto per_vertex = s.kernel_basis().cols() / 16;
  EXPECT_GT(per_vertex, 0);
  EXPECT_EQ(s.kernel_basis().cols(), 16 * per_vertex);
}

TEST(Rhs, ZeroLoadAndKernelConsistency) {
  const TriMesh m = crisscross_mesh(4);
  const HybridSystem sys(m, 2, MaterialParams());
  const SchurOperator s = assemble_schur(sys);
  EXPECT_EQ(sys.assemble_rhs([](const Point&) { return Vector2(0, 0); }).norm(), 0.0);
  const Eigen::VectorXd b = sys.assemble_rhs(ManufacturedSolution(MaterialParams()).load_function());
  const Eigen::VectorXd zb = s.kernel_basis().transpose() * b;
  EXPECT_LT(zb.cwiseAbs().maxCoeff(), 1e-10 * b.norm());
}

TEST(FullSystem, RhsMatchesDenseSchurComplement) {
  // Eliminate (sigma, u) from the dense monolithic system and compare.
  const TriMesh m = uniform_mesh(2);
  const HybridSystem sys(m, 2, MaterialParams(0.5, 1.0));
  const ManufacturedSolution exact(sys.material());
  const SchurOperator s = assemble_schur(sys);
  const Eigen::VectorXd b = sys.assemble_rhs(exact.load_function());
  const auto dense = oracle::dense_hybrid_solve(sys, exact.load_function());
  // the monolithic multiplier solves the condensed system
  EXPECT_LT((s.apply(dense.lambda) - b).norm(), 1e-10 * b.norm());
}

class FullSystem : public ::testing::TestWithParam<std::tuple<std::string, int, int>> {};

TEST_P(FullSystem, CondensedPathEqualsMonolithicSolve) {
  const auto [kind, n, k] = GetParam();
  const TriMesh m = kind == "uniform" ? uniform_mesh(n) : kind == "crisscross" ? crisscross_mesh(n)
                                                                               : hct_of(uniform_mesh(n));
  ASSERT_LE(m.num_triangles(), 64);
  const HybridSystem sys(m, k, MaterialParams(0.5, 1.0));
  const ManufacturedSolution exact(sys.material());
  const SchurOperator s = assemble_schur(sys);
  const Eigen::VectorXd b = sys.assemble_rhs(exact.load_function());
  const MultiplierSolve sol = solve_multiplier(s, b, StudyConfig{});
  ASSERT_TRUE(sol.report.converged);
  const FieldSolution fields = sys.recover_fields(sol.lambda, exact.load_function());
  const auto ref = oracle::dense_hybrid_solve(sys, exact.load_function());
  const auto [es, eu] = oracle::relative_l2(sys, fields, ref.fields);
  EXPECT_LT(es, 1e-9);
  EXPECT_LT(eu, 1e-9);
  EXPECT_LT(sys.stress_jump(fields).cwiseAbs().maxCoeff(), 1e-8);
}

INSTANTIATE_TEST_SUITE_P(Small, FullSystem,
                         ::testing::Values(std::make_tuple("uniform", 1, 2), std::make_tuple("uniform", 2, 2),
                                           std::make_tuple("uniform", 4, 2), std::make_tuple("uniform", 2, 3),
                                           std::make_tuple("crisscross", 1, 2), std::make_tuple("crisscross", 2, 2),
                                           std::make_tuple("crisscross", 4, 2), std::make_tuple("hct", 1, 0),
                                           std::make_tuple("hct", 2, 0), std::make_tuple("hct", 2, 1)));

TEST(Export, TripletAndVectorFormats) {
  const TriMesh m = uniform_mesh(1);
  const HybridSystem sys(m, 2, MaterialParams());
  const SchurOperator s = assemble_schur(sys);
  std::ostringstream out;
  write_triplets(out, s.matrix());
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  EXPECT_FALSE(header.empty());
  int r, c, count = 0;
  double v;
  Eigen::MatrixXd back = Eigen::MatrixXd::Zero(8, 8);
  while (in >> r >> c >> v) {
    back(r, c) = v;
    ++count;
  }
  EXPECT_EQ(count, s.matrix().nonZeros());
  EXPECT_LT((back - oracle::dense(s.matrix())).norm(), 1e-15 * back.norm() + 1e-300);
}
