#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hmfe;

namespace {

// int_T x^a y^b over the reference triangle = a! b! / (a + b + 2)!
double monomial_integral(int a, int b) {
  return std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3);
}

}  // namespace

TEST(Quadrature, EdgeRuleExactness) {
  for (int deg = 0; deg <= 14; ++deg) {
    const auto r = edge_rule(deg);
    for (int p = 0; p <= deg; ++p) {
      double s = 0;
      for (std::size_t q = 0; q < r.points.size(); ++q) s += r.weights[q] * std::pow(r.points[q], p);
      EXPECT_NEAR(s, 1.0 / (p + 1), 1e-14) << "degree " << deg << " monomial " << p;
    }
  }
}

TEST(Quadrature, TriangleRuleExactnessAndPositivity) {
  for (int deg = 0; deg <= 16; ++deg) {
    const auto r = triangle_rule(deg);
    for (double w : r.weights) EXPECT_GT(w, 0);
    for (const auto& p : r.points) {
      EXPECT_GE(p.minCoeff(), 0);
      EXPECT_LE(p.sum(), 1);
    }
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b) {
        double s = 0;
        for (std::size_t q = 0; q < r.points.size(); ++q)
          s += r.weights[q] * std::pow(r.points[q].x(), a) * std::pow(r.points[q].y(), b);
        EXPECT_NEAR(s, monomial_integral(a, b), 1e-14) << deg << ' ' << a << ' ' << b;
      }
  }
}

TEST(Basis, LagrangeKroneckerAndPartitionOfUnity) {
  for (int p = 0; p <= 4; ++p) {
    const LagrangeBasis2D b(p);
    ASSERT_EQ(b.size(), (p + 1) * (p + 2) / 2);
    for (int i = 0; i < b.size(); ++i) {
      const Eigen::VectorXd v = b.eval(b.node(i));
      for (int j = 0; j < b.size(); ++j) EXPECT_NEAR(v(j), i == j ? 1.0 : 0.0, 1e-12);
    }
    const Eigen::Vector2d x(0.21, 0.37);
    EXPECT_NEAR(b.eval(x).sum(), 1.0, 1e-12);
    EXPECT_NEAR(b.grad(x).colwise().sum().norm(), 0.0, 1e-11);
    const LagrangeBasis1D e(p);
    for (int i = 0; i < e.size(); ++i)
      for (int j = 0; j < e.size(); ++j) EXPECT_NEAR(e.eval(j, e.node(i)), i == j ? 1.0 : 0.0, 1e-13);
  }
}

TEST(Basis, GradientMatchesFiniteDifference) {
  const LagrangeBasis2D b(3);
  const Eigen::Vector2d x(0.3, 0.2);
  const double h = 1e-6;
  const Eigen::MatrixXd g = b.grad(x);
  const Eigen::VectorXd dx = (b.eval(x + Eigen::Vector2d(h, 0)) - b.eval(x - Eigen::Vector2d(h, 0))) / (2 * h);
  const Eigen::VectorXd dy = (b.eval(x + Eigen::Vector2d(0, h)) - b.eval(x - Eigen::Vector2d(0, h))) / (2 * h);
  EXPECT_LT((g.col(0) - dx).norm(), 1e-7);
  EXPECT_LT((g.col(1) - dy).norm(), 1e-7);
}

TEST(Material, ComplianceOfIdentity) {
  for (double lam : {0.0, 1.0, 1e3, 1e6}) {
    const MaterialParams m(0.5, lam);
    const Eigen::Matrix2d a = apply_compliance(Eigen::Matrix2d::Identity(), m);
    const double ref = 1.0 / (2 * m.mu + 2 * m.lambda);
    EXPECT_LE((a - ref * Eigen::Matrix2d::Identity()).norm(), 1e-15 * ref);
  }
}

TEST(Material, ComplianceInvertsHooke) {
  const MaterialParams m(0.7, 2.3);
  Eigen::Matrix2d eps;
  eps << 0.3, -0.2, -0.2, 1.1;
  const Eigen::Matrix2d sigma = 2 * m.mu * eps + m.lambda * eps.trace() * Eigen::Matrix2d::Identity();
  EXPECT_LT((apply_compliance(sigma, m) - eps).norm(), 1e-14);
}

TEST(Material, PoissonConversion) {
  const auto m = MaterialParams::from_poisson(0.5, 0.49);
  EXPECT_NEAR(m.lambda, 0.49 / 0.02, 1e-10);
  EXPECT_NEAR(m.poisson_ratio(), 0.49, 1e-14);
  EXPECT_THROW(MaterialParams::from_poisson(0.5, 0.5), std::invalid_argument);
  EXPECT_THROW(MaterialParams(0.0, 1.0), std::invalid_argument);
}

TEST(Geometry, RejectsDegenerateTriangle) {
  EXPECT_THROW(ElementGeometry(Point(0, 0), Point(1, 1), Point(2, 2)), std::invalid_argument);
  EXPECT_THROW(ElementGeometry(Point(0, 0), Point(0, 1), Point(1, 0)), std::invalid_argument);
}

class LocalRanks : public ::testing::TestWithParam<int> {};

TEST_P(LocalRanks, DivergenceAndTraceBlocks) {
  const int k = GetParam();
  const ElementBases eb(k);
  const ElementGeometry g(Point(0.1, 0.0), Point(1.0, 0.2), Point(0.3, 0.9));
  const auto lm = local_matrices(g, eb, MaterialParams(0.5, 1.0));
  const int nu = eb.n_disp();
  EXPECT_EQ(oracle::numerical_rank(lm.B), nu);
  if (k >= 1) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(lm.C);
    const Eigen::MatrixXd bubbles = lu.kernel();
    EXPECT_EQ(oracle::numerical_rank(lm.B * bubbles), nu - 3);
  }
  EXPECT_LT((lm.A - lm.A.transpose()).norm(), 1e-13 * lm.A.norm());
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(lm.A).eigenvalues().minCoeff(), 0);
}

INSTANTIATE_TEST_SUITE_P(Degrees, LocalRanks, ::testing::Values(0, 1, 2, 3));

TEST(LocalMatrices, DivergenceIdentityOnConstantStress) {
  // (v, div tau) with v = 1 integrates tau nu over the boundary.
  const ElementBases eb(2);
  const ElementGeometry g(Point(0, 0), Point(2, 0.5), Point(0.4, 1.3));
  const auto lm = local_matrices(g, eb, MaterialParams());
  std::mt19937 rng(3);
  const Eigen::VectorXd coef = oracle::random_vector(eb.n_stress(), rng);
  Eigen::VectorXd ones = Eigen::VectorXd::Zero(eb.n_disp());
  for (int p = 0; p < eb.disp_scalar.size(); ++p) ones(2 * p) = 1.0;
  const Eigen::VectorXd trace_ones = oracle::field_trace(g, eb, [](const Eigen::Vector2d&) {
    return Eigen::Vector2d(1.0, 0.0);
  });
  EXPECT_NEAR(ones.dot(lm.B * coef), trace_ones.dot(lm.C * coef), 1e-12);
}

TEST(CoarseP2, RigidMotionsInKernelAndOtherwisePositive) {
  const ElementGeometry g(Point(0, 0), Point(1, 0.1), Point(0.2, 0.8));
  const auto k = coarse_p2_matrices(g, MaterialParams(0.5, 10.0));
  EXPECT_LT((k - k.transpose()).norm(), 1e-13 * k.norm());
  const LagrangeBasis2D p2(2);
  for (int mode = 0; mode < 3; ++mode) {
    Eigen::Matrix<double, 12, 1> w;
    for (int a = 0; a < 6; ++a) {
      const Point x = g.map(p2.node(a));
      const Eigen::Vector2d r = mode == 0 ? Eigen::Vector2d(1, 0) : mode == 1 ? Eigen::Vector2d(0, 1)
                                                                              : Eigen::Vector2d(-x.y(), x.x());
      w.segment<2>(2 * a) = r;
    }
    EXPECT_LT((k * w).norm(), 1e-12 * k.norm());
  }
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues();
  EXPECT_GT(ev(3), 1e-8 * ev(11));
}

TEST(CoarseP2, LinearFieldEnergy) {
  // w = (x, 0): eps = e1 e1^T, div = 1, a(w, w) = (2 mu + lambda) |K|.
  const MaterialParams mat(0.5, 3.0);
  const ElementGeometry g(Point(0, 0), Point(1, 0), Point(0, 1));
  const auto k = coarse_p2_matrices(g, mat);
  const LagrangeBasis2D p2(2);
  Eigen::Matrix<double, 12, 1> w = Eigen::Matrix<double, 12, 1>::Zero();
  for (int a = 0; a < 6; ++a) w(2 * a) = g.map(p2.node(a)).x();
  EXPECT_NEAR(w.dot(k * w), (2 * mat.mu + mat.lambda) * g.area(), 1e-13);
}
