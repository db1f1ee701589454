#include "hmfe/hmfe.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <set>
#include <sstream>

using namespace hmfe;

TEST(Mesh, CrisscrossSingleCellCounts) {
  const TriMesh m = crisscross_mesh(1);
  EXPECT_EQ(m.num_triangles(), 4);
  EXPECT_EQ(m.num_nodes(), 5);
  EXPECT_EQ(m.num_edges(), 8);
  EXPECT_EQ(m.num_interior_edges(), 4);
  EXPECT_EQ(validate(m), "");
}

TEST(Mesh, HctOfSingleCellCounts) {
  const TriMesh m = hct_of(uniform_mesh(1));
  EXPECT_EQ(m.num_triangles(), 6);
  EXPECT_EQ(m.num_nodes(), 6);
  EXPECT_EQ(m.num_edges(), 11);
}

TEST(Mesh, EulerCharacteristicOfGenerators) {
  for (int n : {1, 2, 3, 5})
    for (const TriMesh& m : {uniform_mesh(n), crisscross_mesh(n), hct_of(uniform_mesh(n))}) {
      EXPECT_EQ(m.num_nodes() - m.num_edges() + m.num_triangles(), 1);
      double area = 0;
      for (int t = 0; t < m.num_triangles(); ++t) {
        EXPECT_GT(m.signed_area(t), 0);
        area += m.signed_area(t);
      }
      EXPECT_NEAR(area, 1.0, 1e-13);
    }
}

TEST(Mesh, UniformDiagonalRunsBottomLeftToTopRight) {
  const TriMesh m = uniform_mesh(1);
  ASSERT_EQ(m.num_edges(), 5);
  bool found = false;
  for (const auto& e : m.edges) {
    const Point a = m.nodes[e[0]], b = m.nodes[e[1]];
    if ((a - Point(0, 0)).norm() < 1e-14 && (b - Point(1, 1)).norm() < 1e-14) found = true;
  }
  EXPECT_TRUE(found);
}

TEST(Mesh, BoundaryFlags) {
  const TriMesh m = uniform_mesh(3);
  int boundary = 0;
  for (int e = 0; e < m.num_edges(); ++e) {
    const bool on = m.triangles_of_edge[e][1] == -1;
    EXPECT_EQ(bool(m.boundary_edge[e]), on);
    boundary += on;
  }
  EXPECT_EQ(boundary, 12);
  int bv = 0;
  for (bool b : m.boundary_vertex) bv += b;
  EXPECT_EQ(bv, 12);
}

TEST(Mesh, OutwardNormalsAreUnitAndOutward) {
  const TriMesh m = crisscross_mesh(2);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    const Point c = (m.nodes[tri[0]] + m.nodes[tri[1]] + m.nodes[tri[2]]) / 3.0;
    for (int j = 0; j < 3; ++j) {
      const Point nu = m.outward_normal(t, j);
      EXPECT_NEAR(nu.norm(), 1.0, 1e-14);
      const Point mid = 0.5 * (m.nodes[tri[(j + 1) % 3]] + m.nodes[tri[(j + 2) % 3]]);
      EXPECT_GT(nu.dot(mid - c), 0);
    }
  }
}

TEST(Mesh, RejectsDegenerateAndHanging) {
  EXPECT_THROW(TriMesh({{0, 0}, {1, 0}, {2, 0}}, {{0, 1, 2}}), std::invalid_argument);
  // midpoint of the long edge belongs to one side only
  EXPECT_THROW(TriMesh({{0, 0}, {1, 0}, {0, 1}, {0.5, 0.5}, {1, 1}}, {{0, 1, 2}, {1, 4, 3}, {3, 4, 2}}),
               std::invalid_argument);
}

TEST(Mesh, ReadWriteRoundTrip) {
  const TriMesh m = crisscross_mesh(2);
  std::stringstream io;
  write_mesh(io, m);
  const TriMesh r = read_mesh(io);
  ASSERT_EQ(r.num_nodes(), m.num_nodes());
  ASSERT_EQ(r.num_triangles(), m.num_triangles());
  for (int i = 0; i < m.num_nodes(); ++i) EXPECT_EQ((r.nodes[i] - m.nodes[i]).norm(), 0.0);
  EXPECT_EQ(r.triangles, m.triangles);
}

TEST(Mesh, MalformedFileRejected) {
  std::istringstream bad("nodes 3\n0 0\n1 0\n");
  EXPECT_ANY_THROW(read_mesh(bad));
}

TEST(Singularity, CrisscrossCentersAreSingular) {
  const TriMesh m = crisscross_mesh(1);
  const auto rep = singularity_report(m);
  ASSERT_EQ(rep.interior_singular_vertices.size(), 1u);
  const int v = rep.interior_singular_vertices[0];
  EXPECT_NEAR((m.nodes[v] - Point(0.5, 0.5)).norm(), 0.0, 1e-14);
  EXPECT_NEAR(rep.kappa_per_vertex[v], 0.0, 1e-13);

  const auto rep4 = singularity_report(crisscross_mesh(4));
  EXPECT_EQ(rep4.interior_singular_vertices.size(), 16u);
}

TEST(Singularity, UniformGridHasNone) {
  const auto rep = singularity_report(uniform_mesh(4));
  EXPECT_TRUE(rep.interior_singular_vertices.empty());
  EXPECT_GT(rep.kappa_min, 0.1);
}

TEST(Singularity, EquilateralFanKappa) {
  // Six equilateral triangles around the origin: every adjacent angle sum is 2 pi / 3.
  std::vector<Point> p = {{0, 0}};
  for (int i = 0; i < 6; ++i) p.emplace_back(std::cos(i * std::numbers::pi / 3), std::sin(i * std::numbers::pi / 3));
  std::vector<std::array<int, 3>> t;
  for (int i = 0; i < 6; ++i) t.push_back({0, 1 + i, 1 + (i + 1) % 6});
  const TriMesh m(p, t);
  const auto rep = singularity_report(m);
  EXPECT_NEAR(rep.kappa_per_vertex[0], std::numbers::pi / 3, 1e-13);
}

TEST(Singularity, HctIsNonsingularWithPositiveKappa) {
  const auto rep = singularity_report(hct_of(uniform_mesh(2)));
  EXPECT_TRUE(rep.interior_singular_vertices.empty());
  EXPECT_GT(rep.kappa_min, 0.0);
}

TEST(Singularity, PerturbedCenterIsNotSingular) {
  TriMesh m = crisscross_mesh(1);
  const int c = singularity_report(m).interior_singular_vertices.at(0);
  std::vector<Point> p = m.nodes;
  p[c] += Point(0.01, 0.0);
  const TriMesh q(p, m.triangles);
  EXPECT_TRUE(singularity_report(q).interior_singular_vertices.empty());
}

TEST(Refinement, RedRefinementLineage) {
  const TriMesh coarse = uniform_mesh(2);
  const RefinedMesh r = uniform_refine(coarse);
  EXPECT_EQ(r.mesh.num_triangles(), 4 * coarse.num_triangles());
  EXPECT_EQ(r.mesh.num_nodes(), coarse.num_nodes() + coarse.num_edges());
  for (int t = 0; t < r.mesh.num_triangles(); ++t) {
    const int c = r.parent[t];
    EXPECT_NEAR(r.mesh.signed_area(t), coarse.signed_area(c) / 4, 1e-15);
    const auto& tri = r.mesh.triangles[t];
    const Point centroid = (r.mesh.nodes[tri[0]] + r.mesh.nodes[tri[1]] + r.mesh.nodes[tri[2]]) / 3.0;
    const ElementGeometry g(coarse, c);
    const Eigen::Vector2d xi = g.to_reference(centroid);
    EXPECT_GT(xi.minCoeff(), 0);
    EXPECT_LT(xi.sum(), 1);
  }
}

TEST(Refinement, HierarchyMatchesDirectGrid) {
  const MeshHierarchy h = MeshHierarchy::unit_square(8);
  EXPECT_EQ(h.num_levels(), 4);
  const TriMesh direct = uniform_mesh(8);
  EXPECT_EQ(h.finest().num_triangles(), direct.num_triangles());
  std::set<std::pair<long, long>> a, b;
  auto key = [](const TriMesh& m, const std::array<int, 2>& e) {
    const Point s = 0.5 * (m.nodes[e[0]] + m.nodes[e[1]]) * 1024;
    return std::make_pair(std::lround(s.x()), std::lround(s.y()));
  };
  for (const auto& e : h.finest().edges) a.insert(key(h.finest(), e));
  for (const auto& e : direct.edges) b.insert(key(direct, e));
  EXPECT_EQ(a, b);
  EXPECT_THROW(MeshHierarchy::unit_square(6), std::invalid_argument);
}
