// Simplicial 2D meshes: topology, generators, refinement and vertex
// singularity diagnostics.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hmfe {

using Point = Eigen::Vector2d;

/// Triangulation with full edge/vertex topology.
///
/// Local edge j of a triangle is the edge opposite its local vertex j, i.e.
/// it joins vertices (j+1)%3 and (j+2)%3. Edges store their endpoints sorted
/// by global index. The stored normal of an edge is the outward normal of
/// `triangles_of_edge[e][0]`, which is the lower-indexed incident triangle.
class TriMesh {
 public:
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<int, 3>> edge_of_triangle;
  std::vector<std::array<int, 2>> triangles_of_edge;  // [1] == -1 on boundary
  std::vector<bool> boundary_edge;
  std::vector<bool> boundary_vertex;
  std::vector<Point> edge_normal;

  TriMesh() = default;

  /// Builds the topology. Triangles with negative orientation are flipped;
  /// zero-area triangles, non-manifold edges and hanging nodes are rejected.
  TriMesh(std::vector<Point> coords, std::vector<std::array<int, 3>> tris)
      : nodes(std::move(coords)), triangles(std::move(tris)) {
    build_topology();
  }

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }

  int num_interior_edges() const {
    return static_cast<int>(std::count(boundary_edge.begin(), boundary_edge.end(), false));
  }

  double signed_area(int t) const {
    const auto& tri = triangles[t];
    const Point a = nodes[tri[0]], b = nodes[tri[1]], c = nodes[tri[2]];
    return 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
  }

  /// Outward unit normal of local edge j of triangle t.
  Point outward_normal(int t, int j) const {
    const auto& tri = triangles[t];
    const Point d = nodes[tri[(j + 2) % 3]] - nodes[tri[(j + 1) % 3]];
    return Point(d.y(), -d.x()).normalized();
  }

  double edge_length(int e) const { return (nodes[edges[e][1]] - nodes[edges[e][0]]).norm(); }

  /// Largest triangle diameter.
  double mesh_size() const {
    double h = 0.0;
    for (int e = 0; e < num_edges(); ++e) h = std::max(h, edge_length(e));
    return h;
  }

  /// Triangles incident to each vertex.
  std::vector<std::vector<int>> vertex_triangles() const {
    std::vector<std::vector<int>> out(nodes.size());
    for (int t = 0; t < num_triangles(); ++t)
      for (int v : triangles[t]) out[v].push_back(t);
    return out;
  }

  /// Edges incident to each vertex.
  std::vector<std::vector<int>> vertex_edges() const {
    std::vector<std::vector<int>> out(nodes.size());
    for (int e = 0; e < num_edges(); ++e) {
      out[edges[e][0]].push_back(e);
      out[edges[e][1]].push_back(e);
    }
    return out;
  }

 private:
  void build_topology() {
    const int nt = num_triangles();
    for (int t = 0; t < nt; ++t) {
      for (int v : triangles[t])
        if (v < 0 || v >= num_nodes()) throw std::invalid_argument("TriMesh: vertex index out of range");
      const double area = signed_area(t);
      const auto& tri = triangles[t];
      const double scale = std::max({(nodes[tri[1]] - nodes[tri[0]]).squaredNorm(),
                                     (nodes[tri[2]] - nodes[tri[0]]).squaredNorm(), 1e-300});
      if (std::abs(area) <= 1e-14 * scale) throw std::invalid_argument("TriMesh: zero-area triangle");
      if (area < 0) std::swap(triangles[t][1], triangles[t][2]);
    }

    std::map<std::pair<int, int>, int> index;
    edges.clear();
    triangles_of_edge.clear();
    edge_of_triangle.assign(nt, {-1, -1, -1});
    for (int t = 0; t < nt; ++t) {
      for (int j = 0; j < 3; ++j) {
        int a = triangles[t][(j + 1) % 3], b = triangles[t][(j + 2) % 3];
        if (a > b) std::swap(a, b);
        auto [it, inserted] = index.try_emplace({a, b}, static_cast<int>(edges.size()));
        if (inserted) {
          edges.push_back({a, b});
          triangles_of_edge.push_back({t, -1});
        } else {
          auto& adj = triangles_of_edge[it->second];
          if (adj[1] != -1) throw std::invalid_argument("TriMesh: edge shared by more than two triangles");
          adj[1] = t;
        }
        edge_of_triangle[t][j] = it->second;
      }
    }

    const int ne = num_edges();
    boundary_edge.assign(ne, false);
    boundary_vertex.assign(nodes.size(), false);
    edge_normal.assign(ne, Point::Zero());
    for (int e = 0; e < ne; ++e) {
      auto& adj = triangles_of_edge[e];
      if (adj[1] == -1) {
        boundary_edge[e] = true;
        boundary_vertex[edges[e][0]] = true;
        boundary_vertex[edges[e][1]] = true;
      } else if (adj[1] < adj[0]) {
        std::swap(adj[0], adj[1]);
      }
      const int t = adj[0];
      for (int j = 0; j < 3; ++j)
        if (edge_of_triangle[t][j] == e) edge_normal[e] = outward_normal(t, j);
    }
    reject_hanging_nodes();
  }

  // A node lying strictly inside a boundary edge marks a non-conforming join.
  void reject_hanging_nodes() const {
    for (int e = 0; e < num_edges(); ++e) {
      if (!boundary_edge[e]) continue;
      const Point a = nodes[edges[e][0]], b = nodes[edges[e][1]];
      const Point d = b - a;
      const double len2 = d.squaredNorm();
      for (int v = 0; v < num_nodes(); ++v) {
        if (v == edges[e][0] || v == edges[e][1]) continue;
        const Point p = nodes[v] - a;
        const double s = p.dot(d) / len2;
        if (s <= 1e-12 || s >= 1 - 1e-12) continue;
        const double cross = p.x() * d.y() - p.y() * d.x();
        if (std::abs(cross) <= 1e-12 * len2) throw std::invalid_argument("TriMesh: hanging node detected");
      }
    }
  }
};

/// Checks every topological invariant; returns an empty string when valid.
inline std::string validate(const TriMesh& m) {
  std::ostringstream err;
  for (int t = 0; t < m.num_triangles(); ++t)
    if (m.signed_area(t) <= 0) err << "triangle " << t << " not positively oriented\n";
  for (int e = 0; e < m.num_edges(); ++e) {
    const auto& adj = m.triangles_of_edge[e];
    const bool has_two = adj[1] != -1;
    if (has_two == m.boundary_edge[e]) err << "edge " << e << " incidence mismatch\n";
    if (std::abs(m.edge_normal[e].norm() - 1.0) > 1e-12) err << "edge " << e << " normal not unit\n";
    if (has_two && adj[0] > adj[1]) err << "edge " << e << " triangles not sorted\n";
    if (m.edges[e][0] >= m.edges[e][1]) err << "edge " << e << " endpoints not sorted\n";
    int local = -1;
    for (int j = 0; j < 3; ++j)
      if (m.edge_of_triangle[adj[0]][j] == e) local = j;
    if (local < 0 || (m.outward_normal(adj[0], local) - m.edge_normal[e]).norm() > 1e-12)
      err << "edge " << e << " normal convention violated\n";
  }
  const int euler = m.num_nodes() - m.num_edges() + m.num_triangles();
  if (euler != 1) err << "Euler characteristic " << euler << " != 1\n";
  return err.str();
}

// ---------------------------------------------------------------------------
// Generators on the unit square

/// Square cells split by the diagonal from (x,y) to (x+h,y+h).
inline TriMesh uniform_mesh(int n) {
  if (n < 1) throw std::invalid_argument("uniform_mesh: resolution must be >= 1");
  std::vector<Point> p;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) p.emplace_back(double(i) / n, double(j) / n);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::array<int, 3>> t;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      t.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      t.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return TriMesh(std::move(p), std::move(t));
}

/// Square cells split into four triangles by the cell center.
inline TriMesh crisscross_mesh(int n) {
  if (n < 1) throw std::invalid_argument("crisscross_mesh: resolution must be >= 1");
  std::vector<Point> p;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) p.emplace_back(double(i) / n, double(j) / n);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::array<int, 3>> t;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int c = static_cast<int>(p.size());
      p.emplace_back((i + 0.5) / n, (j + 0.5) / n);
      const int a = id(i, j), b = id(i + 1, j), d = id(i + 1, j + 1), e = id(i, j + 1);
      t.push_back({a, b, c});
      t.push_back({b, d, c});
      t.push_back({d, e, c});
      t.push_back({e, a, c});
    }
  return TriMesh(std::move(p), std::move(t));
}

/// Macro-simplex (HCT) split: each triangle joined to its barycenter.
inline TriMesh hct_of(const TriMesh& base) {
  std::vector<Point> p = base.nodes;
  std::vector<std::array<int, 3>> t;
  for (const auto& tri : base.triangles) {
    const int g = static_cast<int>(p.size());
    p.push_back((base.nodes[tri[0]] + base.nodes[tri[1]] + base.nodes[tri[2]]) / 3.0);
    t.push_back({tri[0], tri[1], g});
    t.push_back({tri[1], tri[2], g});
    t.push_back({tri[2], tri[0], g});
  }
  return TriMesh(std::move(p), std::move(t));
}

/// Result of a uniform refinement together with its lineage.
struct RefinedMesh {
  TriMesh mesh;
  std::vector<int> parent;          // fine triangle -> coarse triangle
  std::vector<int> child_slot;      // 0,1,2 corner children (at coarse vertex j), 3 middle
  std::vector<int> midpoint_node;   // coarse edge -> fine node at its midpoint
};

/// Red refinement: every triangle split into 4 through its edge midpoints.
inline RefinedMesh uniform_refine(const TriMesh& coarse) {
  RefinedMesh r;
  std::vector<Point> p = coarse.nodes;
  r.midpoint_node.resize(coarse.num_edges());
  for (int e = 0; e < coarse.num_edges(); ++e) {
    r.midpoint_node[e] = static_cast<int>(p.size());
    p.push_back(0.5 * (coarse.nodes[coarse.edges[e][0]] + coarse.nodes[coarse.edges[e][1]]));
  }
  std::vector<std::array<int, 3>> t;
  for (int c = 0; c < coarse.num_triangles(); ++c) {
    const auto& v = coarse.triangles[c];
    std::array<int, 3> m{};
    for (int j = 0; j < 3; ++j) m[j] = r.midpoint_node[coarse.edge_of_triangle[c][j]];
    // m[j] is the midpoint opposite v[j]
    t.push_back({v[0], m[2], m[1]});
    t.push_back({m[2], v[1], m[0]});
    t.push_back({m[1], m[0], v[2]});
    t.push_back({m[0], m[1], m[2]});
    for (int s = 0; s < 4; ++s) {
      r.parent.push_back(c);
      r.child_slot.push_back(s);
    }
  }
  r.mesh = TriMesh(std::move(p), std::move(t));
  return r;
}

// ---------------------------------------------------------------------------
// Text format: "nodes N", N rows "x y", "triangles T", T rows of 1-based ids.

inline TriMesh read_mesh(std::istream& in) {
  std::string word;
  std::size_t n = 0, nt = 0;
  if (!(in >> word >> n) || word != "nodes") throw std::runtime_error("mesh file: expected 'nodes N'");
  std::vector<Point> p(n);
  for (auto& q : p)
    if (!(in >> q.x() >> q.y())) throw std::runtime_error("mesh file: bad node row");
  if (!(in >> word >> nt) || word != "triangles") throw std::runtime_error("mesh file: expected 'triangles T'");
  std::vector<std::array<int, 3>> t(nt);
  for (auto& tri : t) {
    for (int& v : tri) {
      if (!(in >> v)) throw std::runtime_error("mesh file: bad triangle row");
      --v;
    }
  }
  return TriMesh(std::move(p), std::move(t));
}

inline TriMesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file " + path);
  return read_mesh(in);
}

inline void write_mesh(std::ostream& out, const TriMesh& m) {
  out << "nodes " << m.num_nodes() << '\n';
  out.precision(17);
  for (const auto& q : m.nodes) out << q.x() << ' ' << q.y() << '\n';
  out << "triangles " << m.num_triangles() << '\n';
  for (const auto& t : m.triangles) out << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

// ---------------------------------------------------------------------------
// Vertex singularity

struct VertexSingularityReport {
  std::vector<double> kappa_per_vertex;  // +inf where no adjacent pair exists
  double kappa_min = std::numeric_limits<double>::infinity();
  std::vector<int> singular_vertices;           // kappa < singular_tol
  std::vector<int> interior_singular_vertices;  // subset away from the boundary
  std::vector<int> nearly_singular_vertices;    // kappa < kappa0
};

/// Interior angle of triangle t at its vertex v.
inline double vertex_angle(const TriMesh& m, int t, int v) {
  const auto& tri = m.triangles[t];
  int j = 0;
  while (tri[j] != v) ++j;
  const Point a = m.nodes[tri[(j + 1) % 3]] - m.nodes[v];
  const Point b = m.nodes[tri[(j + 2) % 3]] - m.nodes[v];
  return std::atan2(std::abs(a.x() * b.y() - a.y() * b.x()), a.dot(b));
}

/// Triangles around v in consecutive order; for boundary vertices the walk
/// starts at a triangle owning a boundary edge through v.
inline std::vector<int> ordered_fan(const TriMesh& m, int v, const std::vector<int>& incident) {
  if (incident.empty()) return {};
  auto edges_at = [&](int t) {
    std::array<int, 2> out{-1, -1};
    int n = 0;
    for (int j = 0; j < 3; ++j) {
      const int e = m.edge_of_triangle[t][j];
      if (m.edges[e][0] == v || m.edges[e][1] == v) out[n++] = e;
    }
    return out;
  };
  int start = incident.front();
  int entry = -1;
  if (m.boundary_vertex[v]) {
    for (int t : incident) {
      for (int e : edges_at(t))
        if (m.boundary_edge[e]) {
          start = t;
          entry = e;
        }
      if (entry != -1) break;
    }
  }
  std::vector<int> fan{start};
  int t = start;
  int from = entry == -1 ? edges_at(start)[0] : entry;
  while (fan.size() < incident.size()) {
    const auto es = edges_at(t);
    const int exit = es[0] == from ? es[1] : es[0];
    if (m.boundary_edge[exit]) break;
    const auto& adj = m.triangles_of_edge[exit];
    const int next = adj[0] == t ? adj[1] : adj[0];
    if (next == start) break;
    fan.push_back(next);
    t = next;
    from = exit;
  }
  if (fan.size() != incident.size()) throw std::runtime_error("ordered_fan: vertex fan is not connected");
  return fan;
}

/// kappa(a) = max over consecutive triangle pairs of |theta_i + theta_j - pi|,
/// cyclic for interior vertices.
inline VertexSingularityReport singularity_report(const TriMesh& m, double kappa0 = 0.1,
                                                  double singular_tol = 1e-8) {
  VertexSingularityReport r;
  const auto vt = m.vertex_triangles();
  r.kappa_per_vertex.assign(m.num_nodes(), std::numeric_limits<double>::infinity());
  for (int v = 0; v < m.num_nodes(); ++v) {
    const auto fan = ordered_fan(m, v, vt[v]);
    const std::size_t n = fan.size();
    if (n < 2) continue;
    std::vector<double> theta(n);
    for (std::size_t i = 0; i < n; ++i) theta[i] = vertex_angle(m, fan[i], v);
    const std::size_t pairs = m.boundary_vertex[v] ? n - 1 : n;
    double kappa = 0.0;
    for (std::size_t i = 0; i < pairs; ++i)
      kappa = std::max(kappa, std::abs(theta[i] + theta[(i + 1) % n] - std::numbers::pi));
    r.kappa_per_vertex[v] = kappa;
    r.kappa_min = std::min(r.kappa_min, kappa);
    if (kappa < singular_tol) {
      r.singular_vertices.push_back(v);
      if (!m.boundary_vertex[v]) r.interior_singular_vertices.push_back(v);
    }
    if (kappa < kappa0) r.nearly_singular_vertices.push_back(v);
  }
  return r;
}

}  // namespace hmfe
