// Study configuration (key-value text), convergence and preconditioner
// studies on the manufactured solution, mesh reports and CSV output.
#pragma once

#include "hmfe/manufactured.hpp"
#include "hmfe/schwarz.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hmfe {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Grammar, one setting per line:
///
///   line    := blank | "#" comment | key "=" value [ "#" comment ]
///   value   := token { whitespace token }
///
/// Keys (defaults in brackets):
///   grid           uniform | crisscross | hct | file            [uniform]
///   mesh_file      path, required for grid = file
///   resolutions    increasing list of 1/h                       [4 8 16 32]
///   k              0..3                                         [2]
///   mu             shear modulus                                [0.5]
///   lambda         first Lame constant                          [1]
///   nu             list of Poisson ratios; overrides lambda
///   solver         direct | pcg                                 [direct]
///   precond        none | diagonal | one-level | two-level | multilevel [diagonal]
///   blocks         list of edges | elements | vertex-patches, or none
///                  (coarse space alone; rejected)                [vertex-patches]
///   mode           list of additive | sym-multiplicative        [sym-multiplicative]
///   smoothing      pre post                                     [2 2]
///   cycle          V | W                                        [W]
///   tol            relative residual                            [1e-6]
///   maxit                                                       [500]
///   singular_tol   PCG tolerance of convergence runs on grids with a kernel [1e-12]
///   singular_maxit                                              [20000]
///   quad_boost     extra degree of the error quadrature         [4]
///   kappa0         nearly-singular vertex threshold             [0.1]
///   allow_low_order  true | false, k < 2 off macro-simplex grids [false]
///   output, report, history, export_matrix, export_rhs           output paths
struct StudyConfig {
  std::string grid = "uniform";
  std::string mesh_file;
  std::vector<int> resolutions{4, 8, 16, 32};
  int k = 2;
  double mu = 0.5;
  double lambda = 1.0;
  std::vector<double> nus;
  std::string solver = "direct";
  PrecondKind precond = PrecondKind::diagonal;
  std::vector<BlockType> blocks{BlockType::vertex_patches};
  std::vector<SchwarzMode> modes{SchwarzMode::sym_multiplicative};
  int pre_smooth = 2, post_smooth = 2, cycle_index = 2;
  double tol = 1e-6;
  int maxit = 500;
  double singular_tol = 1e-12;
  int singular_maxit = 20000;
  int quad_boost = 4;
  double kappa0 = 0.1;
  bool allow_low_order = false;
  bool coarse_only = false;
  std::string output, report, history, export_matrix, export_rhs;

  std::vector<MaterialParams> materials() const {
    if (nus.empty()) return {MaterialParams(mu, lambda)};
    std::vector<MaterialParams> out;
    for (double nu : nus) out.push_back(MaterialParams::from_poisson(mu, nu));
    return out;
  }

  PrecondConfig precond_config(BlockType b, SchwarzMode m) const {
    PrecondConfig c;
    c.kind = precond;
    c.block_type = b;
    c.mode = m;
    c.pre_smooth = pre_smooth;
    c.post_smooth = post_smooth;
    c.cycle_index = cycle_index;
    c.use_blocks = !coarse_only;
    return c;
  }
};

inline std::string to_string(PrecondKind k) {
  switch (k) {
    case PrecondKind::none: return "none";
    case PrecondKind::diagonal: return "diagonal";
    case PrecondKind::one_level: return "one-level";
    case PrecondKind::two_level: return "two-level";
    case PrecondKind::multilevel: return "multilevel";
  }
  return "?";
}
inline std::string to_string(BlockType b) {
  switch (b) {
    case BlockType::edges: return "edges";
    case BlockType::elements: return "elements";
    case BlockType::vertex_patches: return "vertex-patches";
  }
  return "?";
}
inline std::string to_string(SchwarzMode m) { return m == SchwarzMode::additive ? "additive" : "sym-multiplicative"; }

namespace detail {

inline std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline double to_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "': not a number: " + s);
}

inline int to_int(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "': not an integer: " + s);
}

}  // namespace detail

inline void validate(const StudyConfig& c) {
  if (c.grid != "uniform" && c.grid != "crisscross" && c.grid != "hct" && c.grid != "file")
    throw ConfigError("grid must be uniform, crisscross, hct or file");
  if (c.grid == "file" && c.mesh_file.empty()) throw ConfigError("grid = file needs mesh_file");
  if (c.resolutions.empty()) throw ConfigError("resolutions must not be empty");
  for (std::size_t i = 0; i < c.resolutions.size(); ++i) {
    if (c.resolutions[i] < 1) throw ConfigError("resolutions must be positive");
    if (i > 0 && c.resolutions[i] <= c.resolutions[i - 1]) throw ConfigError("resolutions must be strictly increasing");
  }
  if (c.k < 0 || c.k > 3) throw ConfigError("k must be 0, 1, 2 or 3");
  if (c.k < 2 && c.grid != "hct" && !c.allow_low_order)
    throw ConfigError("k < 2 is only stable on macro-simplex grids; use grid = hct or allow_low_order = true");
  if (!(c.mu > 0)) throw ConfigError("mu must be positive");
  if (!(c.lambda >= 0)) throw ConfigError("lambda must be nonnegative");
  for (double nu : c.nus)
    if (!(nu >= 0 && nu < 0.5)) throw ConfigError("nu must lie in [0, 0.5)");
  if (c.solver != "direct" && c.solver != "pcg") throw ConfigError("solver must be direct or pcg");
  if (!(c.tol > 0) || !(c.singular_tol > 0)) throw ConfigError("tolerances must be positive");
  if (c.maxit < 1 || c.singular_maxit < 1) throw ConfigError("iteration limits must be positive");
  if (c.blocks.empty() || c.modes.empty()) throw ConfigError("blocks and mode need at least one entry");
  if (c.quad_boost < 0) throw ConfigError("quad_boost must be nonnegative");
  for (BlockType b : c.blocks)
    for (SchwarzMode m : c.modes)
      if (const std::string err = validate(c.precond_config(b, m)); !err.empty()) throw ConfigError(err);
  if (c.precond == PrecondKind::two_level || c.precond == PrecondKind::multilevel) {
    if (c.grid != "uniform") throw ConfigError("two-level methods run on uniform grid hierarchies");
    for (int n : c.resolutions)
      if (n < 2 || (n & (n - 1)) != 0) throw ConfigError("two-level methods need resolutions that are powers of two >= 2");
  }
}

inline StudyConfig parse_config(std::istream& in) {
  StudyConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto words = detail::split_ws(line);
    if (words.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const auto key_words = detail::split_ws(line.substr(0, eq));
    const auto v = detail::split_ws(line.substr(eq + 1));
    if (key_words.size() != 1 || v.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string& key = key_words[0];
    auto one = [&]() -> const std::string& {
      if (v.size() != 1) throw ConfigError("'" + key + "' takes one value");
      return v[0];
    };
    if (key == "grid") c.grid = one();
    else if (key == "mesh_file") c.mesh_file = one();
    else if (key == "resolutions") {
      c.resolutions.clear();
      for (const auto& w : v) c.resolutions.push_back(detail::to_int(w, key));
    } else if (key == "k") c.k = detail::to_int(one(), key);
    else if (key == "mu") c.mu = detail::to_double(one(), key);
    else if (key == "lambda") c.lambda = detail::to_double(one(), key);
    else if (key == "nu") {
      c.nus.clear();
      for (const auto& w : v) c.nus.push_back(detail::to_double(w, key));
    } else if (key == "solver") c.solver = one();
    else if (key == "precond") {
      const std::string& p = one();
      if (p == "none") c.precond = PrecondKind::none;
      else if (p == "diagonal") c.precond = PrecondKind::diagonal;
      else if (p == "one-level") c.precond = PrecondKind::one_level;
      else if (p == "two-level") c.precond = PrecondKind::two_level;
      else if (p == "multilevel") c.precond = PrecondKind::multilevel;
      else throw ConfigError("unknown precond: " + p);
    } else if (key == "blocks") {
      c.blocks.clear();
      for (const auto& w : v) {
        if (w == "edges") c.blocks.push_back(BlockType::edges);
        else if (w == "elements") c.blocks.push_back(BlockType::elements);
        else if (w == "vertex-patches") c.blocks.push_back(BlockType::vertex_patches);
        else if (w == "none" && v.size() == 1) {
          c.coarse_only = true;
          c.blocks.push_back(BlockType::vertex_patches);
        }
        else throw ConfigError("unknown block type: " + w);
      }
    } else if (key == "mode") {
      c.modes.clear();
      for (const auto& w : v) {
        if (w == "additive") c.modes.push_back(SchwarzMode::additive);
        else if (w == "sym-multiplicative") c.modes.push_back(SchwarzMode::sym_multiplicative);
        else throw ConfigError("unknown mode: " + w);
      }
    } else if (key == "smoothing") {
      if (v.size() != 2) throw ConfigError("smoothing takes two counts");
      c.pre_smooth = detail::to_int(v[0], key);
      c.post_smooth = detail::to_int(v[1], key);
    } else if (key == "cycle") {
      const std::string& w = one();
      if (w == "V") c.cycle_index = 1;
      else if (w == "W") c.cycle_index = 2;
      else throw ConfigError("cycle must be V or W");
    } else if (key == "tol") c.tol = detail::to_double(one(), key);
    else if (key == "maxit") c.maxit = detail::to_int(one(), key);
    else if (key == "singular_tol") c.singular_tol = detail::to_double(one(), key);
    else if (key == "singular_maxit") c.singular_maxit = detail::to_int(one(), key);
    else if (key == "quad_boost") c.quad_boost = detail::to_int(one(), key);
    else if (key == "kappa0") c.kappa0 = detail::to_double(one(), key);
    else if (key == "allow_low_order") {
      const std::string& w = one();
      if (w != "true" && w != "false") throw ConfigError("allow_low_order must be true or false");
      c.allow_low_order = w == "true";
    } else if (key == "output") c.output = one();
    else if (key == "report") c.report = one();
    else if (key == "history") c.history = one();
    else if (key == "export_matrix") c.export_matrix = one();
    else if (key == "export_rhs") c.export_rhs = one();
    else throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  validate(c);
  return c;
}

inline StudyConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in);
}

inline TriMesh make_mesh(const StudyConfig& c, int n) {
  if (c.grid == "uniform") return uniform_mesh(n);
  if (c.grid == "crisscross") return crisscross_mesh(n);
  if (c.grid == "hct") return hct_of(uniform_mesh(n));
  return read_mesh_file(c.mesh_file);
}

// ---------------------------------------------------------------------------
// Convergence study

struct ErrorRow {
  int inv_h = 0;
  FieldErrors errors;
  std::optional<FieldErrors> orders;  // log2 ratios against the previous row
  int dofs = 0;
  int kernel_dim = 0;
  std::string solver;
  int iterations = 0;
  bool converged = true;
};

/// Solution of S lambda = b: sparse LDLT when ker S is trivial, otherwise
/// kernel-projected diagonal PCG.
struct MultiplierSolve {
  Eigen::VectorXd lambda;
  std::string solver;
  SolveReport report;
};

inline MultiplierSolve solve_multiplier(const SchurOperator& s, const Eigen::VectorXd& b, const StudyConfig& c,
                                        const Preconditioner* m = nullptr, const MeshHierarchy* h = nullptr) {
  MultiplierSolve out;
  const bool singular = s.kernel_basis().cols() > 0;
  if (c.solver == "direct" && !singular && m == nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(s.matrix());
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("sparse factorization of S failed");
    out.lambda = ldlt.solve(b);
    out.solver = "direct";
    out.report.converged = true;
    const double bn = b.norm();
    out.report.residual_history = {bn > 0 ? (b - s.apply(out.lambda)).norm() / bn : 0.0};
    out.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }
  PcgOptions opt;
  opt.tol = c.tol;
  opt.maxit = c.maxit;
  std::unique_ptr<Preconditioner> own;
  if (m == nullptr) {
    if (c.solver == "direct") {
      // singular grid: the direct path is replaced by diagonal PCG
      opt.tol = c.singular_tol;
      opt.maxit = c.singular_maxit;
      own = std::make_unique<DiagonalPreconditioner>(s);
    } else {
      own = build_preconditioner(c.precond_config(c.blocks.front(), c.modes.front()), s, h);
    }
    m = own.get();
  }
  PcgResult r = pcg(s, b, *m, opt);
  out.lambda = std::move(r.x);
  out.report = std::move(r.report);
  out.solver = "pcg/" + m->name();
  return out;
}

inline std::vector<ErrorRow> converge_study(const StudyConfig& c, std::ostream* log = nullptr) {
  std::vector<ErrorRow> rows;
  const MaterialParams mat = c.materials().front();
  const ManufacturedSolution exact(mat);
  for (int n : c.resolutions) {
    const TriMesh mesh = make_mesh(c, n);
    const HybridSystem sys(mesh, c.k, mat);
    SchurOptions so;
    so.kappa0 = c.kappa0;
    const SchurOperator s = assemble_schur(sys, so);
    const Eigen::VectorXd b = sys.assemble_rhs(exact.load_function());
    const MultiplierSolve sol = solve_multiplier(s, b, c);
    const FieldSolution fields = sys.recover_fields(sol.lambda, exact.load_function());
    ErrorRow row;
    row.inv_h = n;
    row.errors = evaluate_errors(sys, fields, exact, c.quad_boost);
    row.dofs = s.size();
    row.kernel_dim = static_cast<int>(s.kernel_basis().cols());
    row.solver = sol.solver;
    row.iterations = sol.report.iterations;
    row.converged = sol.report.converged;
    if (!rows.empty()) {
      const FieldErrors& p = rows.back().errors;
      const double r = std::log2(double(n) / rows.back().inv_h);
      row.orders = FieldErrors{std::log2(p.displacement / row.errors.displacement) / r,
                               std::log2(p.stress / row.errors.stress) / r,
                               std::log2(p.divergence / row.errors.divergence) / r};
    }
    if (log) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "1/h=%d dofs=%d kernel=%d solver=%s it=%d  u %.4e  sigma %.4e  div %.4e%s\n", n,
                    row.dofs, row.kernel_dim, row.solver.c_str(), row.iterations, row.errors.displacement,
                    row.errors.stress, row.errors.divergence, row.converged ? "" : "  (NOT CONVERGED)");
      *log << buf << std::flush;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Errors as 5 significant digits, orders with 2 decimals, blank on the
/// first row.
inline void write_error_csv(std::ostream& out, const std::vector<ErrorRow>& rows) {
  out << "1/h,u_L2,order_u,sigma_L2,order_sigma,div_sigma_L2,order_div,dofs,kernel_dim,solver,iterations,converged\n";
  for (const auto& r : rows) {
    char buf[512];
    auto ord = [&](double v) {
      char o[32];
      if (!r.orders) return std::string();
      std::snprintf(o, sizeof o, "%.2f", v);
      return std::string(o);
    };
    const FieldErrors o = r.orders.value_or(FieldErrors{});
    std::snprintf(buf, sizeof buf, "%d,%.4e,%s,%.4e,%s,%.4e,%s,%d,%d,%s,%d,%d\n", r.inv_h, r.errors.displacement,
                  ord(o.displacement).c_str(), r.errors.stress, ord(o.stress).c_str(), r.errors.divergence,
                  ord(o.divergence).c_str(), r.dofs, r.kernel_dim, r.solver.c_str(), r.iterations, r.converged ? 1 : 0);
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// Preconditioner study

struct IterationRecord {
  PrecondKind kind;
  BlockType blocks;
  SchwarzMode mode;
  int inv_h;
  double nu;
  int dofs;
  SolveReport report;
};

inline std::vector<IterationRecord> precond_study(const StudyConfig& c, std::ostream* log = nullptr) {
  std::vector<IterationRecord> out;
  std::vector<double> nus = c.nus;
  if (nus.empty()) nus.push_back(MaterialParams(c.mu, c.lambda).poisson_ratio());
  PcgOptions opt;
  opt.tol = c.tol;
  opt.maxit = c.maxit;
  for (BlockType bt : c.blocks)
    for (SchwarzMode md : c.modes)
      for (int n : c.resolutions) {
        std::optional<MeshHierarchy> h;
        std::optional<TriMesh> single;
        if (c.precond == PrecondKind::two_level || c.precond == PrecondKind::multilevel) h = MeshHierarchy::unit_square(n);
        else single = make_mesh(c, n);
        const TriMesh& mesh = h ? h->finest() : *single;
        for (double nu : nus) {
          const MaterialParams mat = MaterialParams::from_poisson(c.mu, nu);
          const ManufacturedSolution exact(mat);
          const HybridSystem sys(mesh, c.k, mat);
          SchurOptions so;
          so.kappa0 = c.kappa0;
          const SchurOperator s = assemble_schur(sys, so);
          const Eigen::VectorXd b = sys.assemble_rhs(exact.load_function());
          const auto m = build_preconditioner(c.precond_config(bt, md), s, h ? &*h : nullptr);
          PcgResult r = pcg(s, b, *m, opt);
          if (log) {
            char buf[256];
            std::snprintf(buf, sizeof buf, "%s blocks=%s mode=%s 1/h=%d nu=%.7g: %d iterations%s (%.2fs, cond ~ %.3g)\n",
                          to_string(c.precond).c_str(), to_string(bt).c_str(), to_string(md).c_str(), n, nu,
                          r.report.iterations, r.report.converged ? "" : " NOT CONVERGED", r.report.seconds,
                          r.report.condition_estimate());
            *log << buf << std::flush;
          }
          out.push_back({c.precond, bt, md, n, nu, s.size(), std::move(r.report)});
        }
      }
  return out;
}

/// Rows per (blocks, mode, 1/h), one iteration-count column per nu.
inline void write_iteration_csv(std::ostream& out, const std::vector<IterationRecord>& recs) {
  std::vector<double> nus;
  for (const auto& r : recs)
    if (std::find(nus.begin(), nus.end(), r.nu) == nus.end()) nus.push_back(r.nu);
  out << "preconditioner,blocks,mode,1/h";
  for (double nu : nus) {
    char buf[32];
    std::snprintf(buf, sizeof buf, ",%.7g", nu);
    out << buf;
  }
  out << '\n';
  for (std::size_t i = 0; i < recs.size(); i += nus.size()) {
    const auto& r0 = recs[i];
    out << to_string(r0.kind) << ',' << to_string(r0.blocks) << ',' << to_string(r0.mode) << ',' << r0.inv_h;
    for (std::size_t j = 0; j < nus.size() && i + j < recs.size(); ++j) {
      const auto& r = recs[i + j];
      out << ',' << r.report.iterations;
      if (!r.report.converged) out << '*';
    }
    out << '\n';
  }
}

/// One SolveReport row per record, prefixed by its configuration.
inline void write_iteration_reports(std::ostream& out, const std::vector<IterationRecord>& recs) {
  out << "preconditioner,blocks,mode,1/h,nu,dofs,";
  bool header = true;
  for (const auto& r : recs) {
    std::ostringstream row;
    write_report_csv(row, r.report, header);
    std::string text = row.str();
    if (header) {
      out << text.substr(0, text.find('\n') + 1);
      text = text.substr(text.find('\n') + 1);
      header = false;
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%d,%.7g,%d,", to_string(r.kind).c_str(), to_string(r.blocks).c_str(),
                  to_string(r.mode).c_str(), r.inv_h, r.nu, r.dofs);
    out << buf << text;
  }
}

// ---------------------------------------------------------------------------
// Mesh report

inline void mesh_info(std::ostream& out, const TriMesh& m, int k, double kappa0 = 0.1) {
  const auto rep = singularity_report(m, kappa0);
  const MultiplierSpace space(m, k);
  out << "nodes " << m.num_nodes() << "\ntriangles " << m.num_triangles() << "\nedges " << m.num_edges()
      << "\ninterior_edges " << m.num_interior_edges() << "\nmesh_size " << m.mesh_size() << "\nkappa_min "
      << rep.kappa_min << "\nsingular_vertices " << rep.singular_vertices.size()
      << "\ninterior_singular_vertices " << rep.interior_singular_vertices.size() << "\nnearly_singular_vertices "
      << rep.nearly_singular_vertices.size() << "\nmultiplier_dofs(k=" << k << ") " << space.total_dofs() << '\n';
  if (!rep.interior_singular_vertices.empty()) {
    out << "singular_vertex_list";
    for (int v : rep.interior_singular_vertices) out << ' ' << v;
    out << '\n';
  }
}

}  // namespace hmfe
