// hmfe: convergence and preconditioner studies for the hybridized mixed
// elasticity discretization.
//
// Exit codes: 0 success, 1 runtime error, 2 invalid arguments or config,
// 3 an iterative solve did not converge.

#include "hmfe/hmfe.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int kRuntimeError = 1;
constexpr int kInvalidInput = 2;
constexpr int kNotConverged = 3;

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

int run_converge(const std::string& config_path, std::string output) {
  const hmfe::StudyConfig cfg = hmfe::parse_config_file(config_path);
  if (output.empty()) output = cfg.output;
  const auto rows = hmfe::converge_study(cfg, &std::cerr);
  if (output.empty() || output == "-") {
    hmfe::write_error_csv(std::cout, rows);
  } else {
    auto out = open_output(output);
    hmfe::write_error_csv(out, rows);
  }
  for (const auto& r : rows)
    if (!r.converged) return kNotConverged;
  return 0;
}

int run_precond_study(const std::string& config_path, std::string output) {
  const hmfe::StudyConfig cfg = hmfe::parse_config_file(config_path);
  if (output.empty()) output = cfg.output;
  const auto recs = hmfe::precond_study(cfg, &std::cerr);
  if (output.empty() || output == "-") {
    hmfe::write_iteration_csv(std::cout, recs);
  } else {
    auto out = open_output(output);
    hmfe::write_iteration_csv(out, recs);
  }
  if (!cfg.report.empty()) {
    auto out = open_output(cfg.report);
    hmfe::write_iteration_reports(out, recs);
  }
  for (const auto& r : recs)
    if (!r.report.converged) return kNotConverged;
  return 0;
}

int run_solve(const std::string& config_path) {
  const hmfe::StudyConfig cfg = hmfe::parse_config_file(config_path);
  const int n = cfg.resolutions.front();
  const hmfe::MaterialParams mat = cfg.materials().front();
  const bool two_level = cfg.precond == hmfe::PrecondKind::two_level || cfg.precond == hmfe::PrecondKind::multilevel;
  std::optional<hmfe::MeshHierarchy> h;
  std::optional<hmfe::TriMesh> single;
  if (two_level) h = hmfe::MeshHierarchy::unit_square(n);
  else single = hmfe::make_mesh(cfg, n);
  const hmfe::TriMesh& mesh = h ? h->finest() : *single;

  const hmfe::ManufacturedSolution exact(mat);
  const hmfe::HybridSystem sys(mesh, cfg.k, mat);
  hmfe::SchurOptions so;
  so.kappa0 = cfg.kappa0;
  const hmfe::SchurOperator s = hmfe::assemble_schur(sys, so);
  const Eigen::VectorXd b = sys.assemble_rhs(exact.load_function());
  if (!cfg.export_matrix.empty()) {
    auto out = open_output(cfg.export_matrix);
    hmfe::write_triplets(out, s.matrix());
  }
  if (!cfg.export_rhs.empty()) {
    auto out = open_output(cfg.export_rhs);
    hmfe::write_vector(out, b);
  }
  const hmfe::MultiplierSolve sol = hmfe::solve_multiplier(s, b, cfg, nullptr, h ? &*h : nullptr);
  const auto fields = sys.recover_fields(sol.lambda, exact.load_function());
  const auto err = hmfe::evaluate_errors(sys, fields, exact, cfg.quad_boost);

  std::printf("mesh: %d triangles, %d multiplier DOFs, kernel dimension %d\n", mesh.num_triangles(), s.size(),
              static_cast<int>(s.kernel_basis().cols()));
  std::printf("solver: %s, %d iterations, relative residual %.3e, %s\n", sol.solver.c_str(), sol.report.iterations,
              sol.report.final_residual(), sol.report.converged ? "converged" : "NOT converged");
  std::printf("errors: u %.4e  sigma %.4e  div sigma %.4e\n", err.displacement, err.stress, err.divergence);
  if (!cfg.report.empty()) {
    auto out = open_output(cfg.report);
    hmfe::write_report_csv(out, sol.report);
  }
  if (!cfg.history.empty()) {
    auto out = open_output(cfg.history);
    hmfe::write_history_csv(out, sol.report);
  }
  return sol.report.converged ? 0 : kNotConverged;
}

int run_mesh_info(const std::string& grid, int n, const std::string& mesh_file, int k, double kappa0,
                  const std::string& write_path) {
  hmfe::TriMesh mesh;
  if (!mesh_file.empty()) mesh = hmfe::read_mesh_file(mesh_file);
  else if (grid == "uniform") mesh = hmfe::uniform_mesh(n);
  else if (grid == "crisscross") mesh = hmfe::crisscross_mesh(n);
  else if (grid == "hct") mesh = hmfe::hct_of(hmfe::uniform_mesh(n));
  else throw hmfe::ConfigError("grid must be uniform, crisscross or hct");
  if (const std::string err = hmfe::validate(mesh); !err.empty()) throw hmfe::ConfigError("invalid mesh: " + err);
  hmfe::mesh_info(std::cout, mesh, k, kappa0);
  if (!write_path.empty()) {
    auto out = open_output(write_path);
    hmfe::write_mesh(out, mesh);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybridized mixed finite elements for linear elasticity"};
  app.require_subcommand(1);

  std::string config, output;
  auto* converge = app.add_subcommand("converge", "error table on a sequence of grids");
  converge->add_option("config", config, "study config file")->required();
  converge->add_option("-o,--output", output, "CSV path ('-' for stdout)");

  auto* study = app.add_subcommand("precond-study", "PCG iteration counts over 1/h and Poisson ratio");
  study->add_option("config", config, "study config file")->required();
  study->add_option("-o,--output", output, "CSV path ('-' for stdout)");

  auto* solve = app.add_subcommand("solve", "single solve on the first resolution of a config");
  solve->add_option("config", config, "study config file")->required();

  std::string grid = "uniform", mesh_file, write_path;
  int n = 4, k = 2;
  double kappa0 = 0.1;
  auto* info = app.add_subcommand("mesh-info", "mesh counts, singular vertices and DOF count");
  info->add_option("--grid", grid, "uniform | crisscross | hct");
  info->add_option("--n", n, "resolution 1/h")->check(CLI::PositiveNumber);
  info->add_option("--mesh", mesh_file, "mesh file instead of a generated grid");
  info->add_option("--k", k, "polynomial degree")->check(CLI::Range(0, 3));
  info->add_option("--kappa0", kappa0, "nearly-singular threshold");
  info->add_option("--write", write_path, "write the mesh in text format");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInvalidInput;
  }

  try {
    if (*converge) return run_converge(config, output);
    if (*study) return run_precond_study(config, output);
    if (*solve) return run_solve(config);
    if (*info) return run_mesh_info(grid, n, mesh_file, k, kappa0, write_path);
  } catch (const hmfe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kRuntimeError;
}
