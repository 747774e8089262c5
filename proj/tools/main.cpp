#include "case_config.hpp"

#include "shapeopt/adjoint.hpp"
#include "shapeopt/constraints.hpp"
#include "shapeopt/gradient_check.hpp"
#include "shapeopt/io.hpp"
#include "shapeopt/mesh_generators.hpp"
#include "shapeopt/optimizer.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>

namespace fs = std::filesystem;
using namespace shapeopt;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string log_level = "info";
};

cli::CaseConfig load(const Options& opt) {
  if (opt.config.empty()) throw ConfigError("--config is required");
  cli::CaseConfig cfg = cli::load_case_config(opt.config);
  if (!opt.out.empty()) cfg.output_dir = opt.out;
  if (opt.seed_set) cfg.seed = opt.seed;
  fs::create_directories(cfg.output_dir);
  return cfg;
}

Mesh prepared_mesh(const cli::CaseConfig& cfg) {
  return retag_for_mode(cli::load_case_mesh(cfg), cfg.flow.phase(), cfg.optimizer.mode);
}

std::string path_in(const cli::CaseConfig& cfg, const std::string& name) { return (cfg.output_dir / name).string(); }

void write_residuals(const std::vector<ResidualRecord>& h, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "iteration,momentum,continuity\n" << std::setprecision(17);
  for (const auto& r : h) out << r.iteration << ',' << r.momentum << ',' << r.continuity << '\n';
}

VtkWriter& add_flow(VtkWriter& w, const PrimalState& st, const Mesh& mesh, const FluidProps& props) {
  return w.cell_vector("v", st.v).cell_scalar("p", st.p).cell_scalar("p_static", static_pressure(st, mesh, props))
      .cell_scalar("c", st.c);
}

int cmd_run(const Options& opt) {
  const cli::CaseConfig cfg = load(opt);
  const Mesh mesh = cli::load_case_mesh(cfg);
  fs::create_directories(cfg.output_dir / "snapshots");

  OptimizerHooks hooks;
  hooks.log = [](const std::string& m) { spdlog::info("{}", m); };
  hooks.trace = [](const std::string& m) { spdlog::debug("{}", m); };
  hooks.on_accept = [&](const IterationSnapshot& s) {
    char name[32];
    std::snprintf(name, sizeof name, "iter_%04d.vtk", s.record.iteration);
    VtkWriter w(s.mesh);
    add_flow(w, s.primal, s.mesh, cfg.fluid)
        .point_scalar("G", faces_to_vertices(s.mesh, s.form.faces, s.form.drag_density))
        .point_vector("V", s.V)
        .write((cfg.output_dir / "snapshots" / name).string(), "iteration " + std::to_string(s.record.iteration));
  };
  const OptimizationResult res = run_optimization(mesh, cfg.fluid, cfg.flow, cfg.descent, cfg.optimizer, hooks);

  write_history_csv(res, path_in(cfg, "history.csv"));
  save_mesh(res.mesh, path_in(cfg, "final.mesh"));
  VtkWriter(res.mesh).cell_scalar("c", prescribe_concentration(res.mesh, cfg.flow.phase()))
      .write(path_in(cfg, "final.vtk"), "final mesh");
  {
    std::ofstream status(path_in(cfg, "status"));
    status << to_string(res.status) << '\n';
  }
  spdlog::info("status {} after {} accepted iterations{}{}", to_string(res.status), res.history.size(),
               res.message.empty() ? "" : ": ", res.message);
  if (!res.history.empty())
    spdlog::info("normalized drag {:.6f}, min cell volume {:.3e}", res.history.back().drag_normalized,
                 res.final_quality.min_cell_volume);
  return (res.status == OptimizationStatus::converged || res.status == OptimizationStatus::max_iter) ? 0 : 1;
}

int cmd_primal(const Options& opt) {
  const cli::CaseConfig cfg = load(opt);
  const Mesh mesh = prepared_mesh(cfg);
  const PrimalState st = solve_primal(mesh, cfg.fluid, cfg.flow);
  const ExtensionField eta = build_extension_eta(mesh);
  const Vec2 F = compute_force(st, mesh, cfg.fluid, cfg.flow);
  const double J = compute_objective(st, eta, cfg.fluid, mesh, cfg.flow);
  VtkWriter w(mesh);
  add_flow(w, st, mesh, cfg.fluid).cell_scalar("mass_imbalance", mass_imbalance(st, mesh, cfg.fluid, cfg.flow));
  w.write(path_in(cfg, "primal.vtk"), "primal");
  write_residuals(st.residual_history, path_in(cfg, "primal_residuals.csv"));
  spdlog::info("{} Newton iterations, drag {:.10g}, lift {:.10g}, J {:.10g}, max mass imbalance {:.3e}",
               st.residual_history.size() - 1, drag(F), F.y(), J, st.max_mass_imbalance);
  return 0;
}

int cmd_adjoint(const Options& opt) {
  const cli::CaseConfig cfg = load(opt);
  const Mesh mesh = prepared_mesh(cfg);
  const PrimalState st = solve_primal(mesh, cfg.fluid, cfg.flow);
  const ExtensionField eta = build_extension_eta(mesh);
  const AdjointState adj = solve_adjoint(st, eta, cfg.fluid, mesh, cfg.flow);
  const SensitivityForm form = assemble_sensitivity(st, adj, mesh, cfg.fluid, cfg.flow, ConstraintVector::Zero(),
                                                    cfg.descent.tau, ConstraintVector::Zero());
  VtkWriter(mesh)
      .cell_vector("w", adj.w)
      .cell_scalar("q", adj.q)
      .point_scalar("G", faces_to_vertices(mesh, form.faces, form.drag_density))
      .write(path_in(cfg, "adjoint.vtk"), "adjoint");
  write_face_data(mesh, form.faces, form.drag_density, path_in(cfg, "sensitivity.csv"));
  write_residuals(adj.residual_history, path_in(cfg, "adjoint_residuals.csv"));
  spdlog::info("adjoint solved; sensitivity on {} deformable faces written", form.faces.size());
  return 0;
}

int cmd_descent_only(const Options& opt, const std::string& sensitivity) {
  const cli::CaseConfig cfg = load(opt);
  const Mesh mesh = prepared_mesh(cfg);
  SensitivityForm form = empty_form(mesh, cfg.flow.phase());
  form.tau = cfg.descent.tau;
  form.drag_density = match_face_data(mesh, form.faces, read_face_data(sensitivity));
  const DescentResult res = solve_descent(form, mesh, cfg.descent);
  write_descent_csv(res, path_in(cfg, "descent_residuals.csv"));
  VtkWriter(mesh)
      .point_scalar("G", faces_to_vertices(mesh, form.faces, form.drag_density))
      .point_vector("V", res.V)
      .write(path_in(cfg, "descent.vtk"), "descent direction");
  if (res.capped_iterations > 0)
    spdlog::info("relaxation capped on {} iterations, smallest omega {:.3g}", res.capped_iterations, res.omega);
  if (!res.converged) {
    spdlog::error("{}", res.diagnostic);
    return 1;
  }
  spdlog::info("descent converged in {} Picard iterations, lambda = ({:.6g}, {:.6g}, {:.6g})", res.iterations(),
               res.lambda[0], res.lambda[1], res.lambda[2]);
  return 0;
}

int cmd_check_gradient(const Options& opt, int n_fields, double eps_fd, double bound) {
  cli::CaseConfig cfg = load(opt);
  if (n_fields >= 0) cfg.gradient_check.n_fields = n_fields;
  if (eps_fd >= 0.0) cfg.gradient_check.eps_fd = eps_fd;
  if (bound >= 0.0) cfg.gradient_check.bound = bound;
  cfg.gradient_check.validate();
  const auto& gc = cfg.gradient_check;
  if (gc.n_fields == 0) {
    spdlog::info("no perturbation fields requested");
    return 0;
  }
  const Mesh mesh = prepared_mesh(cfg);
  const GradientCheckReport rep = check_gradient(mesh, cfg.fluid, cfg.flow, gc.n_fields, gc.eps_fd, cfg.seed);
  std::ofstream out(path_in(cfg, "gradient_check.csv"));
  out << "seed,adjoint,finite_difference,rel_error\n" << std::setprecision(17);
  std::printf("%8s %16s %16s %10s\n", "seed", "adjoint", "central FD", "rel err");
  for (const auto& r : rep.rows) {
    out << r.seed << ',' << r.adjoint << ',' << r.finite_difference << ',' << r.rel_error << '\n';
    std::printf("%8llu %16.8e %16.8e %10.3e\n", static_cast<unsigned long long>(r.seed), r.adjoint,
                r.finite_difference, r.rel_error);
  }
  std::printf("max %.3e median %.3e bound %.3e\n", rep.max_error(), rep.median_error(), gc.bound);
  return rep.max_error() <= gc.bound ? 0 : 1;
}

int cmd_export(const Options& opt, const std::string& mesh_path, const std::string& target) {
  Mesh mesh;
  PhaseField phase;
  std::string out = target;
  if (!mesh_path.empty()) {
    mesh = load_mesh(mesh_path);
    if (!opt.config.empty()) phase = load(opt).flow.phase();
    if (out.empty()) out = fs::path(mesh_path).replace_extension(".vtk").string();
  } else {
    const cli::CaseConfig cfg = load(opt);
    mesh = prepared_mesh(cfg);
    phase = cfg.flow.phase();
    if (out.empty()) out = path_in(cfg, "mesh.vtk");
  }
  ScalarField kind(mesh.num_vertices(), -1.0);
  for (int f = mesh.num_interior_faces(); f < mesh.num_faces(); ++f)
    for (int v : mesh.face(f).v) kind[v] = std::max(kind[v], static_cast<double>(mesh.face(f).kind));
  VtkWriter(mesh)
      .cell_scalar("c", prescribe_concentration(mesh, phase))
      .cell_scalar("cell_volume", mesh.geometry().cell_volume)
      .point_scalar("patch", kind)
      .write(out, "mesh");
  const QualityReport q = quality_check(mesh);
  spdlog::info("wrote {} ({} cells, min cell volume {:.3e}, {})", out, mesh.num_cells(), q.min_cell_volume,
               q.valid ? "valid" : "invalid");
  return 0;
}

int cmd_mesh(int level, const std::string& file) {
  if (level < 0 || level > 4) throw ConfigError("--level must lie in [0, 4]");
  const Mesh mesh = cylinder_channel_mesh(CylinderChannelParams::level(level));
  save_mesh(mesh, file);
  spdlog::info("wrote {} ({} vertices, {} cells)", file, mesh.num_vertices(), mesh.num_cells());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adjoint shape optimisation of obstacles in incompressible flow"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  app.add_option("--config", opt.config, "case configuration (INI)");
  app.add_option("--out", opt.out, "output directory (overrides [case] output)");
  app.add_option_function<std::uint64_t>(
      "--seed",
      [&](std::uint64_t s) {
        opt.seed = s;
        opt.seed_set = true;
      },
      "seed for perturbation fields");
  app.add_option("--log-level", opt.log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  auto* run = app.add_subcommand("run", "shape optimisation loop");
  auto* primal = app.add_subcommand("primal", "solve the flow and report forces");
  auto* adjoint = app.add_subcommand("adjoint", "solve primal and adjoint, export the sensitivity");
  auto* descent = app.add_subcommand("descent-only", "descent direction from a sensitivity file");
  std::string sensitivity;
  descent->add_option("--sensitivity", sensitivity, "face data file v0,v1,value")->required();
  auto* check = app.add_subcommand("check-gradient", "adjoint vs central finite differences");
  int n_fields = -1;
  double eps_fd = -1.0, bound = -1.0;
  check->add_option("--n-fields", n_fields, "number of seeded perturbation fields");
  check->add_option("--eps-fd", eps_fd, "finite-difference step");
  check->add_option("--bound", bound, "largest accepted relative error");
  auto* exp = app.add_subcommand("export", "write a mesh as legacy VTK");
  std::string mesh_path, target;
  exp->add_option("--mesh", mesh_path, "mesh file (default: the config's mesh)");
  exp->add_option("--file", target, "output VTK path");
  auto* gen = app.add_subcommand("mesh", "generate the cylinder-in-channel mesh");
  int level = 0;
  std::string mesh_file = "cylinder.mesh";
  gen->add_option("--level", level, "refinement level (0 = coarse)");
  gen->add_option("--file", mesh_file, "output mesh file");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(opt.log_level));
  spdlog::set_pattern("[%l] %v");

  try {
    if (*run) return cmd_run(opt);
    if (*primal) return cmd_primal(opt);
    if (*adjoint) return cmd_adjoint(opt);
    if (*descent) return cmd_descent_only(opt, sensitivity);
    if (*check) return cmd_check_gradient(opt, n_fields, eps_fd, bound);
    if (*exp) return cmd_export(opt, mesh_path, target);
    if (*gen) return cmd_mesh(level, mesh_file);
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
