#include "shapeopt/gradient_check.hpp"

#include "shapeopt/adjoint.hpp"
#include "shapeopt/p1.hpp"
#include "shapeopt/shape_gradient.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace shapeopt {

VertexField random_boundary_field(const Mesh& mesh, std::uint64_t seed, int modes) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::vector<double> a(modes + 1), b(modes + 1);
  for (int k = 0; k <= modes; ++k) {
    a[k] = coef(rng);
    b[k] = coef(rng);
  }
  const int nv = mesh.num_vertices();
  const auto on_obsN = mesh.vertices_on(PatchKind::obsN);
  const auto fixed_outer = mesh.fixed_vertices();
  Vec2 centre = Vec2::Zero();
  int count = 0;
  for (int v = 0; v < nv; ++v)
    if (on_obsN[v]) {
      centre += mesh.vertices()[v];
      ++count;
    }
  if (count == 0) throw Error("random_boundary_field: mesh has no obsN faces");
  centre /= count;

  std::vector<char> fixed(nv, 0);
  VertexField values(nv, Vec2::Zero());
  for (int f = mesh.num_interior_faces(); f < mesh.num_faces(); ++f)
    for (int v : mesh.face(f).v) fixed[v] = 1;
  for (int v = 0; v < nv; ++v) {
    if (!on_obsN[v] || fixed_outer[v]) continue;
    const Vec2 r = mesh.vertices()[v] - centre;
    const double th = std::atan2(r.y(), r.x());
    double s = 0.0;
    for (int k = 0; k <= modes; ++k) s += (a[k] * std::cos(k * th) + b[k] * std::sin(k * th)) / ((1.0 + k) * (1.0 + k));
    values[v] = s * r.normalized();
  }
  VertexField V = harmonic_extension(mesh, fixed, values);
  double vmax = 0.0;
  for (const auto& x : V) vmax = std::max(vmax, x.norm());
  if (vmax > 0.0)
    for (auto& x : V) x /= vmax;
  return V;
}

double reduced_objective(const Mesh& mesh, const FluidProps& props, const FlowConfig& cfg,
                         const PrimalState* initial_guess, PrimalState* state_out) {
  PrimalState st = solve_primal(mesh, props, cfg, initial_guess);
  const double J = compute_objective(st, build_extension_eta(mesh), props, mesh, cfg);
  if (state_out) *state_out = std::move(st);
  return J;
}

double GradientCheckReport::max_error() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.rel_error);
  return m;
}

double GradientCheckReport::median_error() const {
  if (rows.empty()) return 0.0;
  std::vector<double> e;
  for (const auto& r : rows) e.push_back(r.rel_error);
  std::sort(e.begin(), e.end());
  const std::size_t n = e.size();
  return n % 2 ? e[n / 2] : 0.5 * (e[n / 2 - 1] + e[n / 2]);
}

GradientCheckReport check_gradient(const Mesh& mesh, const FluidProps& props, const FlowConfig& cfg, int n_fields,
                                   double eps_fd, std::uint64_t seed) {
  if (n_fields < 0) throw ConfigError("check_gradient: n_fields must be non-negative");
  if (!(eps_fd > 0.0)) throw ConfigError("check_gradient: eps_fd must be positive");
  GradientCheckReport report;
  if (n_fields == 0) return report;
  PrimalState primal;
  report.objective = reduced_objective(mesh, props, cfg, nullptr, &primal);
  const ExtensionField eta = build_extension_eta(mesh);
  const AdjointState adjoint = solve_adjoint(primal, eta, props, mesh, cfg);
  const SensitivityForm form =
      assemble_sensitivity(primal, adjoint, mesh, props, cfg, ConstraintVector::Zero(), 0.0, ConstraintVector::Zero());
  for (int i = 0; i < n_fields; ++i) {
    GradientCheckRow row;
    row.seed = seed + static_cast<std::uint64_t>(i);
    const VertexField V = random_boundary_field(mesh, row.seed);
    row.adjoint = evaluate_form(form, V, mesh);
    const double jp = reduced_objective(apply_deformation(mesh, V, eps_fd), props, cfg, &primal);
    const double jm = reduced_objective(apply_deformation(mesh, V, -eps_fd), props, cfg, &primal);
    row.finite_difference = (jp - jm) / (2.0 * eps_fd);
    row.rel_error = std::abs(row.adjoint - row.finite_difference) / std::max(std::abs(row.finite_difference), 1e-300);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace shapeopt
