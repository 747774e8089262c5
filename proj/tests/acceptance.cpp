// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero if any fails.
#include "support.hpp"

#include "shapeopt/gradient_check.hpp"
#include "shapeopt/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace shapeopt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Mesh channel(int nx, int ny, double length, PatchKind left, PatchKind right, PatchKind sides) {
  RectangleParams rp;
  rp.x1 = length;
  rp.nx = nx;
  rp.ny = ny;
  rp.left = left;
  rp.right = right;
  rp.bottom = rp.top = sides;
  return rectangle_mesh(rp);
}

DescentConfig cylinder_descent_config() {
  DescentConfig d;
  d.p_sequence = {2.0, 2.3, 2.6};
  d.tau = 10.0;
  d.tol = 1e-9;
  d.omega = 0.1;
  return d;
}

Outcome gradient_fidelity() {
  const FluidProps props;
  const FlowConfig cfg;
  const auto t0 = std::chrono::steady_clock::now();
  const GradientCheckReport coarse =
      check_gradient(cylinder_channel_mesh(CylinderChannelParams::level(0)), props, cfg, 5, 1e-3, 1);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const GradientCheckReport fine =
      check_gradient(cylinder_channel_mesh(CylinderChannelParams::level(1)), props, cfg, 5, 1e-3, 1);
  Outcome o;
  o.pass = coarse.max_error() <= 0.10 && fine.median_error() < coarse.median_error() && seconds <= 600.0;
  o.detail = fmt("coarse max %.3e median %.3e (%.0f s), refined median %.3e", coarse.max_error(),
                 coarse.median_error(), seconds, fine.median_error());
  return o;
}

OptimizationResult underwater_run() {
  FluidProps props;
  props.rho_air = 0.001;
  props.mu_air = 0.001;
  FlowConfig flow;
  flow.waterline = 0.0;
  flow.delta_c = 0.05;
  OptimizerConfig opt;
  opt.mode = DeformationMode::underwater_only;
  opt.alpha_step = 1.5;
  opt.max_outer_iterations = 20;
  return run_optimization(test::coarse_cylinder().mesh, props, flow, cylinder_descent_config(), opt);
}

Outcome constraint_preservation(const OptimizationResult& r) {
  double worst = 0.0;
  for (const auto& h : r.history) worst = std::max(worst, h.g_relative.cwiseAbs().maxCoeff());
  Outcome o;
  o.pass = !r.history.empty() && r.status != OptimizationStatus::solver_failure &&
           r.status != OptimizationStatus::grid_deterioration && worst <= 1e-3;
  o.detail = fmt("%zu accepted iterates (status %s), max |g_i|/scale_i %.3e", r.history.size(),
                 std::string(to_string(r.status)).c_str(), worst);
  return o;
}

Outcome drag_decrease(const OptimizationResult& r) {
  bool monotone = true;
  double prev = r.initial_J;
  for (const auto& h : r.history) {
    monotone = monotone && h.J <= prev;
    prev = h.J;
  }
  const double J_ratio = r.history.empty() ? 1.0 : r.history.back().J / r.initial_J;
  const double drag_ratio = r.history.empty() ? 1.0 : r.history.back().drag_normalized;
  Outcome o;
  o.pass = monotone && J_ratio <= 0.95 && drag_ratio <= 0.95;
  o.detail = fmt("J %.4f, surface drag %.4f of initial after %zu iterations, J monotone: %s", J_ratio, drag_ratio,
                 r.history.size(), monotone ? "yes" : "no");
  return o;
}

Outcome descent_behaviour() {
  const auto& k = test::coarse_cylinder();
  const SensitivityForm form = assemble_sensitivity(k.primal, k.adjoint, k.mesh, k.props, k.cfg,
                                                    ConstraintVector::Zero(), 10.0, ConstraintVector::Zero());
  const DescentConfig cfg = cylinder_descent_config();
  const DescentResult r = solve_descent(form, k.mesh, cfg);

  bool decomposition = true;
  for (const auto& h : r.residual_history) decomposition = decomposition && h.R == h.res_V + h.res_lambda_bc + h.res_lambda_v;

  // Per stage: first k at which each component is below tol, and the residual at the stage end.
  std::ostringstream order;
  bool stages_reach_tol = r.converged, lambda_first = true;
  for (double p : cfg.p_sequence) {
    int first_V = 0, first_bc = 0, first_v = 0;
    double last_R = 0.0;
    bool seen = false;
    for (const auto& h : r.residual_history) {
      if (h.p != p) continue;
      seen = true;
      if (!first_V && h.res_V <= cfg.tol) first_V = h.k;
      if (!first_bc && h.res_lambda_bc <= cfg.tol) first_bc = h.k;
      if (!first_v && h.res_lambda_v <= cfg.tol) first_v = h.k;
      last_R = h.R;
    }
    stages_reach_tol = stages_reach_tol && seen && last_R <= cfg.tol;
    const int first_lambda = std::max(first_bc, first_v);
    lambda_first = lambda_first && first_V && first_bc && first_v && first_lambda <= first_V;
    order << fmt(" p=%.1f V/lbc/lv %d/%d/%d", p, first_V, first_bc, first_v);
  }
  Outcome o;
  o.pass = stages_reach_tol && decomposition && lambda_first;
  o.detail = fmt("stages reach tol: %s, decomposition: %s, lambda no later than V: %s;%s",
                 stages_reach_tol ? "yes" : "no", decomposition ? "yes" : "no", lambda_first ? "yes" : "no",
                 order.str().c_str());
  return o;
}

Outcome linear_oracle() {
  const auto& k = test::coarse_cylinder();
  SensitivityForm form = assemble_sensitivity(k.primal, k.adjoint, k.mesh, k.props, k.cfg, ConstraintVector::Zero(),
                                              0.0, ConstraintVector::Zero());
  DescentConfig cfg;
  cfg.p_sequence = {2.0};
  cfg.omega = 1.0;
  cfg.update_multipliers = false;
  const DescentResult r = solve_descent(form, k.mesh, cfg);
  const VertexField ref = test::direct_linear_solve(form, k.mesh);
  VertexField diff(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) diff[i] = r.V[i] - ref[i];
  const double err = p1_l2_norm(k.mesh, diff);
  Outcome o;
  o.pass = r.converged && p1_l2_norm(k.mesh, ref) > 0.0 && err <= 1e-10;
  o.detail = fmt("L2 difference %.3e", err);
  return o;
}

Outcome grid_deterioration() {
  OptimizerConfig opt;
  opt.mode = DeformationMode::full_hull;
  opt.alpha_step = 40.0;
  opt.max_backtracks = 0;
  opt.max_outer_iterations = 3;
  const Mesh& mesh0 = test::coarse_cylinder().mesh;
  const OptimizationResult r =
      run_optimization(mesh0, FluidProps{}, FlowConfig{}, cylinder_descent_config(), opt);
  const bool unchanged = r.history.empty() && r.mesh.vertices() == mesh0.vertices();
  Outcome o;
  o.pass = r.status == OptimizationStatus::grid_deterioration && r.final_quality.min_cell_volume <= 0.0 && unchanged;
  o.detail = fmt("status %s, trial min cell volume %.3e, accepted mesh unchanged: %s",
                 std::string(to_string(r.status)).c_str(), r.final_quality.min_cell_volume, unchanged ? "yes" : "no");
  return o;
}

Outcome flow_verification() {
  double poiseuille = 0.0;
  {
    const Mesh m = channel(160, 32, 10.0, PatchKind::outlet, PatchKind::outlet, PatchKind::wall);
    FluidProps props;
    props.body_force = Vec2(0.4, 0.0);
    FlowConfig cfg;
    cfg.v_infinity = Vec2::Zero();
    const PrimalState st = solve_primal(m, props, cfg);
    const double G = props.body_force.x(), mu = props.mu_water;
    for (int c = 0; c < m.num_cells(); ++c) {
      const Vec2 x = m.geometry().cell_centroid[c];
      if (std::abs(x.x() - 5.0) > 0.2) continue;
      const double exact = G / (2.0 * mu) * x.y() * (1.0 - x.y());
      poiseuille = std::max(poiseuille, std::abs(st.v[c].x() - exact) / (G / (8.0 * mu)));
    }
  }
  double uniform = 0.0;
  {
    const Mesh m = channel(16, 8, 4.0, PatchKind::inlet, PatchKind::outlet, PatchKind::inlet);
    FlowConfig cfg;
    cfg.v_infinity = Vec2(1.0, 0.3);
    const PrimalState st = solve_primal(m, FluidProps{}, cfg);
    for (int c = 0; c < m.num_cells(); ++c) uniform = std::max(uniform, (st.v[c] - cfg.v_infinity).norm());
  }
  double force_gap = 0.0;
  {
    const Mesh m = cylinder_channel_mesh(CylinderChannelParams::level(1));
    const FluidProps props;
    const FlowConfig cfg;
    PrimalState st;
    const double J = reduced_objective(m, props, cfg, nullptr, &st);
    const double D = drag(compute_force(st, m, props, cfg));
    force_gap = std::abs(J - D) / std::abs(D);
  }
  Outcome o;
  o.pass = poiseuille <= 0.02 && uniform <= 1e-10 && force_gap <= 0.02;
  o.detail = fmt("Poiseuille %.3e, uniform flow %.3e, refined J vs surface drag %.3e", poiseuille, uniform, force_gap);
  return o;
}

Outcome invariant_suites() {
  std::string list = SHAPEOPT_UNIT_TESTS;
  int failed = 0, total = 0;
  std::string failures;
  std::stringstream ss(list);
  for (std::string exe; std::getline(ss, exe, '|');) {
    ++total;
    const std::string cmd = "\"" + exe + "\" --gtest_brief=1 > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      ++failed;
      failures += " " + exe.substr(exe.find_last_of('/') + 1);
    }
  }
  Outcome o;
  o.pass = failed == 0 && total > 0;
  o.detail = fmt("%d of %d property suites pass%s%s", total - failed, total, failed ? ", failing:" : "",
                 failures.c_str());
  return o;
}

void report(int id, const char* name, const std::function<Outcome()>& run, bool& all) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = run();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("[%s] criterion %d %s: %s [%.0f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), s);
  std::fflush(stdout);
  all = all && o.pass;
}

}  // namespace

int main() {
  bool all = true;
  report(1, "gradient fidelity", gradient_fidelity, all);
  std::optional<OptimizationResult> run;
  auto underwater = [&]() -> const OptimizationResult& {
    if (!run) run = underwater_run();
    return *run;
  };
  report(2, "constraint preservation", [&] { return constraint_preservation(underwater()); }, all);
  report(3, "descent iteration", descent_behaviour, all);
  report(4, "p = 2 oracle", linear_oracle, all);
  report(5, "drag decrease", [&] { return drag_decrease(underwater()); }, all);
  report(6, "grid deterioration", grid_deterioration, all);
  report(7, "flow verification", flow_verification, all);
  report(8, "invariant suites", invariant_suites, all);
  return all ? 0 : 1;
}
