#include "support.hpp"

#include "shapeopt/gradient_check.hpp"
#include "shapeopt/optimizer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

using namespace shapeopt;

namespace {

FlowConfig underwater_flow() {
  FlowConfig cfg;
  cfg.waterline = 0.0;
  cfg.delta_c = 0.05;
  return cfg;
}

FluidProps underwater_props() {
  FluidProps p;
  p.rho_air = 0.001;
  p.mu_air = 0.001;
  return p;
}

DescentConfig descent_config() {
  DescentConfig d;
  d.omega = 0.1;
  return d;
}

OptimizerConfig short_run() {
  OptimizerConfig o;
  o.mode = DeformationMode::underwater_only;
  o.alpha_step = 1.5;
  o.max_outer_iterations = 2;
  return o;
}

std::string history_text(const OptimizationResult& r) {
  const std::string path = testing::TempDir() + "history.csv";
  write_history_csv(r, path);
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct ShortRun {
  OptimizationResult result;
  int snapshots = 0;
};

const ShortRun& underwater_run() {
  static const ShortRun r = [] {
    ShortRun out;
    OptimizerHooks hooks;
    hooks.on_accept = [&](const IterationSnapshot& s) {
      ++out.snapshots;
      EXPECT_EQ(s.record.iteration, out.snapshots);
      EXPECT_EQ(static_cast<int>(s.V.size()), s.mesh.num_vertices());
    };
    out.result = run_optimization(test::coarse_cylinder().mesh, underwater_props(), underwater_flow(),
                                  descent_config(), short_run(), hooks);
    return out;
  }();
  return r;
}

}  // namespace

TEST(Optimizer, StatusTokens) {
  EXPECT_EQ(to_string(OptimizationStatus::converged), "converged");
  EXPECT_EQ(to_string(OptimizationStatus::max_iter), "max_iter");
  EXPECT_EQ(to_string(OptimizationStatus::grid_deterioration), "grid_deterioration");
  EXPECT_EQ(to_string(OptimizationStatus::solver_failure), "solver_failure");
  EXPECT_EQ(parse_deformation_mode("underwater_only"), DeformationMode::underwater_only);
  EXPECT_THROW(parse_deformation_mode("keel"), ConfigError);
}

TEST(Optimizer, UnderwaterRetagging) {
  const Mesh& m = test::coarse_cylinder().mesh;
  const PhaseField ph = underwater_flow().phase();
  EXPECT_EQ(retag_for_mode(m, ph, DeformationMode::full_hull).patch(PatchKind::obsN), m.patch(PatchKind::obsN));
  const Mesh r = retag_for_mode(m, ph, DeformationMode::underwater_only);
  const auto& geo = r.geometry();
  ASSERT_FALSE(r.patch(PatchKind::obsD).empty());
  ASSERT_FALSE(r.patch(PatchKind::obsN).empty());
  for (int f : r.patch(PatchKind::obsD)) EXPECT_GT(geo.face_centroid[f].y(), 0.0);
  for (int f : r.patch(PatchKind::obsN)) EXPECT_LT(geo.face_centroid[f].y(), 0.0);
  EXPECT_EQ(r.obstacle_faces(), m.obstacle_faces());
}

TEST(Optimizer, RestorationReachesFeasibility) {
  const Mesh m = retag_for_mode(test::coarse_cylinder().mesh, underwater_flow().phase(), DeformationMode::underwater_only);
  const PhaseField ph = underwater_flow().phase();
  const ConstraintVector ref = capture_reference(m, ph);
  const ConstraintVector scales = constraint_scales(m, ph);
  const Mesh moved = apply_deformation(m, random_boundary_field(m, 7), 0.03);
  const ConstraintVector g0 = evaluate_constraints(moved, ph, ref);
  ASSERT_GT(g0.cwiseQuotient(scales).cwiseAbs().maxCoeff(), 1e-4);

  const RestorationResult r = restore_constraints(moved, ph, ref, scales, 1e-10);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.g.cwiseQuotient(scales).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(r.iterations, 4);
  const auto fixed = m.fixed_vertices();
  for (int v = 0; v < m.num_vertices(); ++v)
    if (fixed[v]) EXPECT_EQ(r.mesh.vertices()[v], moved.vertices()[v]);
}

TEST(Optimizer, StepSizeBacktracks) {
  RectangleParams rp;
  rp.nx = rp.ny = 4;
  rp.left = PatchKind::obsN;
  const Mesh m = rectangle_mesh(rp);
  VertexField V(m.num_vertices(), Vec2::Zero());
  const auto fixed = m.fixed_vertices();
  for (int v = 0; v < m.num_vertices(); ++v)
    if (!fixed[v]) V[v] = Vec2(0.01, 0.0);
  OptimizerConfig cfg;
  cfg.alpha_step = 0.2;
  int calls = 0;
  const StepChoice s = choose_step_size(V, m, 1.0, [&](const Mesh&) -> std::optional<double> {
    ++calls;
    if (calls == 1) return std::nullopt;
    return calls == 2 ? 1.5 : 0.5;
  }, cfg);
  ASSERT_TRUE(s.accepted);
  EXPECT_EQ(s.backtracks, 2);
  EXPECT_EQ(calls, 3);
  // Shortest edge is 0.25, |V| = 0.01: first trial eps = 0.2 * 0.25 / 0.01.
  EXPECT_NEAR(s.eps, 0.25 * 0.2 * 0.25 / 0.01, 1e-12);
  ASSERT_TRUE(s.mesh.has_value());
  EXPECT_TRUE(quality_check(*s.mesh).valid);
}

TEST(Optimizer, StepSizeReportsDeterioration) {
  RectangleParams rp;
  rp.nx = rp.ny = 4;
  rp.left = PatchKind::obsN;
  const Mesh m = rectangle_mesh(rp);
  VertexField V(m.num_vertices(), Vec2::Zero());
  const auto fixed = m.fixed_vertices();
  for (int v = 0; v < m.num_vertices(); ++v)
    if (!fixed[v] && m.vertices()[v].x() == 0.0) V[v] = Vec2(1.0, 0.0);
  OptimizerConfig cfg;
  cfg.alpha_step = 5.0;
  cfg.max_backtracks = 1;
  const StepChoice s = choose_step_size(V, m, 1.0, [](const Mesh&) { return std::optional<double>(0.0); }, cfg);
  EXPECT_FALSE(s.accepted);
  EXPECT_TRUE(s.all_invalid);
  EXPECT_LE(s.last_quality.min_cell_volume, 0.0);
  EXPECT_THROW(choose_step_size(VertexField(m.num_vertices(), Vec2::Zero()), m, 1.0,
                                [](const Mesh&) { return std::optional<double>(0.0); }, cfg),
               Error);
}

TEST(Optimizer, ShortUnderwaterRun) {
  const auto& run = underwater_run();
  const OptimizationResult& r = run.result;
  ASSERT_EQ(r.status, OptimizationStatus::max_iter) << r.message;
  ASSERT_EQ(r.history.size(), 2u);
  EXPECT_EQ(run.snapshots, 2);
  double prev = r.initial_J;
  for (const auto& h : r.history) {
    EXPECT_LE(h.J, prev);
    prev = h.J;
    EXPECT_GT(h.eps, 0.0);
    EXPECT_GT(h.min_cell_volume, 0.0);
    EXPECT_LE(h.g_relative.cwiseAbs().maxCoeff(), 1e-3);
  }
  EXPECT_LT(r.history.back().drag_normalized, 1.0);
}

TEST(Optimizer, AirWettedHullDoesNotMove) {
  const Mesh& m0 = test::coarse_cylinder().mesh;
  const Mesh tagged = retag_for_mode(m0, underwater_flow().phase(), DeformationMode::underwater_only);
  const auto air = tagged.vertices_on(PatchKind::obsD);
  const auto& final_mesh = underwater_run().result.mesh;
  int moved_wet = 0;
  for (int v = 0; v < m0.num_vertices(); ++v) {
    if (air[v]) EXPECT_EQ(final_mesh.vertices()[v], m0.vertices()[v]) << "vertex " << v;
    else if (tagged.vertices_on(PatchKind::obsN)[v] && final_mesh.vertices()[v] != m0.vertices()[v]) ++moved_wet;
  }
  EXPECT_GT(moved_wet, 0);
}

TEST(Optimizer, RunIsDeterministic) {
  OptimizerConfig o = short_run();
  o.max_outer_iterations = 1;
  const Mesh& m = test::coarse_cylinder().mesh;
  const auto a = run_optimization(m, underwater_props(), underwater_flow(), descent_config(), o);
  const auto b = run_optimization(m, underwater_props(), underwater_flow(), descent_config(), o);
  EXPECT_EQ(history_text(a), history_text(b));
  EXPECT_EQ(a.mesh.vertices(), b.mesh.vertices());
}

TEST(Optimizer, HistoryCsvColumns) {
  const std::string text = history_text(underwater_run().result);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "iteration,J,drag,drag_normalized,g_x,g_y,g_v,lambda_x,lambda_y,lambda_v,eps,min_cell_volume,"
            "picard_iterations,backtracks");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

TEST(Optimizer, RejectsBadConfiguration) {
  OptimizerConfig o;
  o.backtrack_factor = 1.0;
  EXPECT_THROW(o.validate(), ConfigError);
  o = OptimizerConfig{};
  o.alpha_step = 0.0;
  EXPECT_THROW(o.validate(), ConfigError);
}
