#include "support.hpp"

#include "shapeopt/constraints.hpp"
#include "shapeopt/shape_gradient.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace shapeopt;

namespace {

VertexField random_field(int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VertexField V(n);
  for (auto& v : V) v = Vec2(u(gen), u(gen));
  return V;
}

SensitivityForm cylinder_form(const ConstraintVector& lambda, double tau, const ConstraintVector& g) {
  const auto& k = test::coarse_cylinder();
  return assemble_sensitivity(k.primal, k.adjoint, k.mesh, k.props, k.cfg, lambda, tau, g);
}

}  // namespace

TEST(ShapeGradient, PureDragDensityWithoutMultipliers) {
  const auto& k = test::coarse_cylinder();
  const SensitivityForm form = cylinder_form(ConstraintVector::Zero(), 0.0, ConstraintVector(0.1, 0.2, 0.3));
  ASSERT_EQ(form.faces.size(), form.drag_density.size());
  for (std::size_t i = 0; i < form.faces.size(); ++i) EXPECT_EQ(form.density(k.mesh, i), form.drag_density[i]);
}

TEST(ShapeGradient, OrthogonalNormalDerivativesGiveZeroDensity) {
  const auto& k = test::coarse_cylinder();
  // w = R v with R a quarter turn: dw/dn = R dv/dn is orthogonal to dv/dn on every face.
  AdjointState a = k.adjoint;
  auto rot = [](const Vec2& v) { return Vec2(-v.y(), v.x()); };
  for (std::size_t c = 0; c < a.w.size(); ++c) a.w[c] = rot(k.primal.v[c]);
  for (std::size_t b = 0; b < a.boundary_w.size(); ++b) a.boundary_w[b] = rot(k.primal.boundary_velocity[b]);
  double scale = 0.0;
  for (double d : drag_density(k.primal, k.adjoint, k.mesh, k.props, k.cfg)) scale = std::max(scale, std::abs(d));
  for (double d : drag_density(k.primal, a, k.mesh, k.props, k.cfg)) EXPECT_LT(std::abs(d), 1e-14 * scale);
}

TEST(ShapeGradient, FormOfZeroAndTangentialFields) {
  const auto& k = test::coarse_cylinder();
  const SensitivityForm form = cylinder_form(ConstraintVector::Zero(), 0.0, ConstraintVector::Zero());
  EXPECT_EQ(evaluate_form(form, VertexField(k.mesh.num_vertices(), Vec2::Zero()), k.mesh), 0.0);
  // Tangent of the circle through each obstacle vertex; on each chord V.n is odd about the midpoint.
  VertexField T(k.mesh.num_vertices(), Vec2::Zero());
  for (int f : k.mesh.obstacle_faces())
    for (int v : k.mesh.face(f).v) {
      const Vec2 x = k.mesh.vertices()[v];
      T[v] = Vec2(-x.y(), x.x());
    }
  double scale = 0.0;
  for (double d : form.drag_density) scale += std::abs(d);
  EXPECT_LT(std::abs(evaluate_form(form, T, k.mesh)), 1e-14 * scale);
}

TEST(ShapeGradient, SteepestFieldGivesNegativeValue) {
  const auto& k = test::coarse_cylinder();
  const SensitivityForm form = cylinder_form(ConstraintVector::Zero(), 0.0, ConstraintVector::Zero());
  VertexField V(k.mesh.num_vertices(), Vec2::Zero());
  const auto& geo = k.mesh.geometry();
  for (std::size_t i = 0; i < form.faces.size(); ++i)
    for (int v : k.mesh.face(form.faces[i]).v) V[v] -= 0.5 * form.drag_density[i] * geo.face_normal[form.faces[i]];
  EXPECT_LT(evaluate_form(form, V, k.mesh), 0.0);
}

TEST(ShapeGradient, FormIsLinear) {
  const auto& k = test::coarse_cylinder();
  const SensitivityForm form = cylinder_form(ConstraintVector(0.3, -0.2, 0.7), 10.0, ConstraintVector(1e-3, 2e-3, -1e-3));
  const VertexField V1 = random_field(k.mesh.num_vertices(), 1);
  const VertexField V2 = random_field(k.mesh.num_vertices(), 2);
  const double a = 1.7, b = -0.4;
  VertexField W(V1.size());
  for (std::size_t i = 0; i < W.size(); ++i) W[i] = a * V1[i] + b * V2[i];
  const double lhs = evaluate_form(form, W, k.mesh);
  const double rhs = a * evaluate_form(form, V1, k.mesh) + b * evaluate_form(form, V2, k.mesh);
  EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(std::abs(lhs), 1e-300));
}

TEST(ShapeGradient, ConstraintTermsAreExact) {
  const auto& k = test::coarse_cylinder();
  FlowConfig cfg = k.cfg;
  cfg.waterline = 0.1;
  cfg.delta_c = 0.05;
  SensitivityForm form = empty_form(k.mesh, cfg.phase());
  form.lambda = ConstraintVector(0.3, -0.2, 0.7);
  form.tau = 10.0;
  form.g = ConstraintVector(1e-3, 2e-3, -1e-3);
  const VertexField V = random_field(k.mesh.num_vertices(), 3);
  const double expected = (form.lambda - form.tau * form.g).dot(constraint_pairing(k.mesh, form.phase, V));
  EXPECT_NEAR(evaluate_form(form, V, k.mesh), expected, 1e-12 * std::abs(expected));
}

TEST(ShapeGradient, LoadsReproduceForm) {
  const auto& k = test::coarse_cylinder();
  const SensitivityForm form = cylinder_form(ConstraintVector(0.3, -0.2, 0.7), 10.0, ConstraintVector(1e-3, 2e-3, -1e-3));
  const VertexField V = random_field(k.mesh.num_vertices(), 4);
  const VertexField L = form_load(form, k.mesh);
  double s = 0.0;
  for (std::size_t i = 0; i < V.size(); ++i) s += L[i].dot(V[i]);
  const double e = evaluate_form(form, V, k.mesh);
  EXPECT_NEAR(s, e, 1e-12 * std::abs(e));
}
