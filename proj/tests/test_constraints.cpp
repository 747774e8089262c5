#include "support.hpp"

#include "shapeopt/constraints.hpp"
#include "shapeopt/p1.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace shapeopt;

namespace {

Mesh unit_square_grid(int n) {
  RectangleParams rp;
  rp.nx = rp.ny = n;
  return rectangle_mesh(rp);
}

AnnulusParams ring(int n_theta) {
  AnnulusParams p;
  p.r_inner = 0.5;
  p.r_outer = 2.0;
  p.n_theta = n_theta;
  p.n_radial = n_theta / 8;
  return p;
}

// Smooth boundary field on the obstacle, extended harmonically; zero on the outer wall.
VertexField smooth_field(const Mesh& m, double r_inner) {
  std::vector<char> fixed(m.num_vertices(), 0);
  VertexField bc(m.num_vertices(), Vec2::Zero());
  for (int f = m.num_interior_faces(); f < m.num_faces(); ++f)
    for (int v : m.face(f).v) {
      fixed[v] = 1;
      const Vec2 x = m.vertices()[v];
      if (std::abs(x.norm() - r_inner) < 1e-9) {
        const double th = std::atan2(x.y(), x.x());
        bc[v] = (0.6 + 0.3 * std::cos(2.0 * th) + 0.2 * std::sin(th)) * x / x.norm() +
                Vec2(0.1 * std::sin(3.0 * th), 0.05);
      }
    }
  return harmonic_extension(m, fixed, bc);
}

// Moments (int x, int y, int 1) of a counter-clockwise polygon.
ConstraintVector polygon_moments(const std::vector<Vec2>& p) {
  ConstraintVector m = ConstraintVector::Zero();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2& a = p[i];
    const Vec2& b = p[(i + 1) % p.size()];
    const double cr = a.x() * b.y() - b.x() * a.y();
    m[0] += (a.x() + b.x()) * cr / 6.0;
    m[1] += (a.y() + b.y()) * cr / 6.0;
    m[2] += cr / 2.0;
  }
  return m;
}

}  // namespace

TEST(Constraints, ReferenceOfUnitSquare) {
  const Mesh m = unit_square_mesh();
  const ConstraintVector r = capture_reference(m, PhaseField::single_phase(0.0));
  EXPECT_NEAR(r[0], 0.5, 1e-15);
  EXPECT_NEAR(r[1], 0.5, 1e-15);
  EXPECT_NEAR(r[2], 1.0, 1e-15);
  EXPECT_EQ(capture_reference(m, PhaseField::single_phase(1.0)), ConstraintVector::Zero());
}

TEST(Constraints, ReferenceOfHalfWetSquare) {
  for (int n : {1, 3, 8}) {
    const ConstraintVector r = capture_reference(unit_square_grid(n), PhaseField::stratified(0.5, 0.0));
    EXPECT_NEAR(r[0], 0.25, 1e-14) << n;
    EXPECT_NEAR(r[1], 0.125, 1e-14) << n;
    EXPECT_NEAR(r[2], 0.5, 1e-14) << n;
  }
}

TEST(Constraints, UnchangedMeshIsExactlyFeasible) {
  const Mesh m = cylinder_channel_mesh(CylinderChannelParams::level(0));
  const PhaseField ph = PhaseField::stratified(0.1, 0.05);
  EXPECT_EQ(evaluate_constraints(m, ph, capture_reference(m, ph)), ConstraintVector::Zero());
}

TEST(Constraints, InflatedObstacleRemovesFlowArea) {
  const AnnulusParams p = ring(64);
  const Mesh m = annulus_mesh(p);
  const PhaseField ph = PhaseField::single_phase(0.0);
  const ConstraintVector ref = capture_reference(m, ph);
  // Move the obstacle vertices radially outward by 0.05.
  VertexField V(m.num_vertices(), Vec2::Zero());
  for (int i = 0; i < p.n_theta; ++i) V[i] = m.vertices()[i].normalized();
  const Mesh d = apply_deformation(m, V, 0.05);
  const double dA = test::polygon_area(test::annulus_inner_ring(d, p.n_theta)) -
                    test::polygon_area(test::annulus_inner_ring(m, p.n_theta));
  const ConstraintVector g = evaluate_constraints(d, ph, ref);
  EXPECT_NEAR(g[2], -dA, 1e-12);
  EXPECT_LT(std::abs(g[0]), 1e-12);
  EXPECT_LT(std::abs(g[1]), 1e-12);
}

TEST(Constraints, TranslatedObstacleMatchesPolygonQuadrature) {
  const AnnulusParams p = ring(64);
  const Mesh m = annulus_mesh(p);
  const PhaseField ph = PhaseField::single_phase(0.0);
  const ConstraintVector ref = capture_reference(m, ph);
  VertexField V(m.num_vertices(), Vec2::Zero());
  for (int i = 0; i < p.n_theta; ++i) V[i] = Vec2(1.0, 0.5);
  const Mesh d = apply_deformation(m, V, 0.1);
  const ConstraintVector g = evaluate_constraints(d, ph, ref);
  // The flow domain loses the moments of the moved hole and regains those of the old one.
  const ConstraintVector expected = polygon_moments(test::annulus_inner_ring(m, p.n_theta)) -
                                    polygon_moments(test::annulus_inner_ring(d, p.n_theta));
  EXPECT_NEAR(g[2], 0.0, 1e-13);
  EXPECT_NEAR(g[0], expected[0], 1e-13);
  EXPECT_NEAR(g[1], expected[1], 1e-13);
  EXPECT_LT(g[0], 0.0);
}

TEST(Constraints, PairingOfSimpleFields) {
  const AnnulusParams p = ring(256);
  const Mesh m = annulus_mesh(p);
  const PhaseField ph = PhaseField::single_phase(0.0);
  EXPECT_EQ(constraint_pairing(m, ph, VertexField(m.num_vertices(), Vec2::Zero())), ConstraintVector::Zero());
  EXPECT_LT(std::abs(constraint_pairing(m, ph, VertexField(m.num_vertices(), Vec2(1.0, 0.0)))[2]), 1e-13);
  // V = n of the flow domain, i.e. pointing into the obstacle.
  VertexField V(m.num_vertices(), Vec2::Zero());
  for (int i = 0; i < p.n_theta; ++i) V[i] = -m.vertices()[i].normalized();
  const double perimeter = 2.0 * std::numbers::pi * p.r_inner;
  EXPECT_NEAR(constraint_pairing(m, ph, V)[2] / perimeter, 1.0, 1e-3);
}

TEST(Constraints, LoadsReproducePairing) {
  const Mesh m = cylinder_channel_mesh(CylinderChannelParams::level(0));
  const PhaseField ph = PhaseField::stratified(0.1, 0.05);
  VertexField W(m.num_vertices());
  for (int i = 0; i < m.num_vertices(); ++i) W[i] = Vec2(std::sin(0.7 * i), std::cos(1.3 * i));
  const ConstraintVector pairing = constraint_pairing(m, ph, W);
  const auto B = constraint_loads(m, ph);
  for (int k = 0; k < kNumConstraints; ++k) {
    double s = 0.0;
    for (int i = 0; i < m.num_vertices(); ++i) s += B[k][i].dot(W[i]);
    EXPECT_NEAR(s, pairing[k], 1e-13 * (1.0 + std::abs(pairing[k])));
  }
}

TEST(Constraints, PairingIsFirstVariationRichardson) {
  // Second-order remainder: g(eps) - g(0) - eps * pairing = O(eps^2), for both phase models.
  const AnnulusParams p = ring(64);
  const Mesh m = annulus_mesh(p);
  const VertexField V = smooth_field(m, p.r_inner);
  for (const PhaseField& ph : {PhaseField::single_phase(0.0), PhaseField::stratified(0.1, 0.2)}) {
    const ConstraintVector ref = capture_reference(m, ph);
    const ConstraintVector pairing = constraint_pairing(m, ph, V);
    const double eps0 = 0.04;
    std::vector<ConstraintVector> rem;
    for (int k = 0; k < 3; ++k) {
      const double eps = eps0 / std::pow(2.0, k);
      rem.push_back(evaluate_constraints(apply_deformation(m, V, eps), ph, ref) - eps * pairing);
    }
    for (int i = 0; i < kNumConstraints; ++i) {
      const double s1 = std::log2(std::abs(rem[0][i] / rem[1][i]));
      const double s2 = std::log2(std::abs(rem[1][i] / rem[2][i]));
      EXPECT_GE(s1, 1.9) << "component " << i;
      EXPECT_GE(s2, 1.9) << "component " << i;
    }
  }
}

TEST(Constraints, ScalesArePositive) {
  const Mesh m = cylinder_channel_mesh(CylinderChannelParams::level(0));
  const ConstraintVector s = constraint_scales(m, PhaseField::single_phase(0.0));
  EXPECT_GT(s.minCoeff(), 0.0);
  // Displaced area of the polygonal cylinder.
  EXPECT_NEAR(displaced_water(m, PhaseField::single_phase(0.0))[2], std::numbers::pi * 0.25, 2e-3);
}
