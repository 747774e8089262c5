#include "support.hpp"

#include "shapeopt/adjoint.hpp"

#include <Eigen/LU>
#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace shapeopt;

namespace {

ExtensionField scaled(const ExtensionField& e, double s) {
  ExtensionField out = e;
  for (auto& v : out.vertex) v *= s;
  for (auto& v : out.cell) v *= s;
  for (auto& v : out.boundary) v *= s;
  return out;
}

double max_diff(const CellVectorField& a, const CellVectorField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).norm());
  return m;
}

double max_abs(const CellVectorField& a) {
  double m = 0.0;
  for (const auto& v : a) m = std::max(m, v.norm());
  return m;
}

FlowConfig stokes_config() {
  FlowConfig cfg;
  cfg.convection = false;
  return cfg;
}

// Face gradient and pressure at a Dirichlet boundary face, assembled directly from cell data.
// Least-squares gradient in the owner cell over its vertex neighbours and nearby Dirichlet faces,
// with the component along the owner-to-face direction replaced by the two-point difference.
struct WallTrace {
  Mat2 grad;
  double pressure;
};

WallTrace wall_trace(const Mesh& mesh, const AdjointState& adj, int f) {
  const auto& geo = mesh.geometry();
  const int nI = mesh.num_interior_faces();
  const int P = mesh.face(f).owner;
  const Vec2 xP = geo.cell_centroid[P];

  std::set<int> bfaces;
  for (int v : mesh.cells()[P])
    for (int b : mesh.vertex_boundary_faces(v))
      if (is_dirichlet(mesh.face(b).kind)) bfaces.insert(b);

  Mat2 M = Mat2::Zero(), Mp = Mat2::Zero();
  Mat2 rhs = Mat2::Zero();
  Vec2 rhs_p = Vec2::Zero();
  for (int j : mesh.cell_neighbors(P)) {
    const Vec2 d = geo.cell_centroid[j] - xP;
    const double w = 1.0 / d.squaredNorm();
    M += w * d * d.transpose();
    Mp += w * d * d.transpose();
    rhs += w * (adj.w[j] - adj.w[P]) * d.transpose();
    rhs_p += w * (adj.q[j] - adj.q[P]) * d;
  }
  for (int b : bfaces) {
    const Vec2 d = geo.face_centroid[b] - xP;
    const double w = 1.0 / d.squaredNorm();
    M += w * d * d.transpose();
    rhs += w * (adj.boundary_w[b - nI] - adj.w[P]) * d.transpose();
  }
  const Mat2 GP = rhs * M.inverse();
  const Vec2 gq = Mp.inverse() * rhs_p;

  const Vec2 r = geo.face_centroid[f] - xP;
  const Vec2 t = r / r.squaredNorm();
  const Vec2 jump = adj.boundary_w[f - nI] - adj.w[P];
  return {GP - (GP * r) * t.transpose() + jump * t.transpose(), adj.q[P] + gq.dot(r)};
}

}  // namespace

TEST(Adjoint, ZeroDataGivesZeroSolution) {
  const auto& k = test::coarse_cylinder();
  const AdjointState a = solve_adjoint(k.primal, scaled(k.eta, 0.0), k.props, k.mesh, k.cfg);
  EXPECT_EQ(max_abs(a.w), 0.0);
  const auto [lo, hi] = std::minmax_element(a.q.begin(), a.q.end());
  EXPECT_EQ(*hi - *lo, 0.0);
}

TEST(Adjoint, ConvergesOnCylinder) {
  const auto& a = test::coarse_cylinder().adjoint;
  ASSERT_TRUE(a.converged);
  const auto& h = a.residual_history;
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LT(h[i].momentum, h[i - 1].momentum);
  EXPECT_LE(h.back().momentum, test::coarse_cylinder().cfg.tolerance);
  EXPECT_LE(h.back().continuity, test::coarse_cylinder().cfg.tolerance);
}

TEST(Adjoint, DirichletDataIsMinusEta) {
  const auto& k = test::coarse_cylinder();
  const int nI = k.mesh.num_interior_faces();
  for (int f : k.mesh.obstacle_faces()) EXPECT_EQ(k.adjoint.boundary_w[f - nI], Vec2(1.0, 0.0));
}

TEST(Adjoint, StokesAdjointEqualsPrimalStokesSolve) {
  const auto& k = test::coarse_cylinder();
  const FlowConfig cfg = stokes_config();
  const PrimalState stokes = solve_primal(k.mesh, k.props, cfg);
  const AdjointState a = solve_adjoint(stokes, k.eta, k.props, k.mesh, cfg);

  FlowConfig data = cfg;
  data.boundary_velocity = a.boundary_w;
  const PrimalState w = solve_primal(k.mesh, k.props, data);
  EXPECT_LT(max_diff(a.w, w.v), 1e-8);
  double dq = 0.0;
  for (std::size_t c = 0; c < a.q.size(); ++c) dq = std::max(dq, std::abs(a.q[c] - w.p[c]));
  EXPECT_LT(dq, 1e-8);
}

TEST(Adjoint, LinearInTheData) {
  const auto& k = test::coarse_cylinder();
  const FlowConfig cfg = stokes_config();
  const PrimalState stokes = solve_primal(k.mesh, k.props, cfg);
  const AdjointState a1 = solve_adjoint(stokes, k.eta, k.props, k.mesh, cfg);
  const AdjointState a3 = solve_adjoint(stokes, scaled(k.eta, -3.0), k.props, k.mesh, cfg);
  CellVectorField w1 = a1.w;
  for (auto& v : w1) v *= -3.0;
  EXPECT_LT(max_diff(w1, a3.w), 1e-9 * max_abs(a3.w));
  for (std::size_t c = 0; c < a1.q.size(); ++c) EXPECT_NEAR(-3.0 * a1.q[c], a3.q[c], 1e-9);
}

TEST(Adjoint, GammaOfTrivialFields) {
  const auto& k = test::coarse_cylinder();
  AdjointState a = k.adjoint;
  for (auto& v : a.w) v.setZero();
  for (auto& v : a.boundary_w) v.setZero();
  for (auto& q : a.q) q = 0.0;
  for (const auto& g : recover_gamma(a, k.primal, k.mesh, k.props, k.cfg)) EXPECT_EQ(g.norm(), 0.0);
  for (auto& q : a.q) q = 1.0;
  const auto gamma = recover_gamma(a, k.primal, k.mesh, k.props, k.cfg);
  const auto faces = k.mesh.obstacle_faces();
  for (std::size_t i = 0; i < faces.size(); ++i)
    EXPECT_LT((gamma[i] - k.mesh.geometry().face_normal[faces[i]]).norm(), 1e-12);
}

TEST(Adjoint, GammaMatchesFacewiseAssembly) {
  const auto& k = test::coarse_cylinder();
  const FlowConfig cfg = stokes_config();
  const PrimalState stokes = solve_primal(k.mesh, k.props, cfg);
  const AdjointState a = solve_adjoint(stokes, k.eta, k.props, k.mesh, cfg);
  const auto gamma = recover_gamma(a, stokes, k.mesh, k.props, cfg);
  const auto faces = k.mesh.obstacle_faces();
  ASSERT_EQ(gamma.size(), faces.size());
  double scale = 0.0, err = 0.0;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const Vec2 n = k.mesh.geometry().face_normal[faces[i]];
    const WallTrace t = wall_trace(k.mesh, a, faces[i]);
    const Vec2 ref = -k.props.mu_water * (t.grad + t.grad.transpose()) * n + t.pressure * n;
    err = std::max(err, (gamma[i] - ref).norm());
    scale = std::max(scale, ref.norm());
  }
  EXPECT_LT(err, 1e-10 * std::max(scale, 1.0));
}
