#pragma once

#include "shapeopt/adjoint.hpp"
#include "shapeopt/mesh_generators.hpp"
#include "shapeopt/p1.hpp"
#include "shapeopt/shape_gradient.hpp"

#include <Eigen/SparseCholesky>

#include <numbers>
#include <vector>

namespace shapeopt::test {

// Coarse cylinder in a channel at Re = 20 (D = 1, v = 1, rho = 1, mu = 0.05), solved once per process.
struct CylinderCase {
  Mesh mesh;
  FluidProps props;
  FlowConfig cfg;
  PrimalState primal;
  ExtensionField eta;
  AdjointState adjoint;
};

inline const CylinderCase& coarse_cylinder() {
  static const CylinderCase c = [] {
    CylinderCase k;
    k.mesh = cylinder_channel_mesh(CylinderChannelParams::level(0));
    k.primal = solve_primal(k.mesh, k.props, k.cfg);
    k.eta = build_extension_eta(k.mesh);
    k.adjoint = solve_adjoint(k.primal, k.eta, k.props, k.mesh, k.cfg);
    return k;
  }();
  return c;
}

// Polygon area by the shoelace formula, counter-clockwise positive.
inline double polygon_area(const std::vector<Vec2>& p) {
  double a = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2& x = p[i];
    const Vec2& y = p[(i + 1) % p.size()];
    a += x.x() * y.y() - y.x() * x.y();
  }
  return 0.5 * a;
}

// Vertices of the obstacle of an annulus mesh, counter-clockwise (they are numbered first).
inline std::vector<Vec2> annulus_inner_ring(const Mesh& m, int n_theta) {
  return {m.vertices().begin(), m.vertices().begin() + n_theta};
}

inline double max_norm(const VertexField& V) {
  double m = 0.0;
  for (const auto& v : V) m = std::max(m, v.norm());
  return m;
}

// Unit-weight vector Laplacian solved directly: K V = -sum_faces |f| G n / 2 at each face vertex,
// with V = 0 on every vertex of a non-obsN boundary face. Assembled here from the triangle formula.
inline VertexField direct_linear_solve(const SensitivityForm& form, const Mesh& mesh) {
  const int nv = mesh.num_vertices();
  std::vector<char> fixed(nv, 0);
  for (int f = mesh.num_interior_faces(); f < mesh.num_faces(); ++f)
    if (mesh.face(f).kind != PatchKind::obsN)
      for (int v : mesh.face(f).v) fixed[v] = 1;
  std::vector<int> idx(nv, -1);
  int n = 0;
  for (int v = 0; v < nv; ++v)
    if (!fixed[v]) idx[v] = n++;

  std::vector<Eigen::Triplet<double>> t;
  for (const auto& c : mesh.cells()) {
    const Vec2 x[3] = {mesh.vertices()[c[0]], mesh.vertices()[c[1]], mesh.vertices()[c[2]]};
    const double area = 0.5 * ((x[1] - x[0]).x() * (x[2] - x[0]).y() - (x[1] - x[0]).y() * (x[2] - x[0]).x());
    Vec2 g[3];
    for (int i = 0; i < 3; ++i) {
      const Vec2 e = x[(i + 2) % 3] - x[(i + 1) % 3];  // edge opposite vertex i
      g[i] = Vec2(-e.y(), e.x()) / (2.0 * area);
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (idx[c[i]] >= 0 && idx[c[j]] >= 0) t.emplace_back(idx[c[i]], idx[c[j]], area * g[i].dot(g[j]));
  }
  SpMat K(n, n);
  K.setFromTriplets(t.begin(), t.end());

  Eigen::MatrixX2d b = Eigen::MatrixX2d::Zero(n, 2);
  const auto& geo = mesh.geometry();
  for (std::size_t k = 0; k < form.faces.size(); ++k) {
    const int f = form.faces[k];
    for (int v : mesh.face(f).v)
      if (idx[v] >= 0) b.row(idx[v]) -= 0.5 * geo.face_area[f] * form.drag_density[k] * geo.face_normal[f].transpose();
  }
  Eigen::SimplicialLLT<SpMat> llt(K);
  const Eigen::MatrixX2d x = llt.solve(b);
  VertexField V(nv, Vec2::Zero());
  for (int v = 0; v < nv; ++v)
    if (idx[v] >= 0) V[v] = x.row(idx[v]).transpose();
  return V;
}

}  // namespace shapeopt::test
