#include "shapeopt/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shapeopt {

ConstraintVector water_integrals(const Mesh& mesh, const PhaseField& phase) {
  ConstraintVector sum = ConstraintVector::Zero();
  const auto& x = mesh.vertices();
  for (const Cell& c : mesh.cells()) sum += water_moments(x[c[0]], x[c[1]], x[c[2]], phase);
  return sum;
}

ConstraintVector capture_reference(const Mesh& mesh, const PhaseField& phase) { return water_integrals(mesh, phase); }

ConstraintVector evaluate_constraints(const Mesh& mesh, const PhaseField& phase, const ConstraintVector& reference) {
  return water_integrals(mesh, phase) - reference;
}

ConstraintVector constraint_pairing(const Mesh& mesh, const PhaseField& phase, const VertexField& V) {
  if (static_cast<int>(V.size()) != mesh.num_vertices()) throw Error("constraint_pairing: field size mismatch");
  const auto& geo = mesh.geometry();
  const auto& x = mesh.vertices();
  ConstraintVector out = ConstraintVector::Zero();
  for (int f : mesh.patch(PatchKind::obsN)) {
    const auto& fv = mesh.face(f).v;
    const Vec2 a = x[fv[0]], b = x[fv[1]];
    const Vec2 n = geo.face_normal[f];
    const double va = V[fv[0]].dot(n), vb = V[fv[1]].dot(n);
    const double len2 = (b - a).squaredNorm();
    auto vn = [&](const Vec2& p) {
      const double s = (p - a).dot(b - a) / len2;
      return (1.0 - s) * va + s * vb;
    };
    for (int i = 0; i < 2; ++i)
      out[i] += integrate_segment(a, b, phase, [&](const Vec2& p) { return (1.0 - phase.value(p)) * p[i] * vn(p); });
    out[2] += integrate_segment(a, b, phase, [&](const Vec2& p) { return (1.0 - phase.value(p)) * vn(p); });
  }
  return out;
}

std::array<VertexField, kNumConstraints> constraint_loads(const Mesh& mesh, const PhaseField& phase) {
  const auto& geo = mesh.geometry();
  const auto& x = mesh.vertices();
  std::array<VertexField, kNumConstraints> B;
  for (auto& b : B) b.assign(mesh.num_vertices(), Vec2::Zero());
  for (int f : mesh.patch(PatchKind::obsN)) {
    const auto& fv = mesh.face(f).v;
    const Vec2 a = x[fv[0]], b = x[fv[1]];
    const Vec2 n = geo.face_normal[f];
    const double len2 = (b - a).squaredNorm();
    for (int end = 0; end < 2; ++end) {
      auto hat = [&](const Vec2& p) {
        const double s = (p - a).dot(b - a) / len2;
        return end == 0 ? 1.0 - s : s;
      };
      for (int i = 0; i < kNumConstraints; ++i) {
        const double val = integrate_segment(a, b, phase, [&](const Vec2& p) {
          return (1.0 - phase.value(p)) * (i < 2 ? p[i] : 1.0) * hat(p);
        });
        B[i][fv[end]] += val * n;
      }
    }
  }
  return B;
}

ConstraintVector displaced_water(const Mesh& mesh, const PhaseField& phase) {
  // Divergence theorem with fields (F, 0) whose x-derivative is the integrand; c depends on y only.
  const auto& geo = mesh.geometry();
  const auto& x = mesh.vertices();
  ConstraintVector out = ConstraintVector::Zero();
  for (int f : mesh.obstacle_faces()) {
    const auto& fv = mesh.face(f).v;
    const double nx = -geo.face_normal[f].x();  // out of the obstacle
    auto w = [&](const Vec2& p) { return 1.0 - phase.value(p); };
    out[0] += nx * integrate_segment(x[fv[0]], x[fv[1]], phase, [&](const Vec2& p) { return w(p) * 0.5 * p.x() * p.x(); });
    out[1] += nx * integrate_segment(x[fv[0]], x[fv[1]], phase, [&](const Vec2& p) { return w(p) * p.x() * p.y(); });
    out[2] += nx * integrate_segment(x[fv[0]], x[fv[1]], phase, [&](const Vec2& p) { return w(p) * p.x(); });
  }
  return out;
}

ConstraintVector constraint_scales(const Mesh& mesh, const PhaseField& phase) {
  double volume = std::abs(displaced_water(mesh, phase)[2]);
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::max()), hi = -lo;
  for (int f : mesh.obstacle_faces())
    for (int v : mesh.face(f).v) {
      lo = lo.cwiseMin(mesh.vertices()[v]);
      hi = hi.cwiseMax(mesh.vertices()[v]);
    }
  double length = mesh.obstacle_faces().empty() ? domain_diameter(mesh) : (hi - lo).norm();
  if (!(volume > 0.0)) {
    volume = std::abs(water_integrals(mesh, PhaseField::single_phase(0.0))[2]);
    length = domain_diameter(mesh);
  }
  return ConstraintVector(volume * length, volume * length, volume);
}

}  // namespace shapeopt
