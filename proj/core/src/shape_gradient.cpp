#include "shapeopt/shape_gradient.hpp"

#include "fv.hpp"
#include "shapeopt/constraints.hpp"

namespace shapeopt {

double SensitivityForm::density(const Mesh& mesh, std::size_t k) const {
  const Vec2 x = mesh.geometry().face_centroid[faces[k]];
  const double water = 1.0 - phase.value(x);
  const ConstraintVector m = multiplier_weights();
  return drag_density[k] + water * (m[0] * x.x() + m[1] * x.y() + m[2]);
}

std::vector<double> drag_density(const PrimalState& primal, const AdjointState& adjoint, const Mesh& mesh,
                                 const FluidProps& props, const FlowConfig& cfg) {
  const fv::Operators ops = fv::build_operators(mesh, props, cfg.phase(), cfg.beta_conv, 1.0);
  const auto Gv = fv::face_velocity_gradients(ops, fv::pack(primal.v, primal.p), fv::pack_boundary(primal.boundary_velocity));
  const auto Gw = fv::face_velocity_gradients(ops, fv::pack(adjoint.w, adjoint.q), fv::pack_boundary(adjoint.boundary_w));
  const auto& geo = mesh.geometry();
  std::vector<double> out;
  for (int f : mesh.patch(PatchKind::obsN)) {
    const Vec2 n = geo.face_normal[f];
    out.push_back(ops.mu_f[f] * (Gw[f] * n).dot(Gv[f] * n));
  }
  return out;
}

SensitivityForm assemble_sensitivity(const PrimalState& primal, const AdjointState& adjoint, const Mesh& mesh,
                                     const FluidProps& props, const FlowConfig& cfg, const ConstraintVector& lambda,
                                     double tau, const ConstraintVector& g) {
  SensitivityForm form;
  form.faces = mesh.patch(PatchKind::obsN);
  form.drag_density = drag_density(primal, adjoint, mesh, props, cfg);
  form.phase = cfg.phase();
  form.lambda = lambda;
  form.tau = tau;
  form.g = g;
  return form;
}

SensitivityForm empty_form(const Mesh& mesh, const PhaseField& phase) {
  SensitivityForm form;
  form.faces = mesh.patch(PatchKind::obsN);
  form.drag_density.assign(form.faces.size(), 0.0);
  form.phase = phase;
  return form;
}

VertexField drag_load(const SensitivityForm& form, const Mesh& mesh) {
  const auto& geo = mesh.geometry();
  VertexField load(mesh.num_vertices(), Vec2::Zero());
  for (std::size_t k = 0; k < form.faces.size(); ++k) {
    const int f = form.faces[k];
    const Vec2 half = 0.5 * geo.face_area[f] * form.drag_density[k] * geo.face_normal[f];
    for (int v : mesh.face(f).v) load[v] += half;
  }
  return load;
}

VertexField form_load(const SensitivityForm& form, const Mesh& mesh) {
  VertexField load = drag_load(form, mesh);
  const auto B = constraint_loads(mesh, form.phase);
  const ConstraintVector m = form.multiplier_weights();
  for (int i = 0; i < kNumConstraints; ++i)
    if (m[i] != 0.0)
      for (int v = 0; v < mesh.num_vertices(); ++v) load[v] += m[i] * B[i][v];
  return load;
}

double evaluate_form(const SensitivityForm& form, const VertexField& V, const Mesh& mesh) {
  if (static_cast<int>(V.size()) != mesh.num_vertices()) throw Error("evaluate_form: field size mismatch");
  const auto& geo = mesh.geometry();
  double sum = 0.0;
  for (std::size_t k = 0; k < form.faces.size(); ++k) {
    const int f = form.faces[k];
    const auto& fv = mesh.face(f).v;
    sum += geo.face_area[f] * form.drag_density[k] * 0.5 * (V[fv[0]] + V[fv[1]]).dot(geo.face_normal[f]);
  }
  const ConstraintVector m = form.multiplier_weights();
  if (!m.isZero(0.0)) sum += m.dot(constraint_pairing(mesh, form.phase, V));
  return sum;
}

}  // namespace shapeopt
