#pragma once

#include "shapeopt/adjoint.hpp"
#include "shapeopt/concentration.hpp"
#include "shapeopt/flow.hpp"

#include <array>
#include <vector>

namespace shapeopt {

// The linear form V -> J'(Omega)V = int_{obsN} G V.n ds with
// G = drag density + sum_i (lambda_i - tau g_i) (1-c) x_i + (lambda_3 - tau g_3) (1-c).
struct SensitivityForm {
  std::vector<int> faces;             // obsN faces
  std::vector<double> drag_density;   // per entry of faces
  PhaseField phase;
  ConstraintVector lambda = ConstraintVector::Zero();
  ConstraintVector g = ConstraintVector::Zero();
  double tau = 0.0;

  ConstraintVector multiplier_weights() const { return lambda - tau * g; }
  // Total density at the centroid of faces[k].
  double density(const Mesh& mesh, std::size_t k) const;
};

// Drag density mu dw/dn . dv/dn from one-sided face gradients.
std::vector<double> drag_density(const PrimalState& primal, const AdjointState& adjoint, const Mesh& mesh,
                                 const FluidProps& props, const FlowConfig& cfg);

SensitivityForm assemble_sensitivity(const PrimalState& primal, const AdjointState& adjoint, const Mesh& mesh,
                                     const FluidProps& props, const FlowConfig& cfg, const ConstraintVector& lambda,
                                     double tau, const ConstraintVector& g);

// Zero drag density on every obsN face of the mesh.
SensitivityForm empty_form(const Mesh& mesh, const PhaseField& phase);

double evaluate_form(const SensitivityForm& form, const VertexField& V, const Mesh& mesh);

// Vertex loads of the drag part: evaluate_form = sum_v load[v] . V[v] + constraint terms.
VertexField drag_load(const SensitivityForm& form, const Mesh& mesh);
// Vertex loads of the complete form.
VertexField form_load(const SensitivityForm& form, const Mesh& mesh);

}  // namespace shapeopt
