#pragma once

#include "shapeopt/concentration.hpp"
#include "shapeopt/mesh.hpp"

#include <array>

namespace shapeopt {

// Water moments of the flow domain: (int (1-c) x, int (1-c) y, int (1-c)).
ConstraintVector water_integrals(const Mesh& mesh, const PhaseField& phase);

struct ConstraintState {
  ConstraintVector g = ConstraintVector::Zero();
  ConstraintVector reference = ConstraintVector::Zero();
};

ConstraintVector capture_reference(const Mesh& mesh, const PhaseField& phase);
// Deviation of the water moments from the reference.
ConstraintVector evaluate_constraints(const Mesh& mesh, const PhaseField& phase, const ConstraintVector& reference);

// First variation of the water moments along V:
// component i = int_{obsN} (1-c) x_i V.n ds, last = int_{obsN} (1-c) V.n ds, n the flow-domain normal.
// To first order g(apply_deformation(mesh, V, eps)) = g(mesh) + eps * pairing.
ConstraintVector constraint_pairing(const Mesh& mesh, const PhaseField& phase, const VertexField& V);

// Vertex loads B_i with constraint_pairing(V)_i = sum_v B_i[v] . V[v].
std::array<VertexField, kNumConstraints> constraint_loads(const Mesh& mesh, const PhaseField& phase);

// Moments of the water displaced by the obstacle (the region enclosed by the obstacle faces).
ConstraintVector displaced_water(const Mesh& mesh, const PhaseField& phase);

// Normalisation for |g_i|: displaced volume for the last component, displaced volume times the
// obstacle bounding-box diameter for the moments. Falls back to the domain area if nothing is displaced.
ConstraintVector constraint_scales(const Mesh& mesh, const PhaseField& phase);

}  // namespace shapeopt
