#pragma once

#include "shapeopt/flow.hpp"

#include <vector>

namespace shapeopt {

struct AdjointState {
  CellVectorField w;
  ScalarField q;
  std::vector<Vec2> boundary_w;  // Dirichlet data per boundary face, -eta off the outlet
  std::vector<Vec2> gamma;       // per obstacle face, in mesh.obstacle_faces() order
  std::vector<ResidualRecord> residual_history;
  bool converged = false;
};

// Adjoint momentum and continuity linearised about the primal state with frozen viscosity:
//   -rho (v.grad) w - rho (grad w)^T v - div(mu (grad w + grad w^T)) + grad q = 0,  div w = 0,
// with w = -eta on every Dirichlet face and a traction-free outlet.
// With cfg.convection == false the operator is the primal Stokes operator.
AdjointState solve_adjoint(const PrimalState& primal, const ExtensionField& eta, const FluidProps& props,
                           const Mesh& mesh, const FlowConfig& cfg);

// gamma = -mu (grad w + grad w^T) n + q n on every obstacle face.
std::vector<Vec2> recover_gamma(const AdjointState& adjoint, const PrimalState& primal, const Mesh& mesh,
                                const FluidProps& props, const FlowConfig& cfg);

}  // namespace shapeopt
