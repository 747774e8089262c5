#pragma once

#include "shapeopt/concentration.hpp"
#include "shapeopt/mesh.hpp"

#include <optional>
#include <vector>

namespace shapeopt {

struct FluidProps {
  double rho_water = 1.0, rho_air = 1.0;
  double mu_water = 0.05, mu_air = 0.05;
  Vec2 gravity = Vec2::Zero();
  Vec2 body_force = Vec2::Zero();

  double rho(double c) const { return (1.0 - c) * rho_water + c * rho_air; }
  double mu(double c) const { return (1.0 - c) * mu_water + c * mu_air; }
  void validate() const;
};

struct FlowConfig {
  Vec2 v_infinity = Vec2(1.0, 0.0);
  double c_infinity = 0.0;
  std::optional<double> waterline;
  double delta_c = 0.0;
  // Damping of the Newton update for velocity and pressure.
  double relax_v = 1.0, relax_p = 1.0;
  // 0 = first-order upwind, 1 = linear upwind reconstruction.
  double beta_conv = 1.0;
  bool convection = true;
  int max_iterations = 50;
  double tolerance = 1e-8;
  // Optional per-boundary-face velocity overriding the patch defaults.
  std::vector<Vec2> boundary_velocity;

  PhaseField phase() const;
  void validate() const;
};

struct ResidualRecord {
  int iteration = 0;
  double momentum = 0.0;
  double continuity = 0.0;
};

struct PrimalState {
  CellVectorField v;
  ScalarField p;  // total pressure
  ScalarField c;
  std::vector<Vec2> boundary_velocity;  // Dirichlet data per boundary face (unused on the outlet)
  std::vector<ResidualRecord> residual_history;
  bool converged = false;
  double max_mass_imbalance = 0.0;
};

class ConvergenceError : public SolverError {
 public:
  ConvergenceError(const std::string& what, std::vector<ResidualRecord> history)
      : SolverError(what), history_(std::move(history)) {}
  const std::vector<ResidualRecord>& history() const { return history_; }

 private:
  std::vector<ResidualRecord> history_;
};

// Velocity data on every boundary face: v_inf on inlets, zero on walls and obstacles.
std::vector<Vec2> default_boundary_velocity(const Mesh& mesh, const FlowConfig& cfg);

PrimalState solve_primal(const Mesh& mesh, const FluidProps& props, const FlowConfig& cfg,
                         const PrimalState* initial_guess = nullptr);

// Static pressure p + rho g.x for export.
ScalarField static_pressure(const PrimalState& state, const Mesh& mesh, const FluidProps& props);
// Net volume flux out of each cell.
ScalarField mass_imbalance(const PrimalState& state, const Mesh& mesh, const FluidProps& props, const FlowConfig& cfg);

Vec2 compute_force(const PrimalState& state, const Mesh& mesh, const FluidProps& props, const FlowConfig& cfg);
inline double drag(const Vec2& force) { return -force.x(); }

struct ExtensionField {
  VertexField vertex;
  CellVectorField cell;
  std::vector<Vec2> boundary;  // per boundary face
};

// Harmonic extension with eta = -e1 on the obstacle and 0 on the outer boundary.
ExtensionField build_extension_eta(const Mesh& mesh);

double compute_objective(const PrimalState& state, const ExtensionField& eta, const FluidProps& props, const Mesh& mesh,
                         const FlowConfig& cfg);

}  // namespace shapeopt
