#pragma once

#include "shapeopt/flow.hpp"

#include <cstdint>
#include <vector>

namespace shapeopt {

// Smooth random normal displacement of the obsN boundary (low-order Fourier modes in the angle about
// the obstacle centre), harmonically extended into the domain and scaled to unit maximum norm.
VertexField random_boundary_field(const Mesh& mesh, std::uint64_t seed, int modes = 4);

// Drag through the volume form on a freshly built extension.
double reduced_objective(const Mesh& mesh, const FluidProps& props, const FlowConfig& cfg,
                         const PrimalState* initial_guess = nullptr, PrimalState* state_out = nullptr);

struct GradientCheckRow {
  std::uint64_t seed = 0;
  double adjoint = 0.0;
  double finite_difference = 0.0;
  double rel_error = 0.0;
};

struct GradientCheckReport {
  double objective = 0.0;
  std::vector<GradientCheckRow> rows;
  double max_error() const;
  double median_error() const;
};

// Compares the adjoint directional derivative with (J(+eps) - J(-eps)) / (2 eps) for n_fields fields.
GradientCheckReport check_gradient(const Mesh& mesh, const FluidProps& props, const FlowConfig& cfg, int n_fields,
                                   double eps_fd, std::uint64_t seed);

}  // namespace shapeopt
