#pragma once

#include "shapeopt/constraints.hpp"
#include "shapeopt/descent.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace shapeopt {

enum class DeformationMode { full_hull, underwater_only };
enum class OptimizationStatus { converged, max_iter, grid_deterioration, solver_failure };

std::string_view to_string(DeformationMode mode);
std::string_view to_string(OptimizationStatus status);
DeformationMode parse_deformation_mode(std::string_view token);

struct OptimizerConfig {
  int max_outer_iterations = 20;
  DeformationMode mode = DeformationMode::full_hull;
  // Largest vertex displacement of the first trial step, relative to the vertex's shortest edge.
  double alpha_step = 0.5;
  double backtrack_factor = 0.5;
  int max_backtracks = 6;
  // Bound on |g_i| / scale_i for accepted iterates.
  double tol_g = 1e-3;
  // Stop when ||V||_L2 <= stop_tol * domain diameter.
  double stop_tol = 1e-8;
  // Project every trial mesh back onto g = 0 before it is evaluated.
  bool restore_constraints = true;
  double restore_tol = 1e-10;  // on |g_i| / scale_i
  // A descent solve that misses tol is repeated with half the relaxation and twice the Picard budget.
  int descent_retries = 3;

  void validate() const;
};

struct OptimizationRecord {
  int iteration = 0;
  double J = 0.0;                // objective after the step
  double drag = 0.0;             // -F.e1 after the step
  double drag_normalized = 0.0;  // drag / initial drag
  ConstraintVector g = ConstraintVector::Zero();
  ConstraintVector g_relative = ConstraintVector::Zero();  // g_i / scale_i
  ConstraintVector lambda = ConstraintVector::Zero();
  double eps = 0.0;
  double min_cell_volume = 0.0;
  int picard_iterations = 0;
  int backtracks = 0;
};

struct OptimizationResult {
  OptimizationStatus status = OptimizationStatus::max_iter;
  std::string message;
  std::vector<OptimizationRecord> history;
  Mesh mesh;  // last accepted mesh
  // Quality of the last trial mesh when the run ends in grid deterioration, else of `mesh`.
  QualityReport final_quality;
  double initial_J = 0.0;
  double initial_drag = 0.0;
  ConstraintVector reference = ConstraintVector::Zero();
  ConstraintVector scales = ConstraintVector::Ones();
};

// State at an accepted iteration, before the step is applied.
struct IterationSnapshot {
  const OptimizationRecord& record;
  const Mesh& mesh;
  const PrimalState& primal;
  const SensitivityForm& form;
  const VertexField& V;
};

struct OptimizerHooks {
  std::function<void(const IterationSnapshot&)> on_accept;
  std::function<void(const std::string&)> log;
  std::function<void(const std::string&)> trace;  // per-trial detail
};

// underwater_only: obstacle faces whose mean concentration is >= 0.5 become obsD.
Mesh retag_for_mode(const Mesh& mesh, const PhaseField& phase, DeformationMode mode);

struct RestorationResult {
  Mesh mesh;
  ConstraintVector g = ConstraintVector::Zero();
  int iterations = 0;
  bool converged = false;
};

// Newton iteration on g(mesh + sum_i a_i R_i) = 0 with R_i = K^-1 B_i, K the P1 Laplacian on the free
// vertices and B_i the constraint loads; only obsN vertices and the interior move.
RestorationResult restore_constraints(const Mesh& mesh, const PhaseField& phase, const ConstraintVector& reference,
                                      const ConstraintVector& scales, double tol, int max_iterations = 8);

struct StepChoice {
  bool accepted = false;
  bool all_invalid = false;  // every trial mesh failed the quality check
  double eps = 0.0;
  int backtracks = 0;
  std::optional<Mesh> mesh;     // accepted mesh
  QualityReport last_quality;  // of the last trial
};

// Returns the evaluated objective of a valid trial mesh, or nullopt to reject it.
using TrialEvaluator = std::function<std::optional<double>(const Mesh&)>;

// First trial: the largest vertex displacement equals alpha_step times that vertex's shortest incident edge.
// Shrinks eps by backtrack_factor while the mesh is invalid, the evaluator rejects or J increases.
StepChoice choose_step_size(const VertexField& V, const Mesh& mesh, double J_current, const TrialEvaluator& evaluate,
                            const OptimizerConfig& cfg);

OptimizationResult run_optimization(const Mesh& mesh0, const FluidProps& props, const FlowConfig& flow_cfg,
                                    const DescentConfig& descent_cfg, const OptimizerConfig& opt_cfg,
                                    const OptimizerHooks& hooks = {});

void write_history_csv(const OptimizationResult& result, const std::string& path);

}  // namespace shapeopt
