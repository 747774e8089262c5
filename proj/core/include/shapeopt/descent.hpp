#pragma once

#include "shapeopt/shape_gradient.hpp"

#include <string>
#include <vector>

namespace shapeopt {

struct DescentConfig {
  std::vector<double> p_sequence = {2.0, 2.3, 2.6};
  double omega = 1.0;  // relaxation of the Picard update, in (0, 2)
  double tol = 1e-9;
  double tau = 10.0;
  double eps_reg = 1e-10;
  int max_picard_iters = 500;
  // Caps omega at 0.9 * 4 / (tau s + 2), s the largest eigenvalue of B K_p^-1 B^T for the current
  // weights: the bound below which the relaxed multiplier iteration is stable for a frozen operator.
  bool adaptive_relaxation = true;
  // When false the multipliers stay at zero and the form is used as given.
  bool update_multipliers = true;

  void validate() const;
};

struct DescentRecord {
  double p = 2.0;
  int k = 0;  // iteration within the p stage, starting at 1
  double res_V = 0.0;          // ||V^k - V^{k-1}||^2 in L2
  double res_lambda_bc = 0.0;  // |lambda_{1..d}^k - lambda_{1..d}^{k-1}|^2
  double res_lambda_v = 0.0;   // |lambda_{d+1}^k - lambda_{d+1}^{k-1}|^2
  double R = 0.0;
};

struct DescentResult {
  VertexField V;
  ConstraintVector lambda = ConstraintVector::Zero();
  std::vector<DescentRecord> residual_history;
  bool converged = false;
  std::string diagnostic;  // set when a stage hit max_picard_iters
  double omega = 0.0;  // smallest relaxation used
  int capped_iterations = 0;
  int iterations() const { return static_cast<int>(residual_history.size()); }
};

// Solves the linearised p-Laplace step
//   int w(V_prev) grad V : grad U dx = -J'(Omega)U   for all U vanishing on fixed vertices,
// with w = (grad V_prev : grad V_prev + eps_reg)^((p-2)/2) per cell and the form's constraint terms
// weighted by (lambda - tau g). V is zero on every vertex of a non-obsN boundary face.
VertexField picard_step(const VertexField& V_prev, const SensitivityForm& form, const ConstraintVector& lambda,
                        const Mesh& mesh, double p, double eps_reg);

ConstraintVector update_multipliers(const ConstraintVector& lambda, double tau, const ConstraintVector& pairing);

// Picard iteration with relaxation and multiplier updates, continued over p_sequence.
// The multipliers start at form.lambda (zero for a freshly assembled form); cfg.tau and form.g are used.
DescentResult solve_descent(const SensitivityForm& form, const Mesh& mesh, const DescentConfig& cfg);

void write_descent_csv(const DescentResult& result, const std::string& path);

}  // namespace shapeopt
