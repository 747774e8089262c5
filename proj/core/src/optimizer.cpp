#include "shapeopt/optimizer.hpp"

#include "shapeopt/p1.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace shapeopt {

std::string_view to_string(DeformationMode mode) {
  return mode == DeformationMode::full_hull ? "full_hull" : "underwater_only";
}

std::string_view to_string(OptimizationStatus status) {
  switch (status) {
    case OptimizationStatus::converged: return "converged";
    case OptimizationStatus::max_iter: return "max_iter";
    case OptimizationStatus::grid_deterioration: return "grid_deterioration";
    case OptimizationStatus::solver_failure: return "solver_failure";
  }
  return "unknown";
}

DeformationMode parse_deformation_mode(std::string_view token) {
  if (token == "full_hull") return DeformationMode::full_hull;
  if (token == "underwater_only") return DeformationMode::underwater_only;
  throw ConfigError("unknown deformation mode '" + std::string(token) + "'");
}

void OptimizerConfig::validate() const {
  if (max_outer_iterations < 1) throw ConfigError("max_outer_iterations must be at least 1");
  if (!(alpha_step > 0.0)) throw ConfigError("alpha_step must be positive");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) throw ConfigError("backtrack_factor must lie in (0, 1)");
  if (max_backtracks < 0) throw ConfigError("max_backtracks must be non-negative");
  if (!(tol_g > 0.0)) throw ConfigError("tol_g must be positive");
  if (!(stop_tol >= 0.0)) throw ConfigError("stop_tol must be non-negative");
  if (!(restore_tol > 0.0)) throw ConfigError("restore_tol must be positive");
  if (descent_retries < 0) throw ConfigError("descent_retries must be non-negative");
}

Mesh retag_for_mode(const Mesh& mesh, const PhaseField& phase, DeformationMode mode) {
  if (mode == DeformationMode::full_hull) return mesh;
  const ScalarField cf = face_concentration(mesh, phase);
  const int nI = mesh.num_interior_faces();
  std::vector<PatchKind> kinds(mesh.num_boundary_faces());
  for (int b = 0; b < mesh.num_boundary_faces(); ++b) {
    const PatchKind k = mesh.face(nI + b).kind;
    kinds[b] = (k == PatchKind::obsN && cf[nI + b] >= 0.5) ? PatchKind::obsD : k;
  }
  return mesh.with_boundary_kinds(kinds);
}

RestorationResult restore_constraints(const Mesh& mesh, const PhaseField& phase, const ConstraintVector& reference,
                                      const ConstraintVector& scales, double tol, int max_iterations) {
  RestorationResult out{mesh, evaluate_constraints(mesh, phase, reference), 0, false};
  auto rel = [&](const ConstraintVector& g) { return g.cwiseQuotient(scales).cwiseAbs().maxCoeff(); };
  for (;; ++out.iterations) {
    if (rel(out.g) <= tol) {
      out.converged = true;
      return out;
    }
    if (out.iterations >= max_iterations) return out;

    const Mesh& m = out.mesh;
    const int nv = m.num_vertices();
    const auto fixed = m.fixed_vertices();
    std::vector<int> idx(nv, -1);
    int nfree = 0;
    for (int v = 0; v < nv; ++v)
      if (!fixed[v]) idx[v] = nfree++;
    if (nfree == 0) return out;
    const SpMat K = p1_stiffness(m);
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < K.outerSize(); ++k)
      for (SpMat::InnerIterator it(K, k); it; ++it)
        if (idx[it.row()] >= 0 && idx[it.col()] >= 0) t.emplace_back(idx[it.row()], idx[it.col()], it.value());
    SpMat Kff(nfree, nfree);
    Kff.setFromTriplets(t.begin(), t.end());
    Eigen::SimplicialLDLT<SpMat> ldlt(Kff);
    if (ldlt.info() != Eigen::Success) throw SolverError("restore_constraints: stiffness factorization failed");

    const auto B = constraint_loads(m, phase);
    Eigen::MatrixXd rhs(nfree, 2 * kNumConstraints);
    for (int v = 0; v < nv; ++v)
      if (idx[v] >= 0)
        for (int i = 0; i < kNumConstraints; ++i) rhs.block<1, 2>(idx[v], 2 * i) = B[i][v].transpose();
    const Eigen::MatrixXd X = ldlt.solve(rhs);
    std::array<VertexField, kNumConstraints> R;
    for (int i = 0; i < kNumConstraints; ++i) {
      R[i].assign(nv, Vec2::Zero());
      for (int v = 0; v < nv; ++v)
        if (idx[v] >= 0) R[i][v] = X.block<1, 2>(idx[v], 2 * i).transpose();
    }
    Eigen::Matrix3d S;
    for (int j = 0; j < kNumConstraints; ++j) S.col(j) = constraint_pairing(m, phase, R[j]);
    const ConstraintVector a = -S.completeOrthogonalDecomposition().solve(out.g);
    VertexField V(nv, Vec2::Zero());
    for (int i = 0; i < kNumConstraints; ++i)
      for (int v = 0; v < nv; ++v) V[v] += a[i] * R[i][v];
    out.mesh = apply_deformation(m, V, 1.0);
    out.g = evaluate_constraints(out.mesh, phase, reference);
  }
}

StepChoice choose_step_size(const VertexField& V, const Mesh& mesh, double J_current, const TrialEvaluator& evaluate,
                            const OptimizerConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(V.size()) != mesh.num_vertices()) throw Error("choose_step_size: field size mismatch");
  const std::vector<double> h = min_incident_edge(mesh);
  double ratio = 0.0;
  for (std::size_t v = 0; v < V.size(); ++v)
    if (h[v] > 0.0) ratio = std::max(ratio, V[v].norm() / h[v]);
  if (!(ratio > 0.0) || !std::isfinite(ratio)) throw Error("choose_step_size: zero descent direction, no step needed");

  StepChoice out;
  out.all_invalid = true;
  double eps = cfg.alpha_step / ratio;
  for (int bt = 0; bt <= cfg.max_backtracks; ++bt, eps *= cfg.backtrack_factor) {
    out.backtracks = bt;
    Mesh trial = apply_deformation(mesh, V, eps);
    out.last_quality = quality_check(trial);
    if (!out.last_quality.valid) continue;
    out.all_invalid = false;
    const std::optional<double> J = evaluate(trial);
    if (!J || !(*J <= J_current)) continue;
    out.accepted = true;
    out.eps = eps;
    out.mesh = std::move(trial);
    return out;
  }
  return out;
}

namespace {

struct FlowPoint {
  Mesh mesh;
  PrimalState primal;
  ExtensionField eta;
  double J = 0.0;
  double drag = 0.0;
};

FlowPoint evaluate_flow(const Mesh& mesh, const FluidProps& props, const FlowConfig& cfg, const PrimalState* guess) {
  FlowPoint fp;
  fp.mesh = mesh;
  fp.primal = solve_primal(mesh, props, cfg, guess);
  fp.eta = build_extension_eta(mesh);
  fp.J = compute_objective(fp.primal, fp.eta, props, mesh, cfg);
  fp.drag = drag(compute_force(fp.primal, mesh, props, cfg));
  return fp;
}

}  // namespace

OptimizationResult run_optimization(const Mesh& mesh0, const FluidProps& props, const FlowConfig& flow_cfg,
                                    const DescentConfig& descent_cfg, const OptimizerConfig& opt_cfg,
                                    const OptimizerHooks& hooks) {
  props.validate();
  flow_cfg.validate();
  descent_cfg.validate();
  opt_cfg.validate();
  auto log = [&](const std::string& msg) {
    if (hooks.log) hooks.log(msg);
  };
  auto trace = [&](const std::string& msg) {
    if (hooks.trace) hooks.trace(msg);
  };

  const PhaseField phase = flow_cfg.phase();
  OptimizationResult res;
  res.mesh = retag_for_mode(mesh0, phase, opt_cfg.mode);
  res.reference = capture_reference(res.mesh, phase);
  res.scales = constraint_scales(res.mesh, phase);
  res.final_quality = quality_check(res.mesh);
  const double stop = opt_cfg.stop_tol * domain_diameter(res.mesh);

  FlowPoint cur;
  try {
    cur = evaluate_flow(res.mesh, props, flow_cfg, nullptr);
  } catch (const SolverError& e) {
    res.status = OptimizationStatus::solver_failure;
    res.message = e.what();
    return res;
  }
  res.initial_J = cur.J;
  res.initial_drag = cur.drag;
  ConstraintVector lambda = ConstraintVector::Zero();

  for (int it = 1; it <= opt_cfg.max_outer_iterations; ++it) {
    const Mesh& mesh = res.mesh;
    SensitivityForm form;
    DescentResult desc;
    try {
      const AdjointState adj = solve_adjoint(cur.primal, cur.eta, props, mesh, flow_cfg);
      const ConstraintVector g = evaluate_constraints(mesh, phase, res.reference);
      form = assemble_sensitivity(cur.primal, adj, mesh, props, flow_cfg, lambda, descent_cfg.tau, g);
      DescentConfig dcfg = descent_cfg;
      desc = solve_descent(form, mesh, dcfg);
      for (int retry = 0; !desc.converged && retry < opt_cfg.descent_retries; ++retry) {
        log("iteration " + std::to_string(it) + ": " + desc.diagnostic + "; retrying with omega " +
            std::to_string(dcfg.omega / 2));
        dcfg.omega /= 2;
        dcfg.max_picard_iters *= 2;
        desc = solve_descent(form, mesh, dcfg);
      }
    } catch (const SolverError& e) {
      res.status = OptimizationStatus::solver_failure;
      res.message = "iteration " + std::to_string(it) + ": " + e.what();
      return res;
    }
    if (!desc.converged) log("iteration " + std::to_string(it) + ": " + desc.diagnostic);
    lambda = desc.lambda;

    if (p1_l2_norm(mesh, desc.V) <= stop) {
      res.status = OptimizationStatus::converged;
      res.message = "descent direction below the stopping threshold";
      return res;
    }

    std::optional<FlowPoint> trial_point;
    const TrialEvaluator evaluate = [&](const Mesh& trial) -> std::optional<double> {
      try {
        Mesh m = trial;
        if (opt_cfg.restore_constraints) {
          m = restore_constraints(trial, phase, res.reference, res.scales, opt_cfg.restore_tol).mesh;
          if (!quality_check(m).valid) {
            trace("trial rejected: restored mesh is invalid");
            return std::nullopt;
          }
        }
        const ConstraintVector g = evaluate_constraints(m, phase, res.reference);
        if (g.cwiseQuotient(res.scales).cwiseAbs().maxCoeff() > opt_cfg.tol_g) {
          trace("trial rejected: constraint violation");
          return std::nullopt;
        }
        trial_point = evaluate_flow(m, props, flow_cfg, &cur.primal);
      } catch (const SolverError& e) {
        trace(std::string("trial rejected: ") + e.what());
        return std::nullopt;
      }
      std::ostringstream msg;
      msg << "trial J " << trial_point->J << " (current " << cur.J << ")";
      trace(msg.str());
      return trial_point->J;
    };
    const StepChoice step = choose_step_size(desc.V, mesh, cur.J, evaluate, opt_cfg);
    if (!step.accepted) {
      res.final_quality = step.last_quality;
      if (step.all_invalid) {
        res.status = OptimizationStatus::grid_deterioration;
        res.message = "iteration " + std::to_string(it) + ": every trial step produces a non-positive cell volume";
      } else {
        res.status = OptimizationStatus::converged;
        res.message = "iteration " + std::to_string(it) + ": no acceptable step after " +
                      std::to_string(step.backtracks) + " backtracks";
      }
      return res;
    }

    OptimizationRecord rec;
    rec.iteration = it;
    rec.J = trial_point->J;
    rec.drag = trial_point->drag;
    rec.drag_normalized = trial_point->drag / res.initial_drag;
    rec.g = evaluate_constraints(trial_point->mesh, phase, res.reference);
    rec.g_relative = rec.g.cwiseQuotient(res.scales);
    rec.lambda = lambda;
    rec.eps = step.eps;
    const QualityReport quality = quality_check(trial_point->mesh);
    rec.min_cell_volume = quality.min_cell_volume;
    rec.picard_iterations = desc.iterations();
    rec.backtracks = step.backtracks;
    res.history.push_back(rec);
    if (hooks.on_accept) hooks.on_accept(IterationSnapshot{res.history.back(), mesh, cur.primal, form, desc.V});

    std::ostringstream msg;
    msg << "iteration " << it << ": drag " << rec.drag_normalized << " of initial, eps " << rec.eps << ", backtracks "
        << rec.backtracks << ", max |g|/scale " << rec.g_relative.cwiseAbs().maxCoeff();
    log(msg.str());

    res.mesh = trial_point->mesh;
    res.final_quality = quality;
    cur = std::move(*trial_point);
  }
  res.status = OptimizationStatus::max_iter;
  return res;
}

void write_history_csv(const OptimizationResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "iteration,J,drag,drag_normalized,g_x,g_y,g_v,lambda_x,lambda_y,lambda_v,eps,min_cell_volume,"
         "picard_iterations,backtracks\n"
      << std::setprecision(17);
  for (const auto& r : result.history)
    out << r.iteration << ',' << r.J << ',' << r.drag << ',' << r.drag_normalized << ',' << r.g[0] << ',' << r.g[1]
        << ',' << r.g[2] << ',' << r.lambda[0] << ',' << r.lambda[1] << ',' << r.lambda[2] << ',' << r.eps << ','
        << r.min_cell_volume << ',' << r.picard_iterations << ',' << r.backtracks << '\n';
}

}  // namespace shapeopt
