#include "shapeopt/descent.hpp"

#include "shapeopt/constraints.hpp"
#include "shapeopt/p1.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <fstream>
#include <iomanip>

namespace shapeopt {

void DescentConfig::validate() const {
  if (p_sequence.empty() || p_sequence.front() != 2.0) throw ConfigError("p_sequence must start at 2");
  for (std::size_t i = 1; i < p_sequence.size(); ++i)
    if (!(p_sequence[i] > p_sequence[i - 1])) throw ConfigError("p_sequence must be strictly increasing");
  if (!(omega > 0.0 && omega < 2.0)) throw ConfigError("descent omega must lie in (0, 2)");
  if (!(tol > 0.0)) throw ConfigError("descent tol must be positive");
  if (!(tau > 0.0)) throw ConfigError("descent tau must be positive");
  if (!(eps_reg > 0.0)) throw ConfigError("descent eps_reg must be positive");
  if (max_picard_iters < 1) throw ConfigError("max_picard_iters must be at least 1");
}

namespace {

// Weighted vector Laplacian restricted to the free vertices.
class StepSolver {
 public:
  StepSolver(const Mesh& mesh) : mesh_(mesh), idx_(mesh.num_vertices(), -1) {
    const auto fixed = mesh.fixed_vertices();
    for (int v = 0; v < mesh.num_vertices(); ++v)
      if (!fixed[v]) idx_[v] = nfree_++;
  }

  void factorize(const ScalarField& weight) {
    if (nfree_ == 0) return;
    const SpMat K = p1_stiffness(mesh_, weight);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(K.nonZeros());
    for (int k = 0; k < K.outerSize(); ++k)
      for (SpMat::InnerIterator it(K, k); it; ++it) {
        const int r = idx_[it.row()], c = idx_[it.col()];
        if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
      }
    SpMat Kff(nfree_, nfree_);
    Kff.setFromTriplets(t.begin(), t.end());
    if (!analyzed_) {
      llt_.analyzePattern(Kff);
      analyzed_ = true;
    }
    llt_.factorize(Kff);
    if (llt_.info() != Eigen::Success) throw SolverError("descent: stiffness factorization failed");
  }

  // Solves K V = rhs at the free vertices, V = 0 elsewhere.
  VertexField solve(const VertexField& rhs) const {
    VertexField V(mesh_.num_vertices(), Vec2::Zero());
    if (nfree_ == 0) return V;
    Eigen::MatrixX2d b(nfree_, 2);
    for (int v = 0; v < mesh_.num_vertices(); ++v)
      if (idx_[v] >= 0) b.row(idx_[v]) = rhs[v].transpose();
    const Eigen::MatrixX2d x = llt_.solve(b);
    if (!x.allFinite()) throw SolverError("descent: linear solve produced non-finite values");
    for (int v = 0; v < mesh_.num_vertices(); ++v)
      if (idx_[v] >= 0) V[v] = x.row(idx_[v]).transpose();
    return V;
  }

 private:
  const Mesh& mesh_;
  std::vector<int> idx_;
  int nfree_ = 0;
  bool analyzed_ = false;
  Eigen::SimplicialLDLT<SpMat> llt_;
};

ScalarField p_weight(const Mesh& mesh, const VertexField& V, double p, double eps_reg) {
  if (p == 2.0) return {};
  ScalarField w(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Mat2 G = p1_gradient(mesh, c, V);
    w[c] = std::pow(G.squaredNorm() + eps_reg, 0.5 * (p - 2.0));
  }
  return w;
}

struct Loads {
  VertexField drag;
  std::array<VertexField, kNumConstraints> constraint;

  Loads(const SensitivityForm& form, const Mesh& mesh)
      : drag(drag_load(form, mesh)), constraint(constraint_loads(mesh, form.phase)) {}

  // Right-hand side -J'(Omega) for multiplier weights m = lambda - tau g.
  VertexField rhs(const ConstraintVector& m) const {
    VertexField b(drag.size());
    for (std::size_t v = 0; v < drag.size(); ++v) {
      Vec2 s = drag[v];
      for (int i = 0; i < kNumConstraints; ++i) s += m[i] * constraint[i][v];
      b[v] = -s;
    }
    return b;
  }

  // Largest eigenvalue of S_ij = <B_i, K^-1 B_j>, the multiplier-to-pairing map of the current operator.
  double schur_max(const StepSolver& solver) const {
    Eigen::Matrix3d S;
    for (int j = 0; j < kNumConstraints; ++j) S.col(j) = pairing(solver.solve(constraint[j]));
    const Eigen::Matrix3d sym = 0.5 * (S + S.transpose());
    return Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(sym, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  }

  ConstraintVector pairing(const VertexField& V) const {
    ConstraintVector out;
    for (int i = 0; i < kNumConstraints; ++i) {
      double s = 0.0;
      for (std::size_t v = 0; v < V.size(); ++v) s += constraint[i][v].dot(V[v]);
      out[i] = s;
    }
    return out;
  }
};

double mass_norm_sq(const SpMat& M, const VertexField& V) {
  const double n = p1_l2_norm(M, V);
  return n * n;
}

}  // namespace

VertexField picard_step(const VertexField& V_prev, const SensitivityForm& form, const ConstraintVector& lambda,
                        const Mesh& mesh, double p, double eps_reg) {
  if (!(p >= 2.0)) throw ConfigError("picard_step: p must be at least 2");
  if (static_cast<int>(V_prev.size()) != mesh.num_vertices()) throw Error("picard_step: field size mismatch");
  StepSolver solver(mesh);
  solver.factorize(p_weight(mesh, V_prev, p, eps_reg));
  const Loads loads(form, mesh);
  return solver.solve(loads.rhs(lambda - form.tau * form.g));
}

ConstraintVector update_multipliers(const ConstraintVector& lambda, double tau, const ConstraintVector& pairing) {
  return lambda + tau * pairing;
}

DescentResult solve_descent(const SensitivityForm& form, const Mesh& mesh, const DescentConfig& cfg) {
  cfg.validate();
  const int nv = mesh.num_vertices();
  const Loads loads(form, mesh);
  const SpMat M = p1_mass(mesh);
  StepSolver solver(mesh);

  DescentResult res;
  res.V.assign(nv, Vec2::Zero());
  ConstraintVector lambda = form.lambda;
  const ConstraintVector tau_g = cfg.tau * form.g;
  bool linear_factorized = false;
  double omega_cap = cfg.omega;
  res.omega = cfg.omega;

  for (double p : cfg.p_sequence) {
    bool stage_converged = false;
    for (int k = 1; k <= cfg.max_picard_iters; ++k) {
      bool refactorized = false;
      if (p != 2.0) {
        solver.factorize(p_weight(mesh, res.V, p, cfg.eps_reg));
        refactorized = true;
      } else if (!linear_factorized) {
        solver.factorize({});
        linear_factorized = refactorized = true;
      }
      if (refactorized && cfg.update_multipliers && cfg.adaptive_relaxation) {
        const double s = loads.schur_max(solver);
        omega_cap = std::min(cfg.omega, 0.9 * 4.0 / (cfg.tau * s + 2.0));
      }
      const double omega = cfg.adaptive_relaxation ? omega_cap : cfg.omega;
      if (omega < cfg.omega) ++res.capped_iterations;
      res.omega = std::min(res.omega, omega);

      const VertexField Vt = solver.solve(loads.rhs(lambda - tau_g));
      VertexField Vn(nv);
      for (int v = 0; v < nv; ++v) Vn[v] = res.V[v] + omega * (Vt[v] - res.V[v]);
      const ConstraintVector lambda_new =
          cfg.update_multipliers ? update_multipliers(lambda, cfg.tau, loads.pairing(Vn)) : lambda;

      VertexField dV(nv);
      for (int v = 0; v < nv; ++v) dV[v] = Vn[v] - res.V[v];
      DescentRecord rec;
      rec.p = p;
      rec.k = k;
      rec.res_V = mass_norm_sq(M, dV);
      const ConstraintVector dl = lambda_new - lambda;
      rec.res_lambda_bc = dl.head<kDim>().squaredNorm();
      rec.res_lambda_v = dl[kDim] * dl[kDim];
      rec.R = rec.res_V + rec.res_lambda_bc + rec.res_lambda_v;
      res.residual_history.push_back(rec);

      res.V = std::move(Vn);
      lambda = lambda_new;
      if (rec.R <= cfg.tol) {
        stage_converged = true;
        break;
      }
    }
    if (!stage_converged) {
      res.lambda = lambda;
      res.diagnostic = "descent: p = " + std::to_string(p) + " stage did not reach tol within " +
                       std::to_string(cfg.max_picard_iters) + " Picard iterations";
      return res;
    }
  }
  res.lambda = lambda;
  res.converged = true;
  return res;
}

void write_descent_csv(const DescentResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "p,k,res_V,res_lambda_bc,res_lambda_v,R\n" << std::setprecision(17);
  for (const auto& r : result.residual_history)
    out << r.p << ',' << r.k << ',' << r.res_V << ',' << r.res_lambda_bc << ',' << r.res_lambda_v << ',' << r.R << '\n';
}

}  // namespace shapeopt
