#include "shapeopt/adjoint.hpp"

#include "fv.hpp"

#include <cmath>

namespace shapeopt {

using fv::Vec;

namespace {

struct AdjointSystem {
  SpMat A;  // 3N x 3N
  SpMat B;  // 3N x 2nB
};

AdjointSystem build_adjoint_system(const fv::Operators& ops, const PrimalState& primal, const FlowConfig& cfg) {
  const int N = ops.N;
  const fv::LinearSystem stokes = fv::build_stokes(ops, Vec2::Zero());
  AdjointSystem sys{stokes.A, stokes.B};
  if (!cfg.convection) return sys;

  const Vec X = fv::pack(primal.v, primal.p);
  const Vec d = fv::pack_boundary(primal.boundary_velocity);
  const fv::Convection conv = fv::convection(ops, X, d, false, nullptr);
  const SpMat CmT = SpMat(ops.inc * (conv.mdot.asDiagonal() * fv::left_cols(conv.upwind, N))).transpose();

  // Cell source -rho |P| (grad w)^T v.
  const auto& geo = ops.mesh->geometry();
  Vec sx(N), sy(N);
  for (int c = 0; c < N; ++c) {
    const double k = -ops.rho_c[c] * geo.cell_volume[c];
    sx[c] = k * primal.v[c].x();
    sy[c] = k * primal.v[c].y();
  }
  const SpMat Sxx = sx.asDiagonal() * ops.gvx, Syx = sy.asDiagonal() * ops.gvx;
  const SpMat Sxy = sx.asDiagonal() * ops.gvy, Syy = sy.asDiagonal() * ops.gvy;

  auto block = [&](const SpMat& M, int r0, int c0, int cb0, std::vector<Eigen::Triplet<double>>& ta,
                   std::vector<Eigen::Triplet<double>>& tb) {
    for (int k = 0; k < M.outerSize(); ++k)
      for (SpMat::InnerIterator it(M, k); it; ++it) {
        const int col = static_cast<int>(it.col());
        if (col < N) ta.emplace_back(r0 + static_cast<int>(it.row()), c0 + col, it.value());
        else tb.emplace_back(r0 + static_cast<int>(it.row()), cb0 + col - N, it.value());
      }
  };
  std::vector<Eigen::Triplet<double>> ta, tb;
  const int nB = ops.nB;
  block(Sxx, 0, 0, 0, ta, tb);
  block(Syx, 0, N, nB, ta, tb);
  block(Sxy, N, 0, 0, ta, tb);
  block(Syy, N, N, nB, ta, tb);
  block(CmT, 0, 0, 0, ta, tb);
  block(CmT, N, N, nB, ta, tb);
  SpMat Ca(3 * N, 3 * N), Cb(3 * N, 2 * nB);
  Ca.setFromTriplets(ta.begin(), ta.end());
  Cb.setFromTriplets(tb.begin(), tb.end());
  sys.A += Ca;
  sys.B += Cb;
  return sys;
}

}  // namespace

AdjointState solve_adjoint(const PrimalState& primal, const ExtensionField& eta, const FluidProps& props,
                           const Mesh& mesh, const FlowConfig& cfg) {
  props.validate();
  cfg.validate();
  const int N = mesh.num_cells(), nB = mesh.num_boundary_faces(), nI = mesh.num_interior_faces();
  if (static_cast<int>(primal.v.size()) != N || static_cast<int>(eta.boundary.size()) != nB)
    throw SolverError("solve_adjoint: primal state or extension does not match the mesh");

  const fv::Operators ops = fv::build_operators(mesh, props, cfg.phase(), cfg.beta_conv,
                                                fv::reference_speed(primal.boundary_velocity, cfg));
  const AdjointSystem sys = build_adjoint_system(ops, primal, cfg);

  AdjointState st;
  st.boundary_w.assign(nB, Vec2::Zero());
  for (int b = 0; b < nB; ++b)
    if (ops.dirichlet[nI + b]) st.boundary_w[b] = -eta.boundary[b];
  const Vec rhs = -(sys.B * fv::pack_boundary(st.boundary_w));

  double m0 = rhs.head(2 * N).norm(), c0 = rhs.tail(N).norm();
  if (m0 == 0.0) m0 = 1.0;
  if (c0 == 0.0) c0 = 1.0;
  auto record = [&](int it, const Vec& r) {
    st.residual_history.push_back({it, r.head(2 * N).norm() / m0, r.tail(N).norm() / c0});
    const auto& h = st.residual_history.back();
    return h.momentum <= cfg.tolerance && h.continuity <= cfg.tolerance;
  };

  Vec W = Vec::Zero(3 * N);
  Vec r = rhs;
  fv::SparseLU lu;
  lu.factorize(sys.A);
  for (int it = 0;; ++it) {
    if (record(it, r)) {
      st.converged = true;
      break;
    }
    if (it >= 3)
      throw ConvergenceError("solve_adjoint: residual stalled above tolerance", st.residual_history);
    W += lu.solve(r);
    r = rhs - sys.A * W;
  }

  st.w.resize(N);
  st.q.resize(N);
  for (int c = 0; c < N; ++c) {
    st.w[c] = Vec2(W[c], W[N + c]);
    st.q[c] = W[2 * N + c];
  }
  st.gamma = recover_gamma(st, primal, mesh, props, cfg);
  return st;
}

std::vector<Vec2> recover_gamma(const AdjointState& adjoint, const PrimalState& primal, const Mesh& mesh,
                                const FluidProps& props, const FlowConfig& cfg) {
  (void)primal;
  const fv::Operators ops = fv::build_operators(mesh, props, cfg.phase(), cfg.beta_conv, 1.0);
  const Vec W = fv::pack(adjoint.w, adjoint.q);
  const auto G = fv::face_velocity_gradients(ops, W, fv::pack_boundary(adjoint.boundary_w));
  const Vec qf = fv::face_pressures(ops, W);
  const auto& geo = mesh.geometry();
  std::vector<Vec2> gamma;
  for (int f : mesh.obstacle_faces()) {
    const Vec2 n = geo.face_normal[f];
    gamma.push_back(-ops.mu_f[f] * (G[f] + G[f].transpose()) * n + qf[f] * n);
  }
  return gamma;
}

}  // namespace shapeopt
