#include "shapeopt/flow.hpp"

#include "fv.hpp"

#include <cmath>

namespace shapeopt {

using fv::Vec;

void FluidProps::validate() const {
  if (!(rho_water > 0.0 && rho_air > 0.0 && mu_water > 0.0 && mu_air > 0.0))
    throw ConfigError("fluid densities and viscosities must be strictly positive");
  if (rho_air > rho_water) throw ConfigError("rho_air must not exceed rho_water");
}

PhaseField FlowConfig::phase() const {
  if (waterline) return PhaseField::stratified(*waterline, delta_c);
  return PhaseField::single_phase(c_infinity);
}

void FlowConfig::validate() const {
  if (!(relax_v > 0.0 && relax_v <= 1.0 && relax_p > 0.0 && relax_p <= 1.0))
    throw ConfigError("flow relaxation factors must lie in (0, 1]");
  if (!(tolerance > 0.0)) throw ConfigError("flow tolerance must be positive");
  if (!(beta_conv >= 0.0 && beta_conv <= 1.0)) throw ConfigError("beta_conv must lie in [0, 1]");
  if (!(delta_c >= 0.0)) throw ConfigError("delta_c must be non-negative");
  if (!(c_infinity >= 0.0 && c_infinity <= 1.0)) throw ConfigError("c_infinity must lie in [0, 1]");
  if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
}

std::vector<Vec2> default_boundary_velocity(const Mesh& mesh, const FlowConfig& cfg) {
  std::vector<Vec2> vb(mesh.num_boundary_faces(), Vec2::Zero());
  for (int b = 0; b < mesh.num_boundary_faces(); ++b)
    if (mesh.face(mesh.num_interior_faces() + b).kind == PatchKind::inlet) vb[b] = cfg.v_infinity;
  return vb;
}

double fv::reference_speed(const std::vector<Vec2>& vb, const FlowConfig& cfg) {
  double u = cfg.v_infinity.norm();
  for (const auto& v : vb) u = std::max(u, v.norm());
  return u > 0.0 ? u : 1.0;
}

PrimalState solve_primal(const Mesh& mesh, const FluidProps& props, const FlowConfig& cfg,
                         const PrimalState* initial_guess) {
  props.validate();
  cfg.validate();
  const QualityReport q = quality_check(mesh);
  if (!q.valid) throw SolverError("solve_primal: invalid mesh (min cell volume " + std::to_string(q.min_cell_volume) + ")");
  std::vector<Vec2> vb = cfg.boundary_velocity.empty() ? default_boundary_velocity(mesh, cfg) : cfg.boundary_velocity;
  if (static_cast<int>(vb.size()) != mesh.num_boundary_faces()) throw ConfigError("boundary_velocity size mismatch");

  const int N = mesh.num_cells();
  const fv::Operators ops = fv::build_operators(mesh, props, cfg.phase(), cfg.beta_conv, fv::reference_speed(vb, cfg));
  const fv::LinearSystem sys = fv::build_stokes(ops, props.body_force);
  const Vec d = fv::pack_boundary(vb);
  const Vec lin_rhs = sys.B * d - sys.s;

  auto residual = [&](const Vec& X, SpMat* J) {
    Vec R = sys.A * X + lin_rhs;
    if (cfg.convection) {
      SpMat Jc;
      const auto conv = fv::convection(ops, X, d, J != nullptr, J ? &Jc : nullptr);
      R += conv.residual;
      if (J) *J = sys.A + Jc;
    } else if (J) {
      *J = sys.A;
    }
    return R;
  };

  const Vec R0 = residual(Vec::Zero(3 * N), nullptr);
  double m0 = R0.head(2 * N).norm(), c0 = R0.tail(N).norm();
  if (m0 == 0.0) m0 = 1.0;
  if (c0 == 0.0) c0 = 1.0;
  auto measure = [&](const Vec& R) {
    return std::pair{R.head(2 * N).norm() / m0, R.tail(N).norm() / c0};
  };
  auto merit = [&](const Vec& R) {
    const auto [m, c] = measure(R);
    return std::hypot(m, c);
  };

  Vec X;
  fv::SparseLU lu;
  if (initial_guess && static_cast<int>(initial_guess->v.size()) == N) {
    X = fv::pack(initial_guess->v, initial_guess->p);
  } else {
    lu.factorize(sys.A);
    X = lu.solve(-lin_rhs);
  }

  PrimalState st;
  const double relax[3] = {cfg.relax_v, cfg.relax_v, cfg.relax_p};
  for (int it = 0;; ++it) {
    SpMat J;
    const Vec R = residual(X, &J);
    const auto [mres, cres] = measure(R);
    st.residual_history.push_back({it, mres, cres});
    if (mres <= cfg.tolerance && cres <= cfg.tolerance) {
      st.converged = true;
      break;
    }
    if (it >= cfg.max_iterations)
      throw ConvergenceError("solve_primal: no convergence after " + std::to_string(it) + " iterations (momentum " +
                                 std::to_string(mres) + ", continuity " + std::to_string(cres) + ")",
                             st.residual_history);
    lu.factorize(J);
    Vec dX = -lu.solve(R);
    for (int b = 0; b < 3; ++b) dX.segment(b * N, N) *= relax[b];
    const double phi0 = merit(R);
    double alpha = 1.0;
    Vec Xn = X + dX;
    for (int ls = 0; ls < 8 && merit(residual(Xn, nullptr)) > phi0; ++ls) {
      alpha *= 0.5;
      Xn = X + alpha * dX;
    }
    X = std::move(Xn);
  }

  st.v.resize(N);
  st.p.resize(N);
  for (int c = 0; c < N; ++c) {
    st.v[c] = Vec2(X[c], X[N + c]);
    st.p[c] = X[2 * N + c];
  }
  st.c = ops.c_cell;
  st.boundary_velocity = std::move(vb);
  const Vec imbalance = ops.inc * fv::face_flux(ops, X, d);
  st.max_mass_imbalance = imbalance.cwiseAbs().maxCoeff();
  return st;
}

ScalarField static_pressure(const PrimalState& state, const Mesh& mesh, const FluidProps& props) {
  ScalarField out(state.p.size());
  const auto& xc = mesh.geometry().cell_centroid;
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = state.p[c] + props.rho(state.c[c]) * props.gravity.dot(xc[c]);
  return out;
}

ScalarField mass_imbalance(const PrimalState& state, const Mesh& mesh, const FluidProps& props, const FlowConfig& cfg) {
  const fv::Operators ops =
      fv::build_operators(mesh, props, cfg.phase(), cfg.beta_conv, fv::reference_speed(state.boundary_velocity, cfg));
  const Vec r = ops.inc * fv::face_flux(ops, fv::pack(state.v, state.p), fv::pack_boundary(state.boundary_velocity));
  return ScalarField(r.data(), r.data() + r.size());
}

Vec2 compute_force(const PrimalState& state, const Mesh& mesh, const FluidProps& props, const FlowConfig& cfg) {
  const fv::Operators ops = fv::build_operators(mesh, props, cfg.phase(), cfg.beta_conv, 1.0);
  const Vec X = fv::pack(state.v, state.p);
  const Vec d = fv::pack_boundary(state.boundary_velocity);
  const auto G = fv::face_velocity_gradients(ops, X, d);
  const Vec pf = fv::face_pressures(ops, X);
  const auto& geo = mesh.geometry();
  Vec2 F = Vec2::Zero();
  for (int f : mesh.obstacle_faces()) {
    const Vec2 n = geo.face_normal[f];
    F += geo.face_area[f] * (ops.mu_f[f] * (G[f] + G[f].transpose()) * n - pf[f] * n);
  }
  return F;
}

ExtensionField build_extension_eta(const Mesh& mesh) {
  const int nv = mesh.num_vertices();
  std::vector<char> fixed(nv, 0);
  VertexField values(nv, Vec2::Zero());
  for (int f = mesh.num_interior_faces(); f < mesh.num_faces(); ++f)
    for (int v : mesh.face(f).v) fixed[v] = 1;
  for (int f : mesh.obstacle_faces())
    for (int v : mesh.face(f).v) values[v] = Vec2(-1.0, 0.0);
  ExtensionField eta;
  eta.vertex = harmonic_extension(mesh, fixed, values);
  eta.cell.resize(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& cv = mesh.cells()[c];
    eta.cell[c] = (eta.vertex[cv[0]] + eta.vertex[cv[1]] + eta.vertex[cv[2]]) / 3.0;
  }
  eta.boundary.resize(mesh.num_boundary_faces());
  for (int b = 0; b < mesh.num_boundary_faces(); ++b) {
    const auto& fv = mesh.face(mesh.num_interior_faces() + b).v;
    eta.boundary[b] = 0.5 * (eta.vertex[fv[0]] + eta.vertex[fv[1]]);
  }
  return eta;
}

double compute_objective(const PrimalState& state, const ExtensionField& eta, const FluidProps& props, const Mesh& mesh,
                         const FlowConfig& cfg) {
  const fv::Operators ops = fv::build_operators(mesh, props, cfg.phase(), cfg.beta_conv, 1.0);
  const Vec X = fv::pack(state.v, state.p);
  const Vec d = fv::pack_boundary(state.boundary_velocity);
  const auto G = fv::cell_velocity_gradients(ops, X, d);
  const auto& geo = mesh.geometry();
  const int N = mesh.num_cells();
  // Cell-integrated convective flux, the same discrete operator as the momentum equation.
  Vec conv = Vec::Zero(2 * N);
  if (cfg.convection) conv = fv::convection(ops, X, d, false, nullptr).residual.head(2 * N);
  double J = 0.0;
  for (int c = 0; c < N; ++c) {
    const Mat2 Geta = p1_gradient(mesh, c, eta.vertex);
    const Vec2 cc = Vec2(conv[c], conv[N + c]) - geo.cell_volume[c] * props.body_force;
    const double visc = ops.mu_c[c] * ((G[c] + G[c].transpose()).cwiseProduct(Geta)).sum();
    J += cc.dot(eta.cell[c]) + geo.cell_volume[c] * (visc - state.p[c] * Geta.trace());
  }
  return J;
}

}  // namespace shapeopt
