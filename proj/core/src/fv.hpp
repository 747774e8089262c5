#pragma once

// Cell-centred finite-volume operators shared by the primal, adjoint and sensitivity code.
//
// Scalar cell fields are extended by one value per boundary face:
// column j < N is cell j, column N + b is boundary face nI + b.

#include "shapeopt/flow.hpp"
#include "shapeopt/p1.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace shapeopt::fv {

using Vec = Eigen::VectorXd;
using Triplets = std::vector<Eigen::Triplet<double>>;

struct GradEntry {
  int col;
  Vec2 coef;
};
using GradStencil = std::vector<GradEntry>;

struct Operators {
  const Mesh* mesh = nullptr;
  int N = 0, nF = 0, nI = 0, nB = 0;
  ScalarField c_cell, c_face, rho_c, mu_c, rho_f, mu_f;
  std::vector<char> outlet;   // per face
  std::vector<char> dirichlet;  // per face; boundary faces with prescribed velocity
  bool pin_pressure = false;
  double beta = 1.0;

  std::vector<GradStencil> grad_v;  // cells, extended columns
  std::vector<GradStencil> grad_p;  // cells, cell columns only

  SpMat inc;          // N x nF, +1 owner, -1 neighbour
  SpMat fval_v;       // nF x (N+nB)
  SpMat fval_p;       // nF x N
  SpMat fgx, fgy;     // nF x (N+nB) face gradient of a velocity component
  SpMat rown, rnbr;   // nF x (N+nB) upwind reconstructions from each side
  SpMat pstab;        // nF x N pressure part of the face volume flux
  SpMat flux_u, flux_v;  // nF x (N+nB) velocity part of the face volume flux
  SpMat gvx, gvy;     // N x (N+nB)
};

Operators build_operators(const Mesh& mesh, const FluidProps& props, const PhaseField& phase, double beta,
                          double u_ref);

// Linear (Stokes) part of the residual: R = A X + B d - s, with X = [u; v; p] and d = [ub; vb].
struct LinearSystem {
  SpMat A;  // 3N x 3N
  SpMat B;  // 3N x 2nB
  Vec s;    // 3N
};

// Velocity scale used by the pressure stabilisation.
double reference_speed(const std::vector<Vec2>& boundary_velocity, const FlowConfig& cfg);

LinearSystem build_stokes(const Operators& ops, const Vec2& body_force);

Vec extend(const Eigen::Ref<const Vec>& cells, const Eigen::Ref<const Vec>& bdata);

// Convection contributions for the state X with boundary data d.
struct Convection {
  Vec mdot;      // face mass flux
  Vec residual;  // 3N (zero continuity rows)
  SpMat upwind;  // nF x (N+nB) selected reconstruction
};

Convection convection(const Operators& ops, const Vec& X, const Vec& d, bool with_jacobian, SpMat* jacobian);

// Face volume flux U_f for state X and data d.
Vec face_flux(const Operators& ops, const Vec& X, const Vec& d);

SpMat left_cols(const SpMat& M, int n);
SpMat right_cols(const SpMat& M, int from);

Vec pack(const CellVectorField& v, const ScalarField& p);
Vec pack_boundary(const std::vector<Vec2>& vb);

// Velocity gradient (rows: components, cols: derivatives) per cell, with boundary data.
std::vector<Mat2> cell_velocity_gradients(const Operators& ops, const Vec& X, const Vec& d);
// Face velocity gradients for every face.
std::vector<Mat2> face_velocity_gradients(const Operators& ops, const Vec& X, const Vec& d);
Vec face_pressures(const Operators& ops, const Vec& X);

// Solves a sparse unsymmetric system; throws SolverError on failure.
class SparseLU {
 public:
  SparseLU();
  ~SparseLU();
  SparseLU(const SparseLU&) = delete;
  SparseLU& operator=(const SparseLU&) = delete;
  void factorize(const SpMat& A);
  Vec solve(const Vec& b) const;

 private:
  struct Impl;
  Impl* impl_;
};

}  // namespace shapeopt::fv
