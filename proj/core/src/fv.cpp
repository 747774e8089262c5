#include "fv.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <umfpack.h>

#include <algorithm>
#include <atomic>
#include <memory>
#include <cmath>
#include <string>

namespace shapeopt::fv {

namespace {

// Weighted least-squares gradient from a set of (column, offset) samples around a centre cell.
GradStencil lsq_stencil(int centre, const std::vector<std::pair<int, Vec2>>& pts) {
  Mat2 M = Mat2::Zero();
  for (const auto& [col, dx] : pts) M += dx * dx.transpose() / dx.squaredNorm();
  Mat2 Minv;
  const double tr = M.trace();
  if (tr > 0.0 && M.determinant() > 1e-10 * tr * tr) {
    Minv = M.inverse();
  } else {
    Eigen::SelfAdjointEigenSolver<Mat2> es(M);
    Minv.setZero();
    for (int k = 0; k < 2; ++k) {
      const double lam = es.eigenvalues()(k);
      if (lam > 1e-10 * std::max(tr, 1e-300)) Minv += es.eigenvectors().col(k) * es.eigenvectors().col(k).transpose() / lam;
    }
  }
  GradStencil s;
  s.reserve(pts.size() + 1);
  Vec2 sum = Vec2::Zero();
  for (const auto& [col, dx] : pts) {
    const Vec2 c = Minv * dx / dx.squaredNorm();
    s.push_back({col, c});
    sum += c;
  }
  s.push_back({centre, -sum});
  return s;
}

void add_dot(Triplets& t, int row, const GradStencil& g, const Vec2& r, double scale) {
  for (const auto& e : g) t.emplace_back(row, e.col, scale * e.coef.dot(r));
}

SpMat from_triplets(int rows, int cols, const Triplets& t) {
  SpMat M(rows, cols);
  M.setFromTriplets(t.begin(), t.end());
  return M;
}

// Copies M into triplets at an offset; columns >= split go to the second list shifted by -split.
void put(Triplets& a, Triplets* b, const SpMat& M, int r0, int ca, int split, int cb) {
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it) {
      const int c = static_cast<int>(it.col());
      if (c < split) a.emplace_back(r0 + static_cast<int>(it.row()), ca + c, it.value());
      else if (b) b->emplace_back(r0 + static_cast<int>(it.row()), cb + c - split, it.value());
    }
}

}  // namespace

Operators build_operators(const Mesh& mesh, const FluidProps& props, const PhaseField& phase, double beta,
                          double u_ref) {
  Operators ops;
  ops.mesh = &mesh;
  ops.N = mesh.num_cells();
  ops.nF = mesh.num_faces();
  ops.nI = mesh.num_interior_faces();
  ops.nB = mesh.num_boundary_faces();
  ops.beta = beta;
  const int N = ops.N, nF = ops.nF, nI = ops.nI, nB = ops.nB;
  const auto& geo = mesh.geometry();
  const auto& xc = geo.cell_centroid;
  const auto& xf = geo.face_centroid;

  ops.c_cell = prescribe_concentration(mesh, phase);
  ops.c_face = face_concentration(mesh, phase);
  ops.rho_c.resize(N);
  ops.mu_c.resize(N);
  for (int c = 0; c < N; ++c) {
    ops.rho_c[c] = props.rho(ops.c_cell[c]);
    ops.mu_c[c] = props.mu(ops.c_cell[c]);
  }
  ops.rho_f.resize(nF);
  ops.mu_f.resize(nF);
  ops.outlet.assign(nF, 0);
  ops.dirichlet.assign(nF, 0);
  for (int f = 0; f < nF; ++f) {
    ops.rho_f[f] = props.rho(ops.c_face[f]);
    ops.mu_f[f] = props.mu(ops.c_face[f]);
    if (f >= nI) {
      const PatchKind k = mesh.face(f).kind;
      ops.outlet[f] = k == PatchKind::outlet;
      ops.dirichlet[f] = is_dirichlet(k);
    }
  }
  ops.pin_pressure = !mesh.has_patch(PatchKind::outlet);

  ops.grad_v.resize(N);
  ops.grad_p.resize(N);
  std::vector<std::pair<int, Vec2>> pts;
  std::vector<int> bfaces;
  for (int P = 0; P < N; ++P) {
    pts.clear();
    for (int j : mesh.cell_neighbors(P)) pts.emplace_back(j, xc[j] - xc[P]);
    ops.grad_p[P] = lsq_stencil(P, pts);
    bfaces.clear();
    for (int v : mesh.cells()[P])
      for (int f : mesh.vertex_boundary_faces(v))
        if (ops.dirichlet[f]) bfaces.push_back(f);
    std::sort(bfaces.begin(), bfaces.end());
    bfaces.erase(std::unique(bfaces.begin(), bfaces.end()), bfaces.end());
    for (int f : bfaces) pts.emplace_back(N + f - nI, xf[f] - xc[P]);
    ops.grad_v[P] = lsq_stencil(P, pts);
  }

  Triplets tv, tp, tgx, tgy, tro, trn, tst, tinc;
  for (int f = 0; f < nF; ++f) {
    const Face& face = mesh.face(f);
    const int P = face.owner;
    const Vec2 n = geo.face_normal[f];
    const double A = geo.face_area[f];
    const Vec2 rP = xf[f] - xc[P];
    tinc.emplace_back(P, f, 1.0);
    if (!face.boundary()) {
      const int Q = face.neighbor;
      tinc.emplace_back(Q, f, -1.0);
      const Vec2 rQ = xf[f] - xc[Q];
      const Vec2 d = xc[Q] - xc[P];
      const double dn = d.dot(n);
      double g = dn > 0.0 ? (xc[Q] - xf[f]).dot(n) / dn : rQ.norm() / (rP.norm() + rQ.norm());
      g = std::clamp(g, 0.0, 1.0);

      tv.emplace_back(f, P, g);
      tv.emplace_back(f, Q, 1.0 - g);
      add_dot(tv, f, ops.grad_v[P], rP, g);
      add_dot(tv, f, ops.grad_v[Q], rQ, 1.0 - g);
      tp.emplace_back(f, P, g);
      tp.emplace_back(f, Q, 1.0 - g);
      add_dot(tp, f, ops.grad_p[P], rP, g);
      add_dot(tp, f, ops.grad_p[Q], rQ, 1.0 - g);

      const Vec2 t = d / d.squaredNorm();
      for (const auto& e : ops.grad_v[P]) {
        const double cd = e.coef.dot(d);
        tgx.emplace_back(f, e.col, g * (e.coef.x() - cd * t.x()));
        tgy.emplace_back(f, e.col, g * (e.coef.y() - cd * t.y()));
      }
      for (const auto& e : ops.grad_v[Q]) {
        const double cd = e.coef.dot(d);
        tgx.emplace_back(f, e.col, (1.0 - g) * (e.coef.x() - cd * t.x()));
        tgy.emplace_back(f, e.col, (1.0 - g) * (e.coef.y() - cd * t.y()));
      }
      tgx.emplace_back(f, Q, t.x());
      tgx.emplace_back(f, P, -t.x());
      tgy.emplace_back(f, Q, t.y());
      tgy.emplace_back(f, P, -t.y());

      tro.emplace_back(f, P, 1.0);
      add_dot(tro, f, ops.grad_v[P], rP, beta);
      trn.emplace_back(f, Q, 1.0);
      add_dot(trn, f, ops.grad_v[Q], rQ, beta);

      const double D = d.squaredNorm() / (4.0 * ops.mu_f[f] + ops.rho_f[f] * u_ref * d.norm());
      const double k = -D * A * dn / d.squaredNorm();
      tst.emplace_back(f, Q, k);
      tst.emplace_back(f, P, -k);
      add_dot(tst, f, ops.grad_p[P], d, -k * g);
      add_dot(tst, f, ops.grad_p[Q], d, -k * (1.0 - g));
    } else {
      const int b = N + f - nI;
      tp.emplace_back(f, P, 1.0);
      add_dot(tp, f, ops.grad_p[P], rP, 1.0);
      if (ops.dirichlet[f]) {
        tv.emplace_back(f, b, 1.0);
        const Vec2 t = rP / rP.squaredNorm();
        for (const auto& e : ops.grad_v[P]) {
          const double cd = e.coef.dot(rP);
          tgx.emplace_back(f, e.col, e.coef.x() - cd * t.x());
          tgy.emplace_back(f, e.col, e.coef.y() - cd * t.y());
        }
        tgx.emplace_back(f, b, t.x());
        tgx.emplace_back(f, P, -t.x());
        tgy.emplace_back(f, b, t.y());
        tgy.emplace_back(f, P, -t.y());
        tro.emplace_back(f, b, 1.0);
        trn.emplace_back(f, b, 1.0);
      } else {
        tv.emplace_back(f, P, 1.0);
        add_dot(tv, f, ops.grad_v[P], rP, 1.0);
        for (const auto& e : ops.grad_v[P]) {
          tgx.emplace_back(f, e.col, e.coef.x());
          tgy.emplace_back(f, e.col, e.coef.y());
        }
        tro.emplace_back(f, P, 1.0);
        add_dot(tro, f, ops.grad_v[P], rP, beta);
        trn.emplace_back(f, P, 1.0);
        add_dot(trn, f, ops.grad_v[P], rP, beta);
      }
    }
  }
  const int NE = N + nB;
  ops.inc = from_triplets(N, nF, tinc);
  ops.fval_v = from_triplets(nF, NE, tv);
  ops.fval_p = from_triplets(nF, N, tp);
  ops.fgx = from_triplets(nF, NE, tgx);
  ops.fgy = from_triplets(nF, NE, tgy);
  ops.rown = from_triplets(nF, NE, tro);
  ops.rnbr = from_triplets(nF, NE, trn);
  ops.pstab = from_triplets(nF, N, tst);

  Vec Anx(nF), Any(nF);
  for (int f = 0; f < nF; ++f) {
    Anx[f] = geo.face_area[f] * geo.face_normal[f].x();
    Any[f] = geo.face_area[f] * geo.face_normal[f].y();
  }
  ops.flux_u = Anx.asDiagonal() * ops.fval_v;
  ops.flux_v = Any.asDiagonal() * ops.fval_v;

  Triplets tgvx, tgvy;
  for (int P = 0; P < N; ++P)
    for (const auto& e : ops.grad_v[P]) {
      tgvx.emplace_back(P, e.col, e.coef.x());
      tgvy.emplace_back(P, e.col, e.coef.y());
    }
  ops.gvx = from_triplets(N, NE, tgvx);
  ops.gvy = from_triplets(N, NE, tgvy);
  return ops;
}

LinearSystem build_stokes(const Operators& ops, const Vec2& body_force) {
  const int N = ops.N, nF = ops.nF, nB = ops.nB;
  const auto& geo = ops.mesh->geometry();
  Vec mnx(nF), mny(nF), pnx(nF), pny(nF);
  for (int f = 0; f < nF; ++f) {
    const double keep = ops.outlet[f] ? 0.0 : 1.0;
    const double mA = keep * ops.mu_f[f] * geo.face_area[f];
    mnx[f] = -mA * geo.face_normal[f].x();
    mny[f] = -mA * geo.face_normal[f].y();
    pnx[f] = keep * geo.face_area[f] * geo.face_normal[f].x();
    pny[f] = keep * geo.face_area[f] * geo.face_normal[f].y();
  }
  const SpMat& I = ops.inc;
  const SpMat Muu = I * (Vec(2.0 * mnx).asDiagonal() * ops.fgx + mny.asDiagonal() * ops.fgy);
  const SpMat Muv = I * (mny.asDiagonal() * ops.fgx);
  const SpMat Mup = I * (pnx.asDiagonal() * ops.fval_p);
  const SpMat Mvu = I * (mnx.asDiagonal() * ops.fgy);
  const SpMat Mvv = I * (mnx.asDiagonal() * ops.fgx + Vec(2.0 * mny).asDiagonal() * ops.fgy);
  const SpMat Mvp = I * (pny.asDiagonal() * ops.fval_p);
  SpMat Cu = I * ops.flux_u;
  SpMat Cv = I * ops.flux_v;
  SpMat Cp = I * ops.pstab;
  if (ops.pin_pressure) {
    auto drop_row0 = [](SpMat& M) { M.prune([](Eigen::Index r, Eigen::Index, double) { return r != 0; }); };
    drop_row0(Cu);
    drop_row0(Cv);
    drop_row0(Cp);
  }

  Triplets ta, tb;
  put(ta, &tb, Muu, 0, 0, N, 0);
  put(ta, &tb, Muv, 0, N, N, nB);
  put(ta, nullptr, Mup, 0, 2 * N, N, 0);
  put(ta, &tb, Mvu, N, 0, N, 0);
  put(ta, &tb, Mvv, N, N, N, nB);
  put(ta, nullptr, Mvp, N, 2 * N, N, 0);
  put(ta, &tb, Cu, 2 * N, 0, N, 0);
  put(ta, &tb, Cv, 2 * N, N, N, nB);
  put(ta, nullptr, Cp, 2 * N, 2 * N, N, 0);
  if (ops.pin_pressure) ta.emplace_back(2 * N, 2 * N, 1.0);

  LinearSystem sys;
  sys.A = from_triplets(3 * N, 3 * N, ta);
  sys.B = from_triplets(3 * N, 2 * nB, tb);
  sys.s = Vec::Zero(3 * N);
  for (int c = 0; c < N; ++c) {
    sys.s[c] = body_force.x() * geo.cell_volume[c];
    sys.s[N + c] = body_force.y() * geo.cell_volume[c];
  }
  return sys;
}

Vec extend(const Eigen::Ref<const Vec>& cells, const Eigen::Ref<const Vec>& bdata) {
  Vec e(cells.size() + bdata.size());
  e << cells, bdata;
  return e;
}

SpMat left_cols(const SpMat& M, int n) { return SpMat(M.leftCols(n)); }
SpMat right_cols(const SpMat& M, int from) { return SpMat(M.rightCols(M.cols() - from)); }

Vec face_flux(const Operators& ops, const Vec& X, const Vec& d) {
  const int N = ops.N, nB = ops.nB;
  const Vec ue = extend(X.segment(0, N), d.segment(0, nB));
  const Vec ve = extend(X.segment(N, N), d.segment(nB, nB));
  return ops.flux_u * ue + ops.flux_v * ve + ops.pstab * X.segment(2 * N, N);
}

Convection convection(const Operators& ops, const Vec& X, const Vec& d, bool with_jacobian, SpMat* jacobian) {
  const int N = ops.N, nF = ops.nF, nB = ops.nB;
  const Vec ue = extend(X.segment(0, N), d.segment(0, nB));
  const Vec ve = extend(X.segment(N, N), d.segment(nB, nB));
  const Vec U = ops.flux_u * ue + ops.flux_v * ve + ops.pstab * X.segment(2 * N, N);
  Convection out;
  out.mdot = Eigen::Map<const Vec>(ops.rho_f.data(), nF).cwiseProduct(U);
  Vec pos(nF), neg(nF);
  for (int f = 0; f < nF; ++f) {
    pos[f] = out.mdot[f] >= 0.0 ? 1.0 : 0.0;
    neg[f] = 1.0 - pos[f];
  }
  out.upwind = pos.asDiagonal() * ops.rown + neg.asDiagonal() * ops.rnbr;
  const Vec uup = out.upwind * ue;
  const Vec vup = out.upwind * ve;
  out.residual = Vec::Zero(3 * N);
  out.residual.segment(0, N) = ops.inc * out.mdot.cwiseProduct(uup);
  out.residual.segment(N, N) = ops.inc * out.mdot.cwiseProduct(vup);
  if (with_jacobian && jacobian) {
    const Eigen::Map<const Vec> rho(ops.rho_f.data(), nF);
    const SpMat Cm = ops.inc * (out.mdot.asDiagonal() * left_cols(out.upwind, N));
    const SpMat FU = left_cols(ops.flux_u, N), FV = left_cols(ops.flux_v, N);
    const Vec ru = rho.cwiseProduct(uup), rv = rho.cwiseProduct(vup);
    const SpMat Iu = ops.inc * ru.asDiagonal();
    const SpMat Iv = ops.inc * rv.asDiagonal();
    Triplets t;
    put(t, nullptr, SpMat(Cm + Iu * FU), 0, 0, N, 0);
    put(t, nullptr, SpMat(Iu * FV), 0, N, N, 0);
    put(t, nullptr, SpMat(Iu * ops.pstab), 0, 2 * N, N, 0);
    put(t, nullptr, SpMat(Iv * FU), N, 0, N, 0);
    put(t, nullptr, SpMat(Cm + Iv * FV), N, N, N, 0);
    put(t, nullptr, SpMat(Iv * ops.pstab), N, 2 * N, N, 0);
    *jacobian = from_triplets(3 * N, 3 * N, t);
  }
  return out;
}

Vec pack(const CellVectorField& v, const ScalarField& p) {
  const int N = static_cast<int>(v.size());
  Vec X(3 * N);
  for (int c = 0; c < N; ++c) {
    X[c] = v[c].x();
    X[N + c] = v[c].y();
    X[2 * N + c] = p[c];
  }
  return X;
}

Vec pack_boundary(const std::vector<Vec2>& vb) {
  const int nB = static_cast<int>(vb.size());
  Vec d(2 * nB);
  for (int b = 0; b < nB; ++b) {
    d[b] = vb[b].x();
    d[nB + b] = vb[b].y();
  }
  return d;
}

std::vector<Mat2> cell_velocity_gradients(const Operators& ops, const Vec& X, const Vec& d) {
  const int N = ops.N, nB = ops.nB;
  const Vec ue = extend(X.segment(0, N), d.segment(0, nB));
  const Vec ve = extend(X.segment(N, N), d.segment(nB, nB));
  const Vec ux = ops.gvx * ue, uy = ops.gvy * ue, vx = ops.gvx * ve, vy = ops.gvy * ve;
  std::vector<Mat2> G(N);
  for (int c = 0; c < N; ++c) G[c] << ux[c], uy[c], vx[c], vy[c];
  return G;
}

std::vector<Mat2> face_velocity_gradients(const Operators& ops, const Vec& X, const Vec& d) {
  const int N = ops.N, nB = ops.nB;
  const Vec ue = extend(X.segment(0, N), d.segment(0, nB));
  const Vec ve = extend(X.segment(N, N), d.segment(nB, nB));
  const Vec ux = ops.fgx * ue, uy = ops.fgy * ue, vx = ops.fgx * ve, vy = ops.fgy * ve;
  std::vector<Mat2> G(ops.nF);
  for (int f = 0; f < ops.nF; ++f) G[f] << ux[f], uy[f], vx[f], vy[f];
  return G;
}

Vec face_pressures(const Operators& ops, const Vec& X) { return ops.fval_p * X.segment(2 * ops.N, ops.N); }

// UMFPACK is used when its solves check out. Some BLAS builds return wrong dense kernels on CPUs they
// misdetect; the first failed residual check switches the process to Eigen's LU.
namespace {
std::atomic<bool> umfpack_unreliable{false};
}

struct SparseLU::Impl {
  int n = 0;
  double anorm = 0.0;
  SpMat A;
  std::vector<int> Ap, Ai;
  std::vector<double> Ax;
  void* symbolic = nullptr;
  void* numeric = nullptr;
  double control[UMFPACK_CONTROL];
  std::unique_ptr<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>> fallback;

  Impl() { umfpack_di_defaults(control); }
  ~Impl() { release(); }
  void release() {
    if (numeric) umfpack_di_free_numeric(&numeric);
    if (symbolic) umfpack_di_free_symbolic(&symbolic);
    numeric = symbolic = nullptr;
    fallback.reset();
  }
  bool factorize_umfpack() {
    if (umfpack_di_symbolic(n, n, Ap.data(), Ai.data(), Ax.data(), &symbolic, control, nullptr) != UMFPACK_OK) return false;
    return umfpack_di_numeric(Ap.data(), Ai.data(), Ax.data(), symbolic, &numeric, control, nullptr) == UMFPACK_OK;
  }
  void factorize_eigen() {
    if (numeric) umfpack_di_free_numeric(&numeric);
    if (symbolic) umfpack_di_free_symbolic(&symbolic);
    numeric = symbolic = nullptr;
    fallback = std::make_unique<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>>();
    fallback->compute(A);
    if (fallback->info() != Eigen::Success) throw SolverError("sparse LU factorization failed (singular matrix)");
  }
  bool solve_umfpack(const Vec& b, Vec& x) const {
    x.resize(n);
    return umfpack_di_solve(UMFPACK_A, Ap.data(), Ai.data(), Ax.data(), x.data(), b.data(), numeric, control,
                            nullptr) == UMFPACK_OK;
  }
};

SparseLU::SparseLU() : impl_(new Impl) {}
SparseLU::~SparseLU() { delete impl_; }

void SparseLU::factorize(const SpMat& A) {
  Impl& m = *impl_;
  m.release();
  m.A = A;
  m.A.makeCompressed();
  m.n = static_cast<int>(m.A.rows());
  m.anorm = (m.A.cwiseAbs() * Vec::Ones(m.n)).maxCoeff();
  if (umfpack_unreliable.load()) return m.factorize_eigen();
  m.Ap.assign(m.A.outerIndexPtr(), m.A.outerIndexPtr() + m.n + 1);
  m.Ai.assign(m.A.innerIndexPtr(), m.A.innerIndexPtr() + m.A.nonZeros());
  m.Ax.assign(m.A.valuePtr(), m.A.valuePtr() + m.A.nonZeros());
  if (!m.factorize_umfpack()) m.factorize_eigen();
}

Vec SparseLU::solve(const Vec& b) const {
  Impl& m = *impl_;
  if (!m.numeric && !m.fallback) throw SolverError("sparse LU solve before factorization");
  Vec x;
  if (m.numeric) {
    if (b.isZero(0.0)) return Vec::Zero(m.n);
    if (m.solve_umfpack(b, x) && x.allFinite() &&
        (m.A * x - b).lpNorm<Eigen::Infinity>() <= 1e-10 * (m.anorm * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>()))
      return x;
    umfpack_unreliable.store(true);
    m.factorize_eigen();
  }
  x = m.fallback->solve(b);
  if (!x.allFinite()) throw SolverError("sparse LU solve produced non-finite values");
  return x;
}

}  // namespace shapeopt::fv
