#include "shapeopt/p1.hpp"

#include <Eigen/SparseCholesky>

namespace shapeopt {

Eigen::Matrix<double, 3, 2> p1_basis_gradients(const Mesh& mesh, int c) {
  const auto& cv = mesh.cells()[c];
  const auto& x = mesh.vertices();
  const double twice_area = 2.0 * signed_area(x[cv[0]], x[cv[1]], x[cv[2]]);
  Eigen::Matrix<double, 3, 2> g;
  for (int i = 0; i < 3; ++i) {
    const Vec2& a = x[cv[(i + 1) % 3]];
    const Vec2& b = x[cv[(i + 2) % 3]];
    g(i, 0) = (a.y() - b.y()) / twice_area;
    g(i, 1) = (b.x() - a.x()) / twice_area;
  }
  return g;
}

SpMat p1_stiffness(const Mesh& mesh, const ScalarField& cell_weight) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(9 * mesh.num_cells());
  const auto& g = mesh.geometry();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto B = p1_basis_gradients(mesh, c);
    const double w = (cell_weight.empty() ? 1.0 : cell_weight[c]) * g.cell_volume[c];
    const Eigen::Matrix3d k = w * B * B.transpose();
    const auto& cv = mesh.cells()[c];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t.emplace_back(cv[i], cv[j], k(i, j));
  }
  SpMat K(mesh.num_vertices(), mesh.num_vertices());
  K.setFromTriplets(t.begin(), t.end());
  return K;
}

SpMat p1_mass(const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(9 * mesh.num_cells());
  const auto& g = mesh.geometry();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double a = g.cell_volume[c];
    const auto& cv = mesh.cells()[c];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t.emplace_back(cv[i], cv[j], a * (i == j ? 2.0 : 1.0) / 12.0);
  }
  SpMat M(mesh.num_vertices(), mesh.num_vertices());
  M.setFromTriplets(t.begin(), t.end());
  return M;
}

Mat2 p1_gradient(const Mesh& mesh, int c, const VertexField& V) {
  const auto B = p1_basis_gradients(mesh, c);
  const auto& cv = mesh.cells()[c];
  Mat2 G = Mat2::Zero();
  for (int i = 0; i < 3; ++i) G += V[cv[i]] * B.row(i);
  return G;
}

VertexField harmonic_extension(const Mesh& mesh, const std::vector<char>& fixed, const VertexField& values) {
  const int n = mesh.num_vertices();
  std::vector<int> idx(n, -1);
  int nf = 0;
  for (int i = 0; i < n; ++i)
    if (!fixed[i]) idx[i] = nf++;
  VertexField out = values;
  if (nf == 0) return out;
  const SpMat K = p1_stiffness(mesh);
  std::vector<Eigen::Triplet<double>> t;
  Eigen::MatrixX2d rhs = Eigen::MatrixX2d::Zero(nf, 2);
  for (int k = 0; k < K.outerSize(); ++k)
    for (SpMat::InnerIterator it(K, k); it; ++it) {
      const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
      if (idx[r] < 0) continue;
      if (idx[c] >= 0) t.emplace_back(idx[r], idx[c], it.value());
      else rhs.row(idx[r]) -= it.value() * values[c].transpose();
    }
  SpMat Kff(nf, nf);
  Kff.setFromTriplets(t.begin(), t.end());
  Eigen::SimplicialLDLT<SpMat> solver(Kff);
  if (solver.info() != Eigen::Success) throw SolverError("harmonic_extension: factorization failed");
  const Eigen::MatrixX2d x = solver.solve(rhs);
  for (int i = 0; i < n; ++i)
    if (idx[i] >= 0) out[i] = x.row(idx[i]).transpose();
  return out;
}

double p1_l2_norm(const SpMat& mass, const VertexField& V) {
  Eigen::MatrixX2d v(V.size(), 2);
  for (std::size_t i = 0; i < V.size(); ++i) v.row(i) = V[i].transpose();
  return std::sqrt(std::max(0.0, (v.transpose() * (mass * v)).trace()));
}

double p1_l2_norm(const Mesh& mesh, const VertexField& V) { return p1_l2_norm(p1_mass(mesh), V); }

}  // namespace shapeopt
