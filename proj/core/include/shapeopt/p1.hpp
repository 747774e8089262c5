#pragma once

#include "shapeopt/mesh.hpp"

#include <Eigen/SparseCore>

namespace shapeopt {

using SpMat = Eigen::SparseMatrix<double>;

// Piecewise-linear vertex functions on the triangulation.

// Gradients of the three barycentric basis functions of cell c (rows ordered as the cell vertices).
Eigen::Matrix<double, 3, 2> p1_basis_gradients(const Mesh& mesh, int c);

// Scalar stiffness sum_c w_c |c| grad(phi_i).grad(phi_j); empty weight means w = 1.
SpMat p1_stiffness(const Mesh& mesh, const ScalarField& cell_weight = {});
// Consistent scalar mass matrix.
SpMat p1_mass(const Mesh& mesh);

// Gradient of a P1 vector field on cell c: rows are components, columns derivatives.
Mat2 p1_gradient(const Mesh& mesh, int c, const VertexField& V);

// Solves K x = 0 at free vertices with x fixed where mask != 0.
VertexField harmonic_extension(const Mesh& mesh, const std::vector<char>& fixed, const VertexField& values);

// Discrete L2 norm sqrt(V^T M V) summed over components.
double p1_l2_norm(const Mesh& mesh, const VertexField& V);
double p1_l2_norm(const SpMat& mass, const VertexField& V);

}  // namespace shapeopt
