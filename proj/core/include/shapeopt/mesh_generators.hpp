#pragma once

#include "shapeopt/mesh.hpp"

namespace shapeopt {

// Two triangles on [0,1]^2, all boundary faces tagged `kind`.
Mesh unit_square_mesh(PatchKind kind = PatchKind::wall);

struct RectangleParams {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  int nx = 1, ny = 1;
  PatchKind left = PatchKind::wall;
  PatchKind right = PatchKind::wall;
  PatchKind bottom = PatchKind::wall;
  PatchKind top = PatchKind::wall;
};

// Uniform structured triangulation; quads are split along alternating diagonals.
Mesh rectangle_mesh(const RectangleParams& p);

struct AnnulusParams {
  double r_inner = 0.5, r_outer = 2.0;
  int n_theta = 64, n_radial = 16;
  PatchKind inner = PatchKind::obsN;
  PatchKind outer = PatchKind::wall;
};

Mesh annulus_mesh(const AnnulusParams& p);

// Cylinder centred at the origin inside the channel [x_min,x_max] x [-y_half,y_half].
// An O-grid around the cylinder is blended into a square of half-width box_half and
// surrounded by a graded Cartesian block. The mesh is mirror symmetric about y = 0.
struct CylinderChannelParams {
  double radius = 0.5;
  double box_half = 1.5;
  double x_min = -5.0, x_max = 15.0, y_half = 4.0;
  int n_theta = 64;  // multiple of 8
  int n_radial = 16;
  double first_layer = 0.02;
  int n_upstream = 10, n_downstream = 30, n_side = 8;
  PatchKind side = PatchKind::inlet;
  PatchKind obstacle = PatchKind::obsN;

  // level 0 is the coarse mesh (~5k cells); each level doubles the counts in both directions.
  static CylinderChannelParams level(int level);
};

Mesh cylinder_channel_mesh(const CylinderChannelParams& p);

// Graded 1D node positions: n cells from a to b, first cell size h0 at a, geometric growth.
std::vector<double> graded_nodes(double a, double b, int n, double h0);

}  // namespace shapeopt
