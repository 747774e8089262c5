#pragma once

#include "shapeopt/types.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shapeopt {

enum class PatchKind : std::uint8_t { inlet, outlet, wall, obsD, obsN };

std::string_view to_string(PatchKind kind);
PatchKind parse_patch_kind(std::string_view token);

inline bool is_obstacle(PatchKind k) { return k == PatchKind::obsD || k == PatchKind::obsN; }
// Velocity is prescribed on every patch except the outlet.
inline bool is_dirichlet(PatchKind k) { return k != PatchKind::outlet; }

using Cell = std::array<int, 3>;

struct BoundarySpec {
  std::array<int, 2> v;
  PatchKind kind;
};

// Face vertices are ordered so that (dy, -dx) points out of the owner cell.
// Interior faces come first, boundary faces after them.
struct Face {
  std::array<int, 2> v;
  int owner = -1;
  int neighbor = -1;
  PatchKind kind = PatchKind::wall;  // meaningful for boundary faces only

  bool boundary() const { return neighbor < 0; }
};

struct FaceGeometry {
  std::vector<double> face_area;
  std::vector<Vec2> face_normal;
  std::vector<Vec2> face_centroid;
  std::vector<double> cell_volume;
  std::vector<Vec2> cell_centroid;
};

struct QualityReport {
  double min_cell_volume = 0.0;
  double max_skewness = 0.0;
  int worst_cell = -1;
  bool valid = false;
};

struct Topology;

class Mesh {
 public:
  Mesh() = default;

  // Validates orientation, manifoldness and patch coverage.
  Mesh(std::vector<Vec2> vertices, std::vector<Cell> cells, std::vector<BoundarySpec> boundary);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const;
  int num_faces() const;
  int num_interior_faces() const;
  int num_boundary_faces() const;

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<Cell>& cells() const;
  const std::vector<Face>& faces() const;
  const Face& face(int f) const { return faces()[f]; }
  const std::array<int, 3>& cell_faces(int c) const;

  // Cells sharing at least one vertex with c, excluding c.
  std::span<const int> cell_neighbors(int c) const;
  std::span<const int> vertex_cells(int v) const;
  // Boundary face indices (global numbering) touching vertex v.
  std::span<const int> vertex_boundary_faces(int v) const;

  std::vector<int> patch(PatchKind kind) const;
  std::vector<int> obstacle_faces() const;
  bool has_patch(PatchKind kind) const;

  // Per-vertex flags derived from the boundary tags.
  std::vector<char> vertices_on(PatchKind kind) const;
  // Vertices adjacent to any boundary face that is not obsN; V must vanish there.
  std::vector<char> fixed_vertices() const;

  const FaceGeometry& geometry() const { return *geometry_; }

  // Same connectivity and tags, new coordinates. No validation.
  Mesh with_vertices(std::vector<Vec2> vertices) const;
  // Same geometry, new boundary kinds (indexed by boundary face number).
  Mesh with_boundary_kinds(const std::vector<PatchKind>& kinds) const;

  std::vector<BoundarySpec> boundary_specs() const;

 private:
  std::vector<Vec2> vertices_;
  std::shared_ptr<const Topology> topo_;
  std::shared_ptr<const FaceGeometry> geometry_;
};

FaceGeometry compute_geometry(const Mesh& mesh);

Mesh parse_mesh(std::istream& in);
Mesh load_mesh(const std::string& path);
void write_mesh(const Mesh& mesh, std::ostream& out);
void save_mesh(const Mesh& mesh, const std::string& path);

Mesh apply_deformation(const Mesh& mesh, const VertexField& V, double eps);
QualityReport quality_check(const Mesh& mesh);

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c);
// Smallest edge length incident to each vertex.
std::vector<double> min_incident_edge(const Mesh& mesh);
// Length of the bounding box diagonal.
double domain_diameter(const Mesh& mesh);

}  // namespace shapeopt
