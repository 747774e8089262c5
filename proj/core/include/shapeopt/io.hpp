#pragma once

#include "shapeopt/mesh.hpp"

#include <string>
#include <utility>
#include <vector>

namespace shapeopt {

// Legacy ASCII VTK unstructured grid of the triangulation (z = 0).
class VtkWriter {
 public:
  explicit VtkWriter(const Mesh& mesh) : mesh_(mesh) {}

  VtkWriter& cell_scalar(std::string name, const ScalarField& values);
  VtkWriter& cell_vector(std::string name, const std::vector<Vec2>& values);
  VtkWriter& point_scalar(std::string name, const ScalarField& values);
  VtkWriter& point_vector(std::string name, const std::vector<Vec2>& values);

  void write(const std::string& path, const std::string& title = "shapeopt") const;

 private:
  struct Field {
    std::string name;
    std::vector<double> data;  // 1 or 2 components per entry
    int components = 1;
  };
  const Mesh& mesh_;
  std::vector<Field> cell_fields_, point_fields_;
};

// Vertex average of per-face values on the listed boundary faces; zero on other vertices.
ScalarField faces_to_vertices(const Mesh& mesh, const std::vector<int>& faces, const std::vector<double>& values);

// Per-boundary-face data keyed by the face's vertex pair: CSV "v0,v1,value".
struct FaceData {
  std::vector<std::pair<int, int>> vertices;
  std::vector<double> values;
};

void write_face_data(const Mesh& mesh, const std::vector<int>& faces, const std::vector<double>& values,
                     const std::string& path);
FaceData read_face_data(const std::string& path);

// Values of `data` on `faces` (in that order); faces absent from the file get zero.
// Throws ParseError if the file names a vertex pair that is not one of `faces`.
std::vector<double> match_face_data(const Mesh& mesh, const std::vector<int>& faces, const FaceData& data);

}  // namespace shapeopt
