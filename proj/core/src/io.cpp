#include "shapeopt/io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace shapeopt {

namespace {

std::pair<int, int> key(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

void check_size(std::size_t got, std::size_t want, const std::string& name) {
  if (got != want) throw Error("vtk field '" + name + "' has " + std::to_string(got) + " entries, expected " +
                               std::to_string(want));
}

}  // namespace

VtkWriter& VtkWriter::cell_scalar(std::string name, const ScalarField& values) {
  check_size(values.size(), mesh_.num_cells(), name);
  cell_fields_.push_back({std::move(name), values, 1});
  return *this;
}

VtkWriter& VtkWriter::cell_vector(std::string name, const std::vector<Vec2>& values) {
  check_size(values.size(), mesh_.num_cells(), name);
  Field f{std::move(name), {}, 2};
  for (const auto& v : values) f.data.insert(f.data.end(), {v.x(), v.y()});
  cell_fields_.push_back(std::move(f));
  return *this;
}

VtkWriter& VtkWriter::point_scalar(std::string name, const ScalarField& values) {
  check_size(values.size(), mesh_.num_vertices(), name);
  point_fields_.push_back({std::move(name), values, 1});
  return *this;
}

VtkWriter& VtkWriter::point_vector(std::string name, const std::vector<Vec2>& values) {
  check_size(values.size(), mesh_.num_vertices(), name);
  Field f{std::move(name), {}, 2};
  for (const auto& v : values) f.data.insert(f.data.end(), {v.x(), v.y()});
  point_fields_.push_back(std::move(f));
  return *this;
}

void VtkWriter::write(const std::string& path, const std::string& title) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << std::setprecision(17);
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh_.num_vertices() << " double\n";
  for (const auto& x : mesh_.vertices()) out << x.x() << ' ' << x.y() << " 0\n";
  const int nc = mesh_.num_cells();
  out << "CELLS " << nc << ' ' << 4 * nc << '\n';
  for (const auto& c : mesh_.cells()) out << "3 " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
  out << "CELL_TYPES " << nc << '\n';
  for (int c = 0; c < nc; ++c) out << "5\n";

  auto emit = [&](const std::vector<Field>& fields) {
    for (const auto& f : fields) {
      if (f.components == 1) {
        out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
        for (double v : f.data) out << v << '\n';
      } else {
        out << "VECTORS " << f.name << " double\n";
        for (std::size_t i = 0; i < f.data.size(); i += 2) out << f.data[i] << ' ' << f.data[i + 1] << " 0\n";
      }
    }
  };
  if (!cell_fields_.empty()) {
    out << "CELL_DATA " << nc << '\n';
    emit(cell_fields_);
  }
  if (!point_fields_.empty()) {
    out << "POINT_DATA " << mesh_.num_vertices() << '\n';
    emit(point_fields_);
  }
  if (!out) throw Error("error while writing " + path);
}

ScalarField faces_to_vertices(const Mesh& mesh, const std::vector<int>& faces, const std::vector<double>& values) {
  if (faces.size() != values.size()) throw Error("faces_to_vertices: size mismatch");
  ScalarField sum(mesh.num_vertices(), 0.0), count(mesh.num_vertices(), 0.0);
  for (std::size_t k = 0; k < faces.size(); ++k)
    for (int v : mesh.face(faces[k]).v) {
      sum[v] += values[k];
      count[v] += 1.0;
    }
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (count[v] > 0.0) sum[v] /= count[v];
  return sum;
}

void write_face_data(const Mesh& mesh, const std::vector<int>& faces, const std::vector<double>& values,
                     const std::string& path) {
  if (faces.size() != values.size()) throw Error("write_face_data: size mismatch");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "v0,v1,value\n" << std::setprecision(17);
  for (std::size_t k = 0; k < faces.size(); ++k) {
    const auto& fv = mesh.face(faces[k]).v;
    out << fv[0] << ',' << fv[1] << ',' << values[k] << '\n';
  }
}

FaceData read_face_data(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open face data file " + path);
  FaceData data;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (std::isalpha(static_cast<unsigned char>(line[0]))) continue;  // header
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    int a = 0, b = 0;
    double v = 0.0;
    if (!(ls >> a >> b >> v)) throw ParseError(path + ":" + std::to_string(lineno) + ": expected v0,v1,value");
    data.vertices.emplace_back(a, b);
    data.values.push_back(v);
  }
  return data;
}

std::vector<double> match_face_data(const Mesh& mesh, const std::vector<int>& faces, const FaceData& data) {
  std::map<std::pair<int, int>, std::size_t> slot;
  for (std::size_t k = 0; k < faces.size(); ++k) {
    const auto& fv = mesh.face(faces[k]).v;
    slot[key(fv[0], fv[1])] = k;
  }
  std::vector<double> out(faces.size(), 0.0);
  for (std::size_t i = 0; i < data.values.size(); ++i) {
    const auto it = slot.find(key(data.vertices[i].first, data.vertices[i].second));
    if (it == slot.end())
      throw ParseError("face data names vertices (" + std::to_string(data.vertices[i].first) + ", " +
                       std::to_string(data.vertices[i].second) + "), which is not a deformable obstacle face");
    out[it->second] = data.values[i];
  }
  return out;
}

}  // namespace shapeopt
