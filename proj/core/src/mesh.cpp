#include "shapeopt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace shapeopt {

struct Topology {
  std::vector<Cell> cells;
  std::vector<Face> faces;
  int n_interior = 0;
  std::vector<std::array<int, 3>> cell_faces;
  std::vector<int> cell_nbr_ptr, cell_nbr;
  std::vector<int> vcell_ptr, vcell;
  std::vector<int> vbface_ptr, vbface;
};

namespace {

constexpr std::array<std::string_view, 5> kPatchNames = {"inlet", "outlet", "wall", "obsD", "obsN"};

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

template <class Get>
void build_csr(int n_rows, int n_items, Get&& rows_of, std::vector<int>& ptr, std::vector<int>& idx) {
  ptr.assign(n_rows + 1, 0);
  for (int i = 0; i < n_items; ++i)
    for (int r : rows_of(i)) ++ptr[r + 1];
  for (int r = 0; r < n_rows; ++r) ptr[r + 1] += ptr[r];
  idx.resize(ptr.back());
  std::vector<int> fill(ptr.begin(), ptr.end() - 1);
  for (int i = 0; i < n_items; ++i)
    for (int r : rows_of(i)) idx[fill[r]++] = i;
}

std::shared_ptr<const FaceGeometry> make_geometry(const std::vector<Vec2>& x, const Topology& t) {
  auto g = std::make_shared<FaceGeometry>();
  const auto nf = t.faces.size();
  const auto nc = t.cells.size();
  g->face_area.resize(nf);
  g->face_normal.resize(nf);
  g->face_centroid.resize(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    const Vec2& a = x[t.faces[f].v[0]];
    const Vec2& b = x[t.faces[f].v[1]];
    const Vec2 d = b - a;
    const double len = d.norm();
    g->face_area[f] = len;
    g->face_normal[f] = len > 0.0 ? Vec2(d.y() / len, -d.x() / len) : Vec2::Zero();
    g->face_centroid[f] = 0.5 * (a + b);
  }
  g->cell_volume.resize(nc);
  g->cell_centroid.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& cv = t.cells[c];
    g->cell_volume[c] = signed_area(x[cv[0]], x[cv[1]], x[cv[2]]);
    g->cell_centroid[c] = (x[cv[0]] + x[cv[1]] + x[cv[2]]) / 3.0;
  }
  return g;
}

}  // namespace

std::string_view to_string(PatchKind kind) { return kPatchNames[static_cast<int>(kind)]; }

PatchKind parse_patch_kind(std::string_view token) {
  for (std::size_t i = 0; i < kPatchNames.size(); ++i)
    if (kPatchNames[i] == token) return static_cast<PatchKind>(i);
  throw ParseError("unknown patch kind '" + std::string(token) + "'");
}

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

Mesh::Mesh(std::vector<Vec2> vertices, std::vector<Cell> cells, std::vector<BoundarySpec> boundary)
    : vertices_(std::move(vertices)) {
  auto topo = std::make_shared<Topology>();
  const int nv = num_vertices();
  const int nc = static_cast<int>(cells.size());

  for (int c = 0; c < nc; ++c) {
    for (int v : cells[c])
      if (v < 0 || v >= nv) throw TopologyError("cell " + std::to_string(c) + " references vertex " + std::to_string(v) + " out of range");
    const double a = signed_area(vertices_[cells[c][0]], vertices_[cells[c][1]], vertices_[cells[c][2]]);
    if (!(a > 0.0))
      throw TopologyError("cell " + std::to_string(c) + " has non-positive signed area " + std::to_string(a) + " (inverted or clockwise)");
  }

  std::unordered_map<std::uint64_t, int> edges;
  edges.reserve(3 * cells.size());
  std::vector<Face> raw;
  raw.reserve(2 * cells.size() + 16);
  topo->cell_faces.resize(nc);
  for (int c = 0; c < nc; ++c) {
    for (int k = 0; k < 3; ++k) {
      const int a = cells[c][k];
      const int b = cells[c][(k + 1) % 3];
      auto [it, inserted] = edges.try_emplace(edge_key(a, b), static_cast<int>(raw.size()));
      if (inserted) {
        raw.push_back(Face{{a, b}, c, -1, PatchKind::wall});
      } else {
        Face& f = raw[it->second];
        if (f.neighbor >= 0)
          throw TopologyError("edge (" + std::to_string(a) + "," + std::to_string(b) + ") shared by more than two cells");
        if (f.v[0] == a)
          throw TopologyError("cells " + std::to_string(f.owner) + " and " + std::to_string(c) + " overlap across a shared edge");
        f.neighbor = c;
      }
      topo->cell_faces[c][k] = it->second;
    }
  }

  // Interior faces keep discovery order; boundary faces follow the order of the boundary list.
  std::vector<int> new_index(raw.size(), -1);
  int n_int = 0;
  for (std::size_t i = 0; i < raw.size(); ++i)
    if (raw[i].neighbor >= 0) new_index[i] = n_int++;
  topo->n_interior = n_int;
  topo->faces.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    if (new_index[i] >= 0) topo->faces[new_index[i]] = raw[i];

  int next = n_int;
  for (std::size_t b = 0; b < boundary.size(); ++b) {
    const auto& spec = boundary[b];
    for (int v : spec.v)
      if (v < 0 || v >= nv) throw TopologyError("boundary face " + std::to_string(b) + " references vertex out of range");
    auto it = edges.find(edge_key(spec.v[0], spec.v[1]));
    if (it == edges.end())
      throw TopologyError("dangling boundary face " + std::to_string(b) + " (" + std::to_string(spec.v[0]) + "," +
                          std::to_string(spec.v[1]) + ") is not an edge of any cell");
    const int r = it->second;
    if (raw[r].neighbor >= 0)
      throw TopologyError("boundary face " + std::to_string(b) + " lies on an interior edge");
    if (new_index[r] >= 0) throw PatchError("boundary face " + std::to_string(b) + " tagged twice");
    new_index[r] = next;
    Face f = raw[r];
    f.kind = spec.kind;
    topo->faces[next++] = f;
  }
  if (next != static_cast<int>(raw.size())) {
    for (std::size_t i = 0; i < raw.size(); ++i)
      if (new_index[i] < 0)
        throw PatchError("boundary edge (" + std::to_string(raw[i].v[0]) + "," + std::to_string(raw[i].v[1]) +
                         ") has no patch tag");
  }
  for (auto& cf : topo->cell_faces)
    for (int& f : cf) f = new_index[f];

  build_csr(nv, nc, [&](int c) { return cells[c]; }, topo->vcell_ptr, topo->vcell);
  const int nb = static_cast<int>(raw.size()) - n_int;
  build_csr(nv, nb, [&](int b) { return topo->faces[n_int + b].v; }, topo->vbface_ptr, topo->vbface);
  for (int& b : topo->vbface) b += n_int;

  topo->cell_nbr_ptr.assign(nc + 1, 0);
  std::vector<int> scratch;
  for (int c = 0; c < nc; ++c) {
    scratch.clear();
    for (int v : cells[c])
      for (int k = topo->vcell_ptr[v]; k < topo->vcell_ptr[v + 1]; ++k)
        if (topo->vcell[k] != c) scratch.push_back(topo->vcell[k]);
    std::sort(scratch.begin(), scratch.end());
    scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
    topo->cell_nbr.insert(topo->cell_nbr.end(), scratch.begin(), scratch.end());
    topo->cell_nbr_ptr[c + 1] = static_cast<int>(topo->cell_nbr.size());
  }

  topo->cells = std::move(cells);
  geometry_ = make_geometry(vertices_, *topo);
  topo_ = std::move(topo);
}

int Mesh::num_cells() const { return topo_ ? static_cast<int>(topo_->cells.size()) : 0; }
int Mesh::num_faces() const { return topo_ ? static_cast<int>(topo_->faces.size()) : 0; }
int Mesh::num_interior_faces() const { return topo_ ? topo_->n_interior : 0; }
int Mesh::num_boundary_faces() const { return num_faces() - num_interior_faces(); }
const std::vector<Cell>& Mesh::cells() const { return topo_->cells; }
const std::vector<Face>& Mesh::faces() const { return topo_->faces; }
const std::array<int, 3>& Mesh::cell_faces(int c) const { return topo_->cell_faces[c]; }

std::span<const int> Mesh::cell_neighbors(int c) const {
  const int b = topo_->cell_nbr_ptr[c];
  return {topo_->cell_nbr.data() + b, static_cast<std::size_t>(topo_->cell_nbr_ptr[c + 1] - b)};
}

std::span<const int> Mesh::vertex_cells(int v) const {
  const int b = topo_->vcell_ptr[v];
  return {topo_->vcell.data() + b, static_cast<std::size_t>(topo_->vcell_ptr[v + 1] - b)};
}

std::span<const int> Mesh::vertex_boundary_faces(int v) const {
  const int b = topo_->vbface_ptr[v];
  return {topo_->vbface.data() + b, static_cast<std::size_t>(topo_->vbface_ptr[v + 1] - b)};
}

std::vector<int> Mesh::patch(PatchKind kind) const {
  std::vector<int> out;
  for (int f = num_interior_faces(); f < num_faces(); ++f)
    if (faces()[f].kind == kind) out.push_back(f);
  return out;
}

std::vector<int> Mesh::obstacle_faces() const {
  std::vector<int> out;
  for (int f = num_interior_faces(); f < num_faces(); ++f)
    if (is_obstacle(faces()[f].kind)) out.push_back(f);
  return out;
}

bool Mesh::has_patch(PatchKind kind) const {
  for (int f = num_interior_faces(); f < num_faces(); ++f)
    if (faces()[f].kind == kind) return true;
  return false;
}

std::vector<char> Mesh::vertices_on(PatchKind kind) const {
  std::vector<char> on(num_vertices(), 0);
  for (int f = num_interior_faces(); f < num_faces(); ++f)
    if (faces()[f].kind == kind) on[faces()[f].v[0]] = on[faces()[f].v[1]] = 1;
  return on;
}

std::vector<char> Mesh::fixed_vertices() const {
  std::vector<char> fixed(num_vertices(), 0);
  for (int f = num_interior_faces(); f < num_faces(); ++f)
    if (faces()[f].kind != PatchKind::obsN) fixed[faces()[f].v[0]] = fixed[faces()[f].v[1]] = 1;
  return fixed;
}

Mesh Mesh::with_vertices(std::vector<Vec2> vertices) const {
  if (vertices.size() != vertices_.size()) throw Error("with_vertices: vertex count mismatch");
  Mesh m;
  m.vertices_ = std::move(vertices);
  m.topo_ = topo_;
  m.geometry_ = make_geometry(m.vertices_, *topo_);
  return m;
}

Mesh Mesh::with_boundary_kinds(const std::vector<PatchKind>& kinds) const {
  if (static_cast<int>(kinds.size()) != num_boundary_faces()) throw Error("with_boundary_kinds: size mismatch");
  auto topo = std::make_shared<Topology>(*topo_);
  for (int b = 0; b < num_boundary_faces(); ++b) topo->faces[topo->n_interior + b].kind = kinds[b];
  Mesh m;
  m.vertices_ = vertices_;
  m.topo_ = std::move(topo);
  m.geometry_ = geometry_;
  return m;
}

std::vector<BoundarySpec> Mesh::boundary_specs() const {
  std::vector<BoundarySpec> out;
  out.reserve(num_boundary_faces());
  for (int f = num_interior_faces(); f < num_faces(); ++f) out.push_back({faces()[f].v, faces()[f].kind});
  return out;
}

FaceGeometry compute_geometry(const Mesh& mesh) { return mesh.geometry(); }

Mesh parse_mesh(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  std::size_t pos = 0;
  auto next = [&]() -> const std::string& {
    if (pos >= tokens.size()) throw ParseError("unexpected end of mesh file");
    return tokens[pos++];
  };
  auto next_int = [&]() {
    const std::string& t = next();
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(t, &used);
    } catch (const std::exception&) {
      throw ParseError("expected integer, got '" + t + "'");
    }
    if (used != t.size()) throw ParseError("expected integer, got '" + t + "'");
    return static_cast<int>(v);
  };
  auto next_double = [&]() {
    const std::string& t = next();
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      throw ParseError("expected number, got '" + t + "'");
    }
    if (used != t.size()) throw ParseError("expected number, got '" + t + "'");
    return v;
  };

  const int dim = next_int();
  if (dim != 2) throw ParseError("only dim = 2 meshes are supported, got " + std::to_string(dim));
  const int np = next_int();
  const int nc = next_int();
  const int nb = next_int();
  if (np < 0 || nc < 0 || nb < 0) throw ParseError("negative count in mesh header");

  std::vector<Vec2> pts(np);
  for (auto& p : pts) {
    p.x() = next_double();
    p.y() = next_double();
  }
  std::vector<Cell> cells(nc);
  for (auto& c : cells)
    for (int& v : c) v = next_int();
  std::vector<BoundarySpec> bfaces(nb);
  for (auto& b : bfaces) {
    b.v[0] = next_int();
    b.v[1] = next_int();
    b.kind = parse_patch_kind(next());
  }
  if (pos != tokens.size()) throw ParseError("trailing tokens after mesh data");
  return Mesh(std::move(pts), std::move(cells), std::move(bfaces));
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mesh file '" + path + "'");
  try {
    return parse_mesh(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_mesh(const Mesh& mesh, std::ostream& out) {
  out << "# dim npoints ncells nbfaces\n";
  out << 2 << ' ' << mesh.num_vertices() << ' ' << mesh.num_cells() << ' ' << mesh.num_boundary_faces() << '\n';
  out << std::setprecision(17);
  for (const auto& p : mesh.vertices()) out << p.x() << ' ' << p.y() << '\n';
  for (const auto& c : mesh.cells()) out << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
  for (const auto& b : mesh.boundary_specs()) out << b.v[0] << ' ' << b.v[1] << ' ' << to_string(b.kind) << '\n';
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mesh file '" + path + "'");
  write_mesh(mesh, out);
}

Mesh apply_deformation(const Mesh& mesh, const VertexField& V, double eps) {
  if (static_cast<int>(V.size()) != mesh.num_vertices()) throw Error("apply_deformation: field size mismatch");
  std::vector<Vec2> x = mesh.vertices();
  if (eps != 0.0)
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += eps * V[i];
  return mesh.with_vertices(std::move(x));
}

QualityReport quality_check(const Mesh& mesh) {
  const auto& g = mesh.geometry();
  QualityReport r;
  r.min_cell_volume = std::numeric_limits<double>::infinity();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    if (g.cell_volume[c] < r.min_cell_volume) {
      r.min_cell_volume = g.cell_volume[c];
      r.worst_cell = c;
    }
  }
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    auto skew = [&](int c, double sign) {
      Vec2 t = g.face_centroid[f] - g.cell_centroid[c];
      const double n = t.norm();
      if (n == 0.0) return 1.0;
      return 1.0 - sign * t.dot(g.face_normal[f]) / n;
    };
    r.max_skewness = std::max(r.max_skewness, skew(face.owner, 1.0));
    if (!face.boundary()) r.max_skewness = std::max(r.max_skewness, skew(face.neighbor, -1.0));
  }
  r.valid = r.min_cell_volume > 0.0;
  return r;
}

std::vector<double> min_incident_edge(const Mesh& mesh) {
  std::vector<double> h(mesh.num_vertices(), std::numeric_limits<double>::infinity());
  const auto& g = mesh.geometry();
  for (int f = 0; f < mesh.num_faces(); ++f)
    for (int v : mesh.face(f).v) h[v] = std::min(h[v], g.face_area[f]);
  return h;
}

double domain_diameter(const Mesh& mesh) {
  if (mesh.num_vertices() == 0) return 0.0;
  Vec2 lo = mesh.vertices()[0], hi = lo;
  for (const auto& p : mesh.vertices()) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

}  // namespace shapeopt
