#include "shapeopt/mesh_generators.hpp"

#include <cmath>
#include <numbers>

namespace shapeopt {

namespace {

void add_quad(std::vector<Cell>& cells, int a, int b, int c, int d, bool diag_ac) {
  if (diag_ac) {
    cells.push_back({a, b, c});
    cells.push_back({a, c, d});
  } else {
    cells.push_back({a, b, d});
    cells.push_back({b, c, d});
  }
}

}  // namespace

std::vector<double> graded_nodes(double a, double b, int n, double h0) {
  if (n < 1) throw Error("graded_nodes: need at least one cell");
  const double L = std::abs(b - a);
  auto total = [&](double r) {
    double s = 0.0, t = 1.0;
    for (int i = 0; i < n; ++i, t *= r) s += t;
    return h0 * s;
  };
  double r = 1.0;
  if (std::abs(total(1.0) - L) > 1e-14 * L) {
    double lo = 1e-3, hi = 10.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (total(mid) < L ? lo : hi) = mid;
    }
    r = 0.5 * (lo + hi);
  }
  const double sgn = b >= a ? 1.0 : -1.0;
  std::vector<double> x(n + 1);
  double pos = 0.0, h = h0 * L / total(r);
  for (int i = 0; i <= n; ++i) {
    x[i] = a + sgn * pos;
    pos += h;
    h *= r;
  }
  x[n] = b;
  return x;
}

Mesh unit_square_mesh(PatchKind kind) {
  std::vector<Vec2> v = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  std::vector<Cell> c = {{0, 1, 2}, {0, 2, 3}};
  std::vector<BoundarySpec> b = {{{0, 1}, kind}, {{1, 2}, kind}, {{2, 3}, kind}, {{3, 0}, kind}};
  return Mesh(std::move(v), std::move(c), std::move(b));
}

Mesh rectangle_mesh(const RectangleParams& p) {
  if (p.nx < 1 || p.ny < 1) throw Error("rectangle_mesh: nx, ny must be positive");
  auto id = [&](int i, int j) { return j * (p.nx + 1) + i; };
  std::vector<Vec2> v;
  v.reserve((p.nx + 1) * (p.ny + 1));
  for (int j = 0; j <= p.ny; ++j)
    for (int i = 0; i <= p.nx; ++i)
      v.emplace_back(p.x0 + (p.x1 - p.x0) * i / p.nx, p.y0 + (p.y1 - p.y0) * j / p.ny);
  std::vector<Cell> c;
  for (int j = 0; j < p.ny; ++j)
    for (int i = 0; i < p.nx; ++i)
      add_quad(c, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1), (i + j) % 2 == 0);
  std::vector<BoundarySpec> b;
  for (int i = 0; i < p.nx; ++i) b.push_back({{id(i, 0), id(i + 1, 0)}, p.bottom});
  for (int j = 0; j < p.ny; ++j) b.push_back({{id(p.nx, j), id(p.nx, j + 1)}, p.right});
  for (int i = p.nx; i > 0; --i) b.push_back({{id(i, p.ny), id(i - 1, p.ny)}, p.top});
  for (int j = p.ny; j > 0; --j) b.push_back({{id(0, j), id(0, j - 1)}, p.left});
  return Mesh(std::move(v), std::move(c), std::move(b));
}

Mesh annulus_mesh(const AnnulusParams& p) {
  const int nt = p.n_theta, nr = p.n_radial;
  if (nt < 3 || nr < 1) throw Error("annulus_mesh: bad resolution");
  auto id = [&](int j, int k) { return j * nt + ((k % nt) + nt) % nt; };
  std::vector<Vec2> v;
  for (int j = 0; j <= nr; ++j) {
    const double r = p.r_inner + (p.r_outer - p.r_inner) * j / nr;
    for (int k = 0; k < nt; ++k) {
      const double th = 2.0 * std::numbers::pi * k / nt;
      v.emplace_back(r * std::cos(th), r * std::sin(th));
    }
  }
  std::vector<Cell> c;
  for (int j = 0; j < nr; ++j)
    for (int k = 0; k < nt; ++k) add_quad(c, id(j, k), id(j + 1, k), id(j + 1, k + 1), id(j, k + 1), (j + k) % 2 == 0);
  std::vector<BoundarySpec> b;
  for (int k = 0; k < nt; ++k) b.push_back({{id(0, k + 1), id(0, k)}, p.inner});
  for (int k = 0; k < nt; ++k) b.push_back({{id(nr, k), id(nr, k + 1)}, p.outer});
  return Mesh(std::move(v), std::move(c), std::move(b));
}

CylinderChannelParams CylinderChannelParams::level(int level) {
  CylinderChannelParams p;
  const int s = 1 << level;
  p.n_theta *= s;
  p.n_radial *= s;
  p.first_layer /= s;
  p.n_upstream *= s;
  p.n_downstream *= s;
  p.n_side *= s;
  return p;
}

Mesh cylinder_channel_mesh(const CylinderChannelParams& p) {
  const int nt = p.n_theta, nr = p.n_radial;
  if (nt % 8 != 0 || nt < 8) throw Error("cylinder_channel_mesh: n_theta must be a positive multiple of 8");
  const double a = p.box_half;
  if (!(p.radius < a && p.x_min < -a && p.x_max > a && p.y_half > a)) throw Error("cylinder_channel_mesh: inconsistent extents");
  const int ns = nt / 4;  // segments per square side

  std::vector<Vec2> v;
  auto ring = [&](int j, int k) { return j * nt + ((k % nt) + nt) % nt; };

  // Radial blend parameter: first layer thickness measured on the symmetry axis.
  const std::vector<double> t = graded_nodes(0.0, 1.0, nr, p.first_layer / (a - p.radius));
  std::vector<Vec2> circle(nt), square(nt);
  for (int k = 0; k < nt; ++k) {
    const double th = 2.0 * std::numbers::pi * k / nt;
    circle[k] = Vec2(p.radius * std::cos(th), p.radius * std::sin(th));
    // Perimeter position in segments, starting at (a, 0) and running counter-clockwise.
    const double h = 2.0 * a / ns;
    const int s = (k + ns / 2) % nt;  // measured from the corner (a, -a)
    const int side = s / ns, off = s % ns;
    switch (side) {
      case 0: square[k] = Vec2(a, -a + h * off); break;
      case 1: square[k] = Vec2(a - h * off, a); break;
      case 2: square[k] = Vec2(-a, a - h * off); break;
      default: square[k] = Vec2(-a + h * off, -a); break;
    }
  }
  for (int j = 0; j <= nr; ++j)
    for (int k = 0; k < nt; ++k) v.push_back((1.0 - t[j]) * circle[k] + t[j] * square[k]);

  std::vector<Cell> c;
  for (int j = 0; j < nr; ++j)
    for (int k = 0; k < nt; ++k) {
      add_quad(c, ring(j, k), ring(j + 1, k), ring(j + 1, k + 1), ring(j, k + 1), (j + k) % 2 == 0);
    }

  // Cartesian block around the square.
  const double h_sq = 2.0 * a / ns;
  std::vector<double> xs, ys;
  {
    auto left = graded_nodes(-a, p.x_min, p.n_upstream, h_sq);
    for (int i = p.n_upstream; i > 0; --i) xs.push_back(left[i]);
    for (int i = 0; i < ns; ++i) xs.push_back(-a + h_sq * i);
    auto right = graded_nodes(a, p.x_max, p.n_downstream, h_sq);
    xs.insert(xs.end(), right.begin(), right.end());
    auto bottom = graded_nodes(-a, -p.y_half, p.n_side, h_sq);
    for (int i = p.n_side; i > 0; --i) ys.push_back(bottom[i]);
    for (int i = 0; i < ns; ++i) ys.push_back(-a + h_sq * i);
    auto top = graded_nodes(a, p.y_half, p.n_side, h_sq);
    ys.insert(ys.end(), top.begin(), top.end());
  }
  const int nx = static_cast<int>(xs.size()) - 1, ny = static_cast<int>(ys.size()) - 1;
  const int i0 = p.n_upstream, i1 = p.n_upstream + ns, l0 = p.n_side, l1 = p.n_side + ns, lmid = l0 + ns / 2;
  std::vector<int> gid((nx + 1) * (ny + 1), -1);
  auto g = [&](int i, int l) -> int& { return gid[l * (nx + 1) + i]; };
  for (int l = 0; l <= ny; ++l)
    for (int i = 0; i <= nx; ++i) {
      const bool in_x = i >= i0 && i <= i1, in_y = l >= l0 && l <= l1;
      if (in_x && in_y) {
        int k = -1;
        if (i == i1) k = l - lmid;
        else if (l == l1) k = ns / 2 + (i1 - i);
        else if (i == i0) k = ns / 2 + ns + (l1 - l);
        else if (l == l0) k = ns / 2 + 2 * ns + (i - i0);
        if (k >= 0 || i == i1) g(i, l) = ring(nr, k);
        continue;
      }
      g(i, l) = static_cast<int>(v.size());
      v.emplace_back(xs[i], ys[l]);
    }
  for (int l = 0; l < ny; ++l)
    for (int i = 0; i < nx; ++i) {
      if (i >= i0 && i < i1 && l >= l0 && l < l1) continue;
      add_quad(c, g(i, l), g(i + 1, l), g(i + 1, l + 1), g(i, l + 1), (i + l) % 2 == 0);
    }

  std::vector<BoundarySpec> b;
  for (int k = 0; k < nt; ++k) b.push_back({{ring(0, k + 1), ring(0, k)}, p.obstacle});
  for (int l = 0; l < ny; ++l) b.push_back({{g(0, l + 1), g(0, l)}, PatchKind::inlet});
  for (int l = 0; l < ny; ++l) b.push_back({{g(nx, l), g(nx, l + 1)}, PatchKind::outlet});
  for (int i = 0; i < nx; ++i) b.push_back({{g(i, 0), g(i + 1, 0)}, p.side});
  for (int i = 0; i < nx; ++i) b.push_back({{g(i + 1, ny), g(i, ny)}, p.side});
  return Mesh(std::move(v), std::move(c), std::move(b));
}

}  // namespace shapeopt
