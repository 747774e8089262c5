#include "shapeopt/concentration.hpp"

#include <algorithm>
#include <type_traits>

namespace shapeopt {

namespace {

using Polygon = std::vector<Vec2>;

// Keeps the part of the polygon with sign * (y - t) >= 0.
Polygon clip(const Polygon& in, double t, double sign) {
  Polygon out;
  const std::size_t n = in.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = in[i];
    const Vec2& q = in[(i + 1) % n];
    const double dp = sign * (p.y() - t), dq = sign * (q.y() - t);
    if (dp >= 0.0) out.push_back(p);
    if ((dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0)) {
      const double s = dp / (dp - dq);
      Vec2 x = p + s * (q - p);
      x.y() = t;
      out.push_back(x);
    }
  }
  return out;
}

// Fan quadrature with edge midpoints; exact for polynomials of degree two.
template <class T>
T zero() {
  if constexpr (std::is_arithmetic_v<T>) return T(0);
  else return T::Zero();
}

template <class F>
auto integrate_polygon(const Polygon& poly, F&& f) -> decltype(f(Vec2())) {
  using T = decltype(f(Vec2()));
  T sum = zero<T>();
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
    const Vec2 &a = poly[0], &b = poly[i], &c = poly[i + 1];
    const double area = signed_area(a, b, c);
    sum += (area / 3.0) * (f(0.5 * (a + b)) + f(0.5 * (b + c)) + f(0.5 * (c + a)));
  }
  return sum;
}

// Splits a triangle into pieces on which c is affine and integrates g(x, c(x)).
template <class G>
auto integrate_phase(const Vec2& a, const Vec2& b, const Vec2& c, const PhaseField& phase, G&& g)
    -> decltype(g(Vec2(), 0.0)) {
  const Polygon tri = {a, b, c};
  auto with_c = [&](const Vec2& x) { return g(x, phase.value(x)); };
  if (!phase.waterline) return integrate_polygon(tri, with_c);
  const double z = *phase.waterline, d = phase.half_width;
  const double lo = std::min({a.y(), b.y(), c.y()}), hi = std::max({a.y(), b.y(), c.y()});
  if (d <= 0.0) {
    // Sharp interface: evaluate each side with its constant value to avoid sampling on the jump.
    auto below = integrate_polygon(clip(tri, z, -1.0), [&](const Vec2& x) { return g(x, 0.0); });
    auto above = integrate_polygon(clip(tri, z, 1.0), [&](const Vec2& x) { return g(x, 1.0); });
    return below + above;
  }
  if (hi <= z - d || lo >= z + d) return integrate_polygon(tri, with_c);
  const Polygon lower = clip(tri, z - d, -1.0);
  const Polygon upper = clip(tri, z + d, 1.0);
  const Polygon band = clip(clip(tri, z - d, 1.0), z + d, -1.0);
  return integrate_polygon(lower, [&](const Vec2& x) { return g(x, 0.0); }) +
         integrate_polygon(band, with_c) + integrate_polygon(upper, [&](const Vec2& x) { return g(x, 1.0); });
}

}  // namespace

double PhaseField::value(const Vec2& x) const {
  if (!waterline) return constant;
  const double z = *waterline;
  if (half_width <= 0.0) return x.y() > z ? 1.0 : (x.y() < z ? 0.0 : 0.5);
  return std::clamp((x.y() - z) / (2.0 * half_width) + 0.5, 0.0, 1.0);
}

std::vector<double> PhaseField::breakpoints() const {
  if (!waterline) return {};
  if (half_width <= 0.0) return {*waterline};
  return {*waterline - half_width, *waterline + half_width};
}

namespace detail {
std::vector<double> segment_splits(const Vec2& a, const Vec2& b, const PhaseField& phase) {
  std::vector<double> s = {0.0};
  const double dy = b.y() - a.y();
  if (dy != 0.0) {
    for (double y : phase.breakpoints()) {
      const double t = (y - a.y()) / dy;
      if (t > 0.0 && t < 1.0) s.push_back(t);
    }
  }
  s.push_back(1.0);
  std::sort(s.begin(), s.end());
  return s;
}
}  // namespace detail

ScalarField prescribe_concentration(const Mesh& mesh, const PhaseField& phase) {
  ScalarField c(mesh.num_cells(), phase.constant);
  if (!phase.waterline) return c;
  const auto& x = mesh.vertices();
  const auto& g = mesh.geometry();
  for (int k = 0; k < mesh.num_cells(); ++k) {
    const auto& cv = mesh.cells()[k];
    const double area = g.cell_volume[k];
    if (area <= 0.0) {
      c[k] = phase.value(g.cell_centroid[k]);
      continue;
    }
    const double ic = integrate_phase(x[cv[0]], x[cv[1]], x[cv[2]], phase, [](const Vec2&, double cc) { return cc; });
    c[k] = std::clamp(ic / area, 0.0, 1.0);
  }
  return c;
}

ScalarField prescribe_concentration(const Mesh& mesh, double z_wl, double delta) {
  if (delta < 0.0) throw ConfigError("prescribe_concentration: half-width must be non-negative");
  return prescribe_concentration(mesh, PhaseField::stratified(z_wl, delta));
}

ScalarField face_concentration(const Mesh& mesh, const PhaseField& phase) {
  ScalarField c(mesh.num_faces(), phase.constant);
  if (!phase.waterline) return c;
  const auto& x = mesh.vertices();
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Vec2& a = x[mesh.face(f).v[0]];
    const Vec2& b = x[mesh.face(f).v[1]];
    const double len = (b - a).norm();
    if (len <= 0.0) {
      c[f] = phase.value(a);
      continue;
    }
    c[f] = std::clamp(integrate_segment(a, b, phase, [&](const Vec2& p) { return phase.value(p); }) / len, 0.0, 1.0);
  }
  return c;
}

ConstraintVector water_moments(const Vec2& a, const Vec2& b, const Vec2& c, const PhaseField& phase) {
  return integrate_phase(a, b, c, phase, [](const Vec2& x, double cc) -> ConstraintVector {
    const double w = 1.0 - cc;
    return ConstraintVector(w * x.x(), w * x.y(), w);
  });
}

}  // namespace shapeopt
