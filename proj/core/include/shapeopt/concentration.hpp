#pragma once

#include "shapeopt/mesh.hpp"

#include <optional>
#include <vector>

namespace shapeopt {

// Static volume fraction c(x): 0 = water, 1 = air.
// Either a constant, or a waterline ramp c = clamp((y - z)/(2 delta) + 1/2, 0, 1).
struct PhaseField {
  double constant = 0.0;
  std::optional<double> waterline;
  double half_width = 0.0;

  static PhaseField single_phase(double c = 0.0) { return PhaseField{c, std::nullopt, 0.0}; }
  static PhaseField stratified(double z_wl, double delta) { return PhaseField{0.0, z_wl, delta}; }

  double value(const Vec2& x) const;
  // y-values where c is not smooth; empty for the constant field.
  std::vector<double> breakpoints() const;
};

// Cell averages of c over each (possibly deformed) cell, integrated exactly.
ScalarField prescribe_concentration(const Mesh& mesh, const PhaseField& phase);
ScalarField prescribe_concentration(const Mesh& mesh, double z_wl, double delta);
// Face averages of c.
ScalarField face_concentration(const Mesh& mesh, const PhaseField& phase);

// Exact integral over a triangle of (1 - c) * (x, y, 1).
ConstraintVector water_moments(const Vec2& a, const Vec2& b, const Vec2& c, const PhaseField& phase);

// Integral over segment [a,b] of f(x) split at the phase breakpoints, two-point Gauss per piece.
template <class F>
double integrate_segment(const Vec2& a, const Vec2& b, const PhaseField& phase, F&& f);

namespace detail {
std::vector<double> segment_splits(const Vec2& a, const Vec2& b, const PhaseField& phase);
}

template <class F>
double integrate_segment(const Vec2& a, const Vec2& b, const PhaseField& phase, F&& f) {
  const std::vector<double> s = detail::segment_splits(a, b, phase);
  const double len = (b - a).norm();
  constexpr double g = 0.28867513459481287;  // 1 / (2 sqrt 3)
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const double mid = 0.5 * (s[k] + s[k + 1]), half = s[k + 1] - s[k];
    if (half <= 0.0) continue;
    const Vec2 x1 = a + (mid - g * half) * (b - a);
    const Vec2 x2 = a + (mid + g * half) * (b - a);
    sum += 0.5 * half * len * (f(x1) + f(x2));
  }
  return sum;
}

}  // namespace shapeopt
