#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <span>

#include "sgfem/meshkit.hpp"

namespace sgfem::quad {

struct TrianglePoint {
  std::array<double, 3> bary;
  double weight;  // weights sum to 1
};

/// Symmetric 7-point rule, exact for polynomials of degree 5.
std::span<const TrianglePoint> degree5_rule();

inline mesh::Point map_point(const TrianglePoint& q, const mesh::Point& a, const mesh::Point& b,
                             const mesh::Point& c) {
  return {q.bary[0] * a.x + q.bary[1] * b.x + q.bary[2] * c.x,
          q.bary[0] * a.y + q.bary[1] * b.y + q.bary[2] * c.y};
}

template <class F>
double integrate_degree5(const mesh::Point& a, const mesh::Point& b, const mesh::Point& c, F&& f) {
  const double area = 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
  double s = 0.0;
  for (const TrianglePoint& q : degree5_rule()) s += q.weight * f(map_point(q, a, b, c));
  return area * s;
}

/// ∫_T exp(i k·x) dx in closed form (second divided difference of exp(i s)
/// at the projected vertices), stable for nearly coincident projections.
std::complex<double> plane_wave_integral(const mesh::Point& a, const mesh::Point& b,
                                         const mesh::Point& c, double kx, double ky);

}  // namespace sgfem::quad
