#include "sgfem/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace sgfem::quad {

namespace {

constexpr double kA1 = 0.059715871789769820;
constexpr double kB1 = 0.470142064105115090;
constexpr double kA2 = 0.797426985353087322;
constexpr double kB2 = 0.101286507323456339;
constexpr double kW0 = 0.225;
constexpr double kW1 = 0.132394152788506181;
constexpr double kW2 = 0.125939180544827153;

constexpr std::array<TrianglePoint, 7> kDegree5{{
    {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, kW0},
    {{kA1, kB1, kB1}, kW1},
    {{kB1, kA1, kB1}, kW1},
    {{kB1, kB1, kA1}, kW1},
    {{kA2, kB2, kB2}, kW2},
    {{kB2, kA2, kB2}, kW2},
    {{kB2, kB2, kA2}, kW2},
}};

using cplx = std::complex<double>;

// (exp(i x) - 1) / x without cancellation.
cplx expm1_over(double x) {
  if (x == 0.0) return {0.0, 1.0};
  const double s = std::sin(0.5 * x);
  return cplx(-2.0 * s * s, std::sin(x)) / x;
}

// First divided difference of exp(i s) at (p, q).
cplx first_difference(double p, double q) { return std::polar(1.0, p) * expm1_over(q - p); }

// Second divided difference of exp(i s) at (0, d1, d2) with 0 <= d1 <= d2.
cplx second_difference_shifted(double d1, double d2) {
  if (d2 < 1.0) {
    // Sum_n i^n/n! * h_{n-2}(0, d1, d2), h_k = complete homogeneous polynomial.
    cplx sum = 0.0;
    cplx ipow = -1.0;  // i^2
    double factorial = 2.0;
    double h = 1.0;     // h_0
    double d1pow = 1.0;
    for (int n = 2; n < 40; ++n) {
      const cplx term = ipow * (h / factorial);
      sum += term;
      if (std::abs(term) < 1e-18 * std::max(1.0, std::abs(sum))) break;
      ipow *= cplx(0.0, 1.0);
      factorial *= static_cast<double>(n + 1);
      d1pow *= d1;
      h = d2 * h + d1pow;
    }
    return sum;
  }
  return (first_difference(d1, d2) - first_difference(0.0, d1)) / d2;
}

}  // namespace

std::span<const TrianglePoint> degree5_rule() { return kDegree5; }

std::complex<double> plane_wave_integral(const mesh::Point& a, const mesh::Point& b,
                                         const mesh::Point& c, double kx, double ky) {
  const double area = 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
  std::array<double, 3> s{kx * a.x + ky * a.y, kx * b.x + ky * b.y, kx * c.x + ky * c.y};
  std::sort(s.begin(), s.end());
  // ∫_T g''(k·x) dx = 2|T| g[s0,s1,s2] with g = -exp(i s).
  const cplx dd = std::polar(1.0, s[0]) * second_difference_shifted(s[1] - s[0], s[2] - s[0]);
  return -2.0 * area * dd;
}

}  // namespace sgfem::quad
