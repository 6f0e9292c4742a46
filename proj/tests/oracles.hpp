#pragma once

// Brute-force reference implementations used only by the tests. They share
// no code with include/ecs beyond <cmath>/<complex>.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

namespace oracle {

using complex = std::complex<double>;

/// 1/12 - sum_{m=1}^{terms} 1/(2 sinh^2(beta m / 2)), summed smallest first.
inline double c0_direct(double beta, int terms = 200) {
  double acc = 0.0;
  for (int m = terms; m >= 1; --m) {
    const double s = std::sinh(beta * m / 2.0);
    if (std::isinf(s)) continue;
    acc += 1.0 / (2.0 * s * s);
  }
  return 1.0 / 12.0 - acc;
}

/// sin(r/2) prod_{m=1}^{factors} (1 - 2 q^{2m} cos r + q^{4m}), q^{2m} by pow.
inline double theta_product(double beta, double r, int factors = 200) {
  const double q = std::exp(-beta / 2.0);
  double p = std::sin(r / 2.0);
  for (int m = 1; m <= factors; ++m) {
    const double qm = std::pow(q, 2.0 * m);
    p *= 1.0 - 2.0 * qm * std::cos(r) + qm * qm;
  }
  return p;
}

/// sum_{|m| <= mmax} 1/(4 sin^2((r + i beta m)/2)) with complex sine.
inline double V_lattice(double beta, double r, int mmax = 60) {
  complex acc{};
  for (int m = mmax; m >= 1; --m) {
    for (int s : {1, -1}) {
      const complex sn = std::sin(complex(r, beta * m * s) / 2.0);
      acc += 1.0 / (4.0 * sn * sn);
    }
  }
  const double s0 = std::sin(r / 2.0);
  return acc.real() + 1.0 / (4.0 * s0 * s0);
}

/// theta_annulus as an over-truncated direct product.
inline complex theta_annulus_product(double beta, complex z, int factors = 200) {
  const double q2 = std::exp(-beta);
  complex p = 1.0 - z;
  for (int m = 1; m <= factors; ++m) {
    const double qm = std::pow(q2, m);
    p *= (1.0 - qm * z) * (1.0 - qm / z);
  }
  return p;
}

/// Richardson-extrapolated central differences written out by hand
/// (step h, h/2, h/4; second-order base formula).
template <class F>
auto d1(F&& g, double x, double h = 1e-2) {
  auto D = [&](double s) { return (g(x + s) - g(x - s)) / (2.0 * s); };
  const auto a = D(h), b = D(h / 2), c = D(h / 4);
  const auto ab = (4.0 * b - a) / 3.0, bc = (4.0 * c - b) / 3.0;
  return (16.0 * bc - ab) / 15.0;
}

template <class F>
auto d2(F&& g, double x, double h = 1e-2) {
  auto D = [&](double s) {
    return (g(x + s) - 2.0 * g(x) + g(x - s)) / (s * s);
  };
  const auto a = D(h), b = D(h / 2), c = D(h / 4);
  const auto ab = (4.0 * b - a) / 3.0, bc = (4.0 * c - b) / 3.0;
  return (16.0 * bc - ab) / 15.0;
}

}  // namespace oracle
