#pragma once

// Central finite differences with Richardson extrapolation. Only the
// sampled function values are used; nothing here knows about theta.

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "ecs/errors.hpp"

namespace ecs {

struct StencilSpec {
  int order = 4;  // 2, 4 or 6
  double h = 1e-3;
  int richardson_levels = 1;
  double value_eps = 1e-14;  // assumed relative accuracy of each g(t)

  void validate() const {
    if (order != 2 && order != 4 && order != 6)
      throw ConstraintError("fd order must be 2, 4 or 6, got " +
                            std::to_string(order));
    if (!(h > 0.0)) throw ConstraintError("fd step must be positive");
    if (richardson_levels < 0 || richardson_levels > 4)
      throw ConstraintError("richardson_levels must be in [0, 4]");
    if (!(value_eps >= 0.0)) throw ConstraintError("value_eps must be >= 0");
  }

  /// Largest offset (in units of the coordinate) touched by the stencil.
  double reach() const { return h * (order / 2); }
};

template <class T>
struct FdEstimate {
  T value{};
  double error = 0.0;  // truncation (last two levels) + roundoff bound
};

namespace detail {

struct StencilWeights {
  std::vector<double> weights;  // for offsets -k..k
  double denom;
};

inline const StencilWeights& second_weights(int order) {
  static const StencilWeights w2{{1, -2, 1}, 1.0};
  static const StencilWeights w4{{-1, 16, -30, 16, -1}, 12.0};
  static const StencilWeights w6{{2, -27, 270, -490, 270, -27, 2}, 180.0};
  return order == 2 ? w2 : order == 4 ? w4 : w6;
}

inline const StencilWeights& first_weights(int order) {
  static const StencilWeights w2{{-1, 0, 1}, 2.0};
  static const StencilWeights w4{{1, -8, 0, 8, -1}, 12.0};
  static const StencilWeights w6{{-1, 9, -45, 0, 45, -9, 1}, 60.0};
  return order == 2 ? w2 : order == 4 ? w4 : w6;
}

/// Stencil value and the bound eps * sum |w_i g_i| / (denom h^power) on
/// its roundoff.
template <class G>
auto apply_stencil(G& g, const StencilWeights& sw, double h, int power,
                   double eps) {
  using T = std::decay_t<decltype(g(0.0))>;
  const int k = static_cast<int>(sw.weights.size() / 2);
  T acc{};
  double mass = 0.0;
  for (int i = -k; i <= k; ++i) {
    const double w = sw.weights[i + k];
    if (w == 0.0) continue;
    const T gi = g(i * h);
    acc += w * gi;
    mass += std::abs(w) * std::abs(gi);
  }
  const double d = sw.denom * std::pow(h, power);
  return std::pair<T, double>{acc / d, eps * mass / d};
}

template <class G>
auto richardson(G& g, const StencilSpec& spec, const StencilWeights& sw,
                int power) {
  spec.validate();
  using T = std::decay_t<decltype(g(0.0))>;
  const int levels = spec.richardson_levels;
  std::vector<std::vector<T>> table(levels + 1);
  std::vector<std::vector<double>> noise(levels + 1);  // roundoff bounds
  for (int i = 0; i <= levels; ++i) {
    const auto [v, r] =
        apply_stencil(g, sw, spec.h / std::pow(2.0, i), power, spec.value_eps);
    table[i].push_back(v);
    noise[i].push_back(r);
    for (int k = 1; k <= i; ++k) {
      const double factor = std::pow(2.0, spec.order + 2 * (k - 1));
      table[i].push_back(table[i][k - 1] +
                         (table[i][k - 1] - table[i - 1][k - 1]) /
                             (factor - 1.0));
      noise[i].push_back((factor * noise[i][k - 1] + noise[i - 1][k - 1]) /
                         (factor - 1.0));
    }
  }
  FdEstimate<T> out;
  out.value = table[levels][levels];
  if (levels > 0) {
    out.error = std::abs(table[levels][levels] - table[levels][levels - 1]);
  } else {
    const auto coarse =
        apply_stencil(g, sw, 2.0 * spec.h, power, spec.value_eps);
    out.error = std::abs(out.value - coarse.first);
  }
  out.error += noise[levels][levels];
  return out;
}

}  // namespace detail

/// d/dt g(t) at t = 0, where g takes the offset t.
template <class G>
auto first_derivative(G&& g, const StencilSpec& spec = {}) {
  return detail::richardson(g, spec, detail::first_weights(spec.order), 1);
}

/// d^2/dt^2 g(t) at t = 0, where g takes the offset t.
template <class G>
auto second_derivative(G&& g, const StencilSpec& spec = {}) {
  return detail::richardson(g, spec, detail::second_weights(spec.order), 2);
}

}  // namespace ecs
