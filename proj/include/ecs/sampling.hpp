#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ecs/elliptic.hpp"
#include "ecs/errors.hpp"
#include "ecs/states.hpp"

namespace ecs {

/// Seeded generator with a portable uniform draw (std distributions are
/// implementation-defined, which would break byte-identical reports).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) {
    return lo + static_cast<int>(uniform() * (hi - lo + 1));
  }
  bool coin() { return uniform() < 0.5; }

  /// Coupling drawn from the annulus 0.3 <= |lambda| <= 3 with a random phase
  /// in (-max_phase, max_phase).
  complex coupling(double max_phase = 0.6) {
    return std::polar(uniform(0.3, 3.0), uniform(-max_phase, max_phase));
  }

 private:
  std::mt19937_64 engine_;
};

/// `count` strictly decreasing configurations of `n` coordinates in
/// (min_sep/2, 2pi - min_sep/2) with consecutive gaps >= min_sep, so every
/// difference X_a - X_b (a < b) lies in [min_sep, 2pi - min_sep].
inline std::vector<Configuration> sample_configurations(int n, double min_sep,
                                                        int count,
                                                        std::uint64_t seed) {
  if (n < 1) throw DomainError("need at least one coordinate");
  if (!(min_sep > 0.0)) throw DomainError("min_sep must be positive");
  if (!(n * min_sep < kTwoPi))
    throw DomainError("infeasible packing: " + std::to_string(n) +
                      " coordinates with min_sep " + std::to_string(min_sep) +
                      " do not fit on the circle");
  const double margin = min_sep / 2.0;
  const double slack = kTwoPi - 2.0 * margin - (n - 1) * min_sep;
  Rng rng(seed);
  std::vector<Configuration> out;
  out.reserve(count);
  for (int c = 0; c < count; ++c) {
    std::vector<double> u(n);
    for (auto& v : u) v = rng.uniform(0.0, slack);
    std::sort(u.begin(), u.end());
    Configuration cfg{std::vector<double>(n), min_sep};
    for (int i = 0; i < n; ++i)
      cfg.coords[n - 1 - i] = margin + u[i] + i * min_sep;
    out.push_back(std::move(cfg));
  }
  return out;
}

}  // namespace ecs
