#pragma once

// Product wavefunctions
//
//   Psi(X) = c * exp(i k.X) * prod_{factors} theta(X_a - X_b)^p
//
// with exact value, log-gradient, diagonal log-Hessian and log beta
// derivative. Real powers of theta are taken on the branch where
// theta(X_a - X_b) > 0, i.e. X_a - X_b in (0, 2*pi); configurations are
// therefore strictly ordered, with earlier flat indices at larger angles.

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "ecs/elliptic.hpp"
#include "ecs/errors.hpp"
#include "ecs/models.hpp"

namespace ecs {

struct PairFactor {
  int a = 0;
  int b = 0;
  complex exponent{};
};

struct CoordinateRole {
  Group group = Group::X;
  complex mass{1.0, 0.0};
};

class ProductState {
 public:
  ProductState() = default;
  explicit ProductState(std::vector<CoordinateRole> roles)
      : roles_(std::move(roles)), momentum_(roles_.size()) {}

  int size() const { return static_cast<int>(roles_.size()); }
  complex prefactor() const { return prefactor_; }
  const std::vector<PairFactor>& factors() const { return factors_; }
  const std::vector<complex>& momentum() const { return momentum_; }
  const std::vector<CoordinateRole>& roles() const { return roles_; }

  ProductState& add_factor(int a, int b, complex exponent) {
    if (a < 0 || b < 0 || a >= size() || b >= size() || a == b)
      throw DomainError("pair factor indices out of range");
    factors_.push_back({a, b, exponent});
    return *this;
  }

  ProductState& scale(complex c) {
    if (c == 0.0) throw ConstraintError("state prefactor must be nonzero");
    prefactor_ *= c;
    return *this;
  }

  ProductState& boost(int j, complex k) {
    momentum_.at(j) += k;
    return *this;
  }

 private:
  std::vector<CoordinateRole> roles_;
  std::vector<PairFactor> factors_;
  std::vector<complex> momentum_;
  complex prefactor_{1.0, 0.0};
};

struct Configuration {
  std::vector<double> coords;
  double min_sep = 0.2;

  int size() const { return static_cast<int>(coords.size()); }
};

namespace detail {

inline bool is_integer(complex p) {
  return p.imag() == 0.0 && std::nearbyint(p.real()) == p.real();
}

/// Separation of the pair from the nearest theta zero, on the circle.
inline double circle_gap(double d) { return std::abs(std::remainder(d, kTwoPi)); }

inline void check_config(const ProductState& state, const Configuration& cfg) {
  if (cfg.size() != state.size())
    throw DomainError("configuration has " + std::to_string(cfg.size()) +
                      " coordinates, state expects " +
                      std::to_string(state.size()));
  for (const auto& fac : state.factors()) {
    const double d = cfg.coords[fac.a] - cfg.coords[fac.b];
    if (circle_gap(d) < cfg.min_sep)
      throw SingularityError("pair (" + std::to_string(fac.a) + "," +
                             std::to_string(fac.b) +
                             ") closer than min_sep");
    if (!is_integer(fac.exponent) && !(d > 0.0 && d < kTwoPi))
      throw DomainError("ordering violated: X_" + std::to_string(fac.a) +
                        " - X_" + std::to_string(fac.b) + " = " +
                        std::to_string(d) + " not in (0, 2pi)");
  }
}

/// log theta(d) on the positive branch, or log|theta| + i*pi for the
/// (integer-exponent only) negative branch.
inline complex log_theta_signed(const EllipticContext& ctx, double d) {
  if (d > 0.0 && d < kTwoPi) return log_theta(ctx, d);
  const double t = theta(ctx, d);
  return {std::log(std::abs(t)), t < 0.0 ? std::numbers::pi : 0.0};
}

}  // namespace detail

/// log Psi(X); the exponential of this is `eval`.
inline complex log_eval(const ProductState& state, const Configuration& cfg,
                        const EllipticContext& ctx) {
  detail::check_config(state, cfg);
  complex acc = std::log(state.prefactor());
  for (int j = 0; j < state.size(); ++j)
    acc += complex(0.0, 1.0) * state.momentum()[j] * cfg.coords[j];
  for (const auto& fac : state.factors())
    acc += fac.exponent *
           detail::log_theta_signed(ctx, cfg.coords[fac.a] - cfg.coords[fac.b]);
  return acc;
}

inline complex eval(const ProductState& state, const Configuration& cfg,
                    const EllipticContext& ctx) {
  return std::exp(log_eval(state, cfg, ctx));
}

/// d/dX_j log Psi.
inline complex log_grad(const ProductState& state, const Configuration& cfg,
                        const EllipticContext& ctx, int j) {
  detail::check_config(state, cfg);
  complex acc = complex(0.0, 1.0) * state.momentum().at(j);
  for (const auto& fac : state.factors()) {
    if (fac.a != j && fac.b != j) continue;
    const double d = cfg.coords[fac.a] - cfg.coords[fac.b];
    const double sign = fac.a == j ? 1.0 : -1.0;
    acc += sign * fac.exponent * phi(ctx, d);
  }
  return acc;
}

/// d^2/dX_j^2 log Psi, using phi' = -V.
inline complex log_second(const ProductState& state, const Configuration& cfg,
                          const EllipticContext& ctx, int j) {
  detail::check_config(state, cfg);
  complex acc{};
  for (const auto& fac : state.factors()) {
    if (fac.a != j && fac.b != j) continue;
    acc -= fac.exponent * V(ctx, cfg.coords[fac.a] - cfg.coords[fac.b]);
  }
  return acc;
}

/// d/dbeta log Psi = sum p (c1 - f).
inline complex log_beta_deriv(const ProductState& state,
                              const Configuration& cfg,
                              const EllipticContext& ctx) {
  detail::check_config(state, cfg);
  complex acc{};
  for (const auto& fac : state.factors())
    acc += fac.exponent *
           (EllipticContext::c1 - f(ctx, cfg.coords[fac.a] - cfg.coords[fac.b]));
  return acc;
}

/// Groundstate of the source Hamiltonian: prod_{J<K} theta(X_J - X_K)^{lambda m_J m_K}.
inline ProductState build_phi0(const MassModel& model) {
  std::vector<CoordinateRole> roles;
  for (complex m : model.masses()) roles.push_back({Group::X, m});
  ProductState state(std::move(roles));
  const complex lambda = model.lambda();
  for (int j = 0; j < model.size(); ++j)
    for (int k = j + 1; k < model.size(); ++k)
      state.add_factor(j, k, lambda * model.mass(j) * model.mass(k));
  return state;
}

namespace detail {

inline std::vector<CoordinateRole> deformed_roles(const DeformedModel& model) {
  std::vector<CoordinateRole> roles;
  for (int i = 0; i < model.size(); ++i) {
    const Group g = model.group_of(i);
    roles.push_back({g, model.embedding_mass(g)});
  }
  return roles;
}

/// Exponent of theta(a - b) in the kernel function for groups (ga, gb),
/// ga appearing no later than gb in the flat layout.
inline complex kernel_exponent(Group ga, Group gb, complex lambda) {
  using G = Group;
  if (ga == G::x && gb == G::x) return lambda;
  if (ga == G::xt && gb == G::xt) return 1.0 / lambda;
  if (ga == G::x && gb == G::xt) return -1.0;
  if (ga == G::y && gb == G::y) return lambda;
  if (ga == G::yt && gb == G::yt) return 1.0 / lambda;
  if (ga == G::y && gb == G::yt) return -1.0;
  if (ga == G::x && gb == G::y) return -lambda;
  if (ga == G::xt && gb == G::yt) return -1.0 / lambda;
  if (ga == G::x && gb == G::yt) return 1.0;
  if (ga == G::xt && gb == G::y) return 1.0;
  throw DomainError("kernel_exponent: unexpected group order");
}

}  // namespace detail

/// Kernel function F_{N,Ntilde,M,Mtilde}: two Psi0 blocks times cross factors.
inline ProductState build_kernel_F(const DeformedModel& model) {
  model.validate();
  ProductState state(detail::deformed_roles(model));
  for (int a = 0; a < model.size(); ++a)
    for (int b = a + 1; b < model.size(); ++b)
      state.add_factor(a, b,
                       detail::kernel_exponent(model.group_of(a),
                                               model.group_of(b), model.lambda));
  return state;
}

/// Psi0^{N,Ntilde}(x, xt): exponents lambda (x-x), 1/lambda (xt-xt), -1 (x-xt).
inline ProductState build_psi0(int N, int Ntilde, complex lambda) {
  if (N + Ntilde < 1) throw ConstraintError("Psi0 needs N + Ntilde >= 1");
  return build_kernel_F(DeformedModel{N, Ntilde, 0, 0, lambda});
}

/// Multiplies by c * exp(i v sum_J m_J X_J) with m_J the role masses. For a
/// kernel function this is c * exp(i v [|x| - |y| - (|xt| - |yt|)/lambda]).
inline ProductState dress_plane_wave(ProductState state, double v, complex c) {
  state.scale(c);
  for (int j = 0; j < state.size(); ++j) state.boost(j, v * state.roles()[j].mass);
  return state;
}

inline ProductState dress_plane_wave(ProductState state, double v, complex c,
                                     const DeformedModel& model) {
  if (state.size() != model.size())
    throw DomainError("dress_plane_wave: state does not match model layout");
  for (int j = 0; j < state.size(); ++j)
    if (state.roles()[j].group != model.group_of(j))
      throw DomainError("dress_plane_wave: coordinate roles not assigned");
  return dress_plane_wave(std::move(state), v, c);
}

}  // namespace ecs
