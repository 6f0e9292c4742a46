#pragma once

// Application of the source Hamiltonian
//
//   calH = -sum_J (1/m_J) d^2/dX_J^2 + sum_{J<K} gamma_JK V(X_J - X_K)
//
// and of the deformed operators H_{N,Ntilde}(x, xt) to a state, returned
// as the local ratio (O Psi)/Psi at one configuration.
//
// Two backends:
//   analytic  (1/Psi) d^2 Psi = (d log Psi)^2 + d^2 log Psi from phi and V;
//             d/dbeta log Psi from f.
//   fd        central differences on `eval` only, with Richardson
//             extrapolation; beta derivatives rebuild the context at beta+-h.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "ecs/coefficients.hpp"
#include "ecs/elliptic.hpp"
#include "ecs/errors.hpp"
#include "ecs/fd.hpp"
#include "ecs/models.hpp"
#include "ecs/states.hpp"

namespace ecs {

enum class Backend { analytic, fd };

inline const char* to_string(Backend b) {
  return b == Backend::analytic ? "analytic" : "fd";
}

enum class Side { left, right };

/// Any wavefunction evaluable at a configuration for a given context.
using StateFunction =
    std::function<complex(const Configuration&, const EllipticContext&)>;

inline StateFunction as_function(const ProductState& state) {
  return [state](const Configuration& cfg, const EllipticContext& ctx) {
    return eval(state, cfg, ctx);
  };
}

inline StateFunction as_function(const CoefficientState& state) {
  return [state](const Configuration& cfg, const EllipticContext& ctx) {
    return state.eval(cfg, ctx);
  };
}

/// Local ratio (O Psi)/Psi. `max_term` is the magnitude of the largest
/// single contribution (one kinetic or potential term); scale = 1 + max_term.
struct OperatorApplication {
  complex value{};
  double max_term = 0.0;
  Backend backend = Backend::analytic;
  double error_estimate = 0.0;  // FD only; 0 for the analytic backend

  double scale() const { return 1.0 + max_term; }

  void add_term(complex t) {
    value += t;
    max_term = std::max(max_term, std::abs(t));
  }

  /// Merge another application (e.g. the right-hand operator) scaled by `w`.
  void add(const OperatorApplication& other, complex w = 1.0) {
    value += w * other.value;
    max_term = std::max(max_term, std::abs(w) * other.max_term);
    error_estimate += std::abs(w) * other.error_estimate;
  }
};

struct FdSettings {
  StencilSpec space{};
  StencilSpec beta{4, 1e-3, 1};
};

namespace detail {

inline void require_stencil_fits(const StencilSpec& spec,
                                 const Configuration& cfg) {
  spec.validate();
  if (spec.h > cfg.min_sep / 10.0)
    throw ConstraintError("fd step " + std::to_string(spec.h) +
                          " exceeds min_sep/10");
}

/// (d^2_j Psi)/Psi for the listed coordinates, analytic route.
inline std::vector<complex> kinetic_ratios(const ProductState& state,
                                           const Configuration& cfg,
                                           const EllipticContext& ctx,
                                           const std::vector<int>& coords) {
  std::vector<complex> out;
  for (int j : coords) {
    const complex g = log_grad(state, cfg, ctx, j);
    out.push_back(g * g + log_second(state, cfg, ctx, j));
  }
  return out;
}

/// Same for Psi_n = Psi0 P_n, with P_n differentiated under the integral.
inline std::vector<complex> kinetic_ratios(const CoefficientState& state,
                                           const Configuration& cfg,
                                           const EllipticContext& ctx,
                                           const std::vector<int>& coords) {
  const auto jet =
      pn_jet(ctx, state.annulus_product(cfg), state.n(), state.quadrature());
  if (jet.value == 0.0) throw ConvergenceError("P_n vanishes at configuration");
  std::vector<complex> out;
  for (int j : coords) {
    const complex g = log_grad(state.psi0(), cfg, ctx, j);
    const complex s = log_second(state.psi0(), cfg, ctx, j);
    const complex p1 = jet.d1[j] / jet.value;
    const complex p2 = jet.d2[j] / jet.value;
    out.push_back(g * g + s + 2.0 * g * p1 + p2);
  }
  return out;
}

/// FD route: only evaluations of the state are used.
inline std::vector<complex> kinetic_ratios_fd(const StateFunction& psi,
                                              const Configuration& cfg,
                                              const EllipticContext& ctx,
                                              const std::vector<int>& coords,
                                              const StencilSpec& spec,
                                              std::vector<double>& errors) {
  require_stencil_fits(spec, cfg);
  const complex center = psi(cfg, ctx);
  if (center == 0.0) throw DomainError("state vanishes at configuration");
  Configuration shifted = cfg;
  shifted.min_sep = cfg.min_sep / 2.0;
  std::vector<complex> out;
  for (int j : coords) {
    auto along = [&](double t) {
      shifted.coords = cfg.coords;
      shifted.coords[j] += t;
      return psi(shifted, ctx);
    };
    const auto d2 = second_derivative(along, spec);
    out.push_back(d2.value / center);
    errors.push_back(d2.error / std::abs(center));
  }
  return out;
}

inline std::vector<int> iota(int begin, int end) {
  std::vector<int> v;
  for (int i = begin; i < end; ++i) v.push_back(i);
  return v;
}

inline OperatorApplication assemble_calH(const MassModel& model,
                                         const std::vector<complex>& kinetic,
                                         const Configuration& cfg,
                                         const EllipticContext& ctx,
                                         Backend backend) {
  OperatorApplication app;
  app.backend = backend;
  for (int j = 0; j < model.size(); ++j)
    app.add_term(-kinetic[j] / model.mass(j));
  for (int j = 0; j < model.size(); ++j)
    for (int k = j + 1; k < model.size(); ++k) {
      const complex g = model.gamma(j, k);
      if (g != 0.0) app.add_term(g * V(ctx, cfg.coords[j] - cfg.coords[k]));
    }
  return app;
}

/// Indices of the side's coordinates and the side's own (n, ntilde).
struct SideLayout {
  std::vector<int> coords;
  int n = 0;
  int ntilde = 0;
};

inline SideLayout side_layout(const DeformedModel& model, Side side) {
  model.validate();
  if (side == Side::left) {
    if (model.left_size() < 1)
      throw ConstraintError("left operator needs N + Ntilde >= 1");
    return {iota(0, model.left_size()), model.N, model.Ntilde};
  }
  if (model.right_size() < 1)
    throw ConstraintError("right operator needs M + Mtilde >= 1");
  return {iota(model.left_size(), model.size()), model.M, model.Mtilde};
}

inline OperatorApplication assemble_deformed(const DeformedModel& model,
                                             const SideLayout& layout,
                                             const std::vector<complex>& kinetic,
                                             const Configuration& cfg,
                                             const EllipticContext& ctx,
                                             Backend backend) {
  const complex lam = model.lambda;
  OperatorApplication app;
  app.backend = backend;
  const auto& idx = layout.coords;
  auto tilde = [&](std::size_t i) { return static_cast<int>(i) >= layout.n; };
  for (std::size_t i = 0; i < idx.size(); ++i)
    app.add_term(tilde(i) ? lam * kinetic[i] : -kinetic[i]);
  const complex g_plain = 2.0 * lam * (lam - 1.0);
  const complex g_tilde = 2.0 * (lam - 1.0) / lam;
  const complex g_mixed = 2.0 * (1.0 - lam);
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t k = i + 1; k < idx.size(); ++k) {
      const complex g = !tilde(i) && !tilde(k) ? g_plain
                        : tilde(i) && tilde(k) ? g_tilde
                                               : g_mixed;
      if (g != 0.0)
        app.add_term(g * V(ctx, cfg.coords[idx[i]] - cfg.coords[idx[k]]));
    }
  return app;
}


template <class Kinetic>
OperatorApplication calH_from(const MassModel& model, const Kinetic& kinetic,
                              const Configuration& cfg,
                              const EllipticContext& ctx, Backend backend,
                              const std::vector<double>& errors) {
  auto app = assemble_calH(model, kinetic, cfg, ctx, backend);
  for (std::size_t j = 0; j < errors.size(); ++j)
    app.error_estimate += errors[j] / std::abs(model.mass(static_cast<int>(j)));
  return app;
}

inline OperatorApplication deformed_from(const DeformedModel& model,
                                         const SideLayout& layout,
                                         const std::vector<complex>& kinetic,
                                         const Configuration& cfg,
                                         const EllipticContext& ctx,
                                         Backend backend,
                                         const std::vector<double>& errors) {
  auto app = assemble_deformed(model, layout, kinetic, cfg, ctx, backend);
  for (std::size_t i = 0; i < errors.size(); ++i)
    app.error_estimate += errors[i] * (static_cast<int>(i) >= layout.n
                                           ? std::abs(model.lambda)
                                           : 1.0);
  return app;
}

inline void require_size(int state_size, int model_size, const char* what) {
  if (state_size != model_size)
    throw DomainError(std::string(what) +
                      ": state coordinates do not match the model layout");
}

}  // namespace detail

// ------------------------------------------------------------------ calH

/// (calH Psi)/Psi for a product state.
inline OperatorApplication apply_calH(const MassModel& model,
                                      const ProductState& state,
                                      const Configuration& cfg,
                                      const EllipticContext& ctx,
                                      Backend backend,
                                      const FdSettings& fd = {}) {
  detail::require_size(state.size(), model.size(), "apply_calH");
  const auto coords = detail::iota(0, model.size());
  std::vector<double> errors;
  if (backend == Backend::analytic)
    return detail::calH_from(model,
                             detail::kinetic_ratios(state, cfg, ctx, coords),
                             cfg, ctx, backend, errors);
  const auto kin = detail::kinetic_ratios_fd(as_function(state), cfg, ctx,
                                             coords, fd.space, errors);
  return detail::calH_from(model, kin, cfg, ctx, backend, errors);
}

/// (calH Psi)/Psi for an arbitrary evaluable state; FD backend only.
inline OperatorApplication apply_calH(const MassModel& model,
                                      const StateFunction& psi,
                                      const Configuration& cfg,
                                      const EllipticContext& ctx,
                                      Backend backend,
                                      const FdSettings& fd = {}) {
  if (backend == Backend::analytic)
    throw ConstraintError("analytic backend needs a product state");
  detail::require_size(cfg.size(), model.size(), "apply_calH");
  const auto coords = detail::iota(0, model.size());
  std::vector<double> errors;
  const auto kin =
      detail::kinetic_ratios_fd(psi, cfg, ctx, coords, fd.space, errors);
  return detail::calH_from(model, kin, cfg, ctx, backend, errors);
}

// -------------------------------------------------------- H_{N,Ntilde}

/// (H Psi)/Psi with H = H_{N,Ntilde}(x, xt) (left) or H_{M,Mtilde}(y, yt)
/// (right) acting on a state laid out as (x, xt, y, yt).
inline OperatorApplication apply_H_deformed(const DeformedModel& model,
                                            Side side,
                                            const ProductState& state,
                                            const Configuration& cfg,
                                            const EllipticContext& ctx,
                                            Backend backend,
                                            const FdSettings& fd = {}) {
  detail::require_size(state.size(), model.size(), "apply_H_deformed");
  const auto layout = detail::side_layout(model, side);
  std::vector<double> errors;
  if (backend == Backend::analytic)
    return detail::deformed_from(
        model, layout, detail::kinetic_ratios(state, cfg, ctx, layout.coords),
        cfg, ctx, backend, errors);
  const auto kin = detail::kinetic_ratios_fd(as_function(state), cfg, ctx,
                                             layout.coords, fd.space, errors);
  return detail::deformed_from(model, layout, kin, cfg, ctx, backend, errors);
}

inline OperatorApplication apply_H_deformed(const DeformedModel& model,
                                            Side side,
                                            const CoefficientState& state,
                                            const Configuration& cfg,
                                            const EllipticContext& ctx,
                                            Backend backend,
                                            const FdSettings& fd = {}) {
  detail::require_size(state.size(), model.size(), "apply_H_deformed");
  const auto layout = detail::side_layout(model, side);
  std::vector<double> errors;
  if (backend == Backend::analytic)
    return detail::deformed_from(
        model, layout, detail::kinetic_ratios(state, cfg, ctx, layout.coords),
        cfg, ctx, backend, errors);
  const auto kin = detail::kinetic_ratios_fd(as_function(state), cfg, ctx,
                                             layout.coords, fd.space, errors);
  return detail::deformed_from(model, layout, kin, cfg, ctx, backend, errors);
}

/// FD backend only.
inline OperatorApplication apply_H_deformed(const DeformedModel& model,
                                            Side side,
                                            const StateFunction& psi,
                                            const Configuration& cfg,
                                            const EllipticContext& ctx,
                                            Backend backend,
                                            const FdSettings& fd = {}) {
  if (backend == Backend::analytic)
    throw ConstraintError("analytic backend needs a product state");
  detail::require_size(cfg.size(), model.size(), "apply_H_deformed");
  const auto layout = detail::side_layout(model, side);
  std::vector<double> errors;
  const auto kin = detail::kinetic_ratios_fd(psi, cfg, ctx, layout.coords,
                                             fd.space, errors);
  return detail::deformed_from(model, layout, kin, cfg, ctx, backend, errors);
}

// --------------------------------------------------------------- d/dbeta

struct BetaDerivative {
  complex value{};
  double error_estimate = 0.0;
};

/// (d/dbeta Psi)/Psi by finite differences in beta; only `psi` is used.
inline BetaDerivative beta_derivative(const StateFunction& psi,
                                      const Configuration& cfg,
                                      const EllipticContext& ctx,
                                      const FdSettings& fd = {}) {
  if (ctx.is_trigonometric())
    throw DomainError("beta derivative undefined in the trigonometric limit");
  fd.beta.validate();
  if (fd.beta.reach() >= ctx.beta() / 2.0)
    throw ConstraintError("beta stencil reaches beta <= 0");
  const complex center = psi(cfg, ctx);
  if (center == 0.0) throw DomainError("state vanishes at configuration");
  auto along = [&](double t) { return psi(cfg, ctx.with_beta(ctx.beta() + t)); };
  const auto d = first_derivative(along, fd.beta);
  return {d.value / center, d.error / std::abs(center)};
}

inline BetaDerivative beta_derivative(const ProductState& state,
                                      const Configuration& cfg,
                                      const EllipticContext& ctx,
                                      Backend backend,
                                      const FdSettings& fd = {}) {
  if (ctx.is_trigonometric())
    throw DomainError("beta derivative undefined in the trigonometric limit");
  if (backend == Backend::analytic) return {log_beta_deriv(state, cfg, ctx), 0.0};
  return beta_derivative(as_function(state), cfg, ctx, fd);
}

// ------------------------------------------- two-body / three-body split

/// Pieces of W = (1/Phi0) sum_J (1/m_J) d^2_J Phi0 for the source groundstate:
/// `direct` is the per-coordinate sum, `two_body` + `three_body` its split
/// into pair and triple terms (phi, phi' = -V), and `reduced` the form after
/// the functional identities (gamma V, f, c0). The triple sum counts every
/// product phi(X_J - X_K) phi(X_J - X_L) twice (once per ordering of K, L).
struct SourceDecomposition {
  complex direct{};
  complex two_body{};
  complex three_body{};
  complex reduced{};
};

inline SourceDecomposition decompose_source(const MassModel& model,
                                            const Configuration& cfg,
                                            const EllipticContext& ctx) {
  const auto state = build_phi0(model);
  const auto coords = detail::iota(0, model.size());
  const auto kin = detail::kinetic_ratios(state, cfg, ctx, coords);
  const complex lam = model.lambda();
  const int n = model.size();
  const auto& X = cfg.coords;
  const auto& m = model.masses();
  SourceDecomposition out;
  for (int j = 0; j < n; ++j) out.direct += kin[j] / m[j];
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      const double d = X[j] - X[k];
      const double p = phi(ctx, d);
      out.two_body += lam * (m[j] + m[k]) * (-V(ctx, d)) +
                      lam * lam * m[j] * m[k] * (m[j] + m[k]) * p * p;
      out.reduced += model.gamma(j, k) * V(ctx, d) -
                     2.0 * lam * lam * model.sum_m() * m[j] * m[k] * f(ctx, d) -
                     lam * lam * ctx.c0() * m[j] * m[k] * (m[j] + m[k]);
    }
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k)
      for (int l = k + 1; l < n; ++l) {
        const double pjk = phi(ctx, X[j] - X[k]);
        const double pjl = phi(ctx, X[j] - X[l]);
        const double pkl = phi(ctx, X[k] - X[l]);
        // phi(K-J) = -phi(J-K) etc.; each J-centred product arises from
        // both orderings of its two partners, hence the factor 2.
        out.three_body += 2.0 * lam * lam * m[j] * m[k] * m[l] *
                          (pjk * pjl + pkl * (-pjk) + (-pjl) * (-pkl));
      }
  return out;
}

}  // namespace ecs
