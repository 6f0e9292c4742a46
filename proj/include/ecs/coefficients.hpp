#pragma once

// Laurent coefficients P_n(z, zt) of
//
//   G(xi) = prod_j theta_annulus(z_j/xi)^{-lambda} prod_J theta_annulus(zt_J/xi)
//
// on 1 < |xi| < 1/q^2, extracted with the K-point trapezoidal rule on the
// circle |xi| = R:  P_n = (1/K) sum_k xi_k^n G(xi_k),  xi_k = R e^{2 pi i k/K}.

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "ecs/elliptic.hpp"
#include "ecs/errors.hpp"
#include "ecs/states.hpp"

namespace ecs {

struct QuadratureSpec {
  int nodes = 256;
  double radius = 0.0;  // 0 selects the default radius

  /// Geometric mean 1/q of the annulus bounds 1 and 1/q^2; 2 when q = 0.
  double resolved_radius(const EllipticContext& ctx) const {
    if (radius != 0.0) return radius;
    return ctx.is_trigonometric() ? 2.0 : 1.0 / ctx.q();
  }

  void validate(const EllipticContext& ctx) const {
    if (nodes < 16)
      throw ConstraintError("quadrature needs at least 16 nodes, got " +
                            std::to_string(nodes));
    const double r = resolved_radius(ctx);
    const double outer = ctx.is_trigonometric()
                             ? std::numeric_limits<double>::infinity()
                             : 1.0 / (ctx.q() * ctx.q());
    if (!(r > 1.0 && r < outer))
      throw ConstraintError("quadrature radius " + std::to_string(r) +
                            " outside (1, 1/q^2)");
  }
};

struct IntRange {
  int lo = -20;
  int hi = 20;

  int count() const { return hi - lo + 1; }
};

/// Inputs of the coefficient extraction: coupling and the unimodular
/// points z_j = e^{i x_j}, zt_J = e^{i xt_J}.
struct AnnulusProduct {
  complex lambda{1.0, 0.0};
  std::vector<complex> z;
  std::vector<complex> zt;

  static AnnulusProduct from_angles(complex lambda, std::span<const double> x,
                                    std::span<const double> xt) {
    AnnulusProduct p{lambda, {}, {}};
    for (double a : x) p.z.push_back(std::polar(1.0, a));
    for (double a : xt) p.zt.push_back(std::polar(1.0, a));
    return p;
  }

  void validate() const {
    auto unit = [](complex w) { return std::abs(std::abs(w) - 1.0) < 1e-12; };
    for (complex w : z)
      if (!unit(w)) throw DomainError("z points must lie on the unit circle");
    for (complex w : zt)
      if (!unit(w)) throw DomainError("zt points must lie on the unit circle");
  }
};

/// G(xi) evaluated as a product of per-factor values; |xi| must be in
/// (1, 1/q^2) so every argument z/xi lies in the open annulus.
inline complex annulus_integrand(const EllipticContext& ctx,
                                 const AnnulusProduct& p, complex xi) {
  complex log_acc{};
  for (complex w : p.z) log_acc -= p.lambda * log_theta_annulus(ctx, w / xi);
  complex prod = std::exp(log_acc);
  for (complex w : p.zt) prod *= theta_annulus(ctx, w / xi);
  return prod;
}

struct Coefficients {
  IntRange range;
  std::vector<complex> values;  // P_n for n = range.lo .. range.hi
  std::vector<double> scales;   // (1/K) sum_k |xi_k^n G(xi_k)|
  double radius = 0.0;
  int nodes = 0;

  complex at(int n) const { return values.at(n - range.lo); }
  double scale_at(int n) const { return scales.at(n - range.lo); }
};

namespace detail {

inline std::vector<complex> quadrature_nodes(int K, double R) {
  std::vector<complex> xi(K);
  for (int k = 0; k < K; ++k) xi[k] = std::polar(R, kTwoPi * k / K);
  return xi;
}

/// xi_k^n / R^n = e^{2 pi i k n / K}, reduced mod K for accuracy.
inline complex node_phase(int k, int n, int K) {
  long long e = (static_cast<long long>(k) * n) % K;
  if (e < 0) e += K;
  return std::polar(1.0, kTwoPi * static_cast<double>(e) / K);
}

}  // namespace detail

/// Trapezoidal extraction of P_n for every n in `range`. Throws
/// ConvergenceError when the half-grid (even nodes) estimate disagrees
/// beyond 1e-10 of the coefficient scale.
inline Coefficients pn_coefficients(const EllipticContext& ctx,
                                    const AnnulusProduct& p, IntRange range,
                                    const QuadratureSpec& quad = {}) {
  p.validate();
  quad.validate(ctx);
  if (range.hi < range.lo) throw DomainError("empty coefficient range");
  const int K = quad.nodes;
  const double R = quad.resolved_radius(ctx);
  const auto xi = detail::quadrature_nodes(K, R);
  std::vector<complex> g(K);
  for (int k = 0; k < K; ++k) g[k] = annulus_integrand(ctx, p, xi[k]);

  Coefficients out{range, {}, {}, R, K};
  for (int n = range.lo; n <= range.hi; ++n) {
    const double rn = std::pow(R, n);
    complex full{}, half{};
    double mass = 0.0;
    for (int k = 0; k < K; ++k) {
      const complex term = rn * detail::node_phase(k, n, K) * g[k];
      full += term;
      if (k % 2 == 0) half += term;
      mass += std::abs(term);
    }
    full /= static_cast<double>(K);
    half /= static_cast<double>(K / 2);
    mass /= static_cast<double>(K);
    if (std::abs(full - half) > 1e-10 * mass + 1e-300)
      throw ConvergenceError("P_" + std::to_string(n) + ": " +
                             std::to_string(K) +
                             " nodes fail the half-grid convergence check");
    out.values.push_back(full);
    out.scales.push_back(mass);
  }
  return out;
}

/// Partial Laurent sum sum_n xi^{-n} P_n over the stored range.
inline complex reconstruct_annulus_product(const EllipticContext& ctx,
                                           const Coefficients& coeffs,
                                           complex xi) {
  const double r = std::abs(xi);
  const double outer = ctx.is_trigonometric()
                           ? std::numeric_limits<double>::infinity()
                           : 1.0 / (ctx.q() * ctx.q());
  if (!(r > 1.0 && r < outer))
    throw DomainError("reconstruct: |xi| outside (1, 1/q^2)");
  complex acc{};
  for (int n = coeffs.range.lo; n <= coeffs.range.hi; ++n)
    acc += std::pow(xi, -n) * coeffs.at(n);
  return acc;
}

/// P_n together with its first and second derivatives in the angles
/// (x_1..x_N, xt_1..xt_Ntilde), obtained by differentiating under the
/// contour integral.
struct CoefficientJet {
  complex value;
  std::vector<complex> d1;
  std::vector<complex> d2;
};

inline CoefficientJet pn_jet(const EllipticContext& ctx,
                             const AnnulusProduct& p, int n,
                             const QuadratureSpec& quad = {}) {
  p.validate();
  quad.validate(ctx);
  const int K = quad.nodes;
  const double R = quad.resolved_radius(ctx);
  const auto xi = detail::quadrature_nodes(K, R);
  const std::size_t dim = p.z.size() + p.zt.size();
  CoefficientJet jet{0.0, std::vector<complex>(dim), std::vector<complex>(dim)};
  const complex I(0.0, 1.0);
  std::vector<complex> g1(dim), g2(dim);
  const double rn = std::pow(R, n);
  for (int k = 0; k < K; ++k) {
    const complex gk = annulus_integrand(ctx, p, xi[k]);
    std::size_t idx = 0;
    auto accumulate = [&](complex w, complex expo) {
      const auto lj = theta_annulus_log_jet(ctx, w / xi[k]);
      const complex d1 = expo * I * lj.first;  // d/dx log G
      const complex d2 = -expo * lj.second;    // d^2/dx^2 log G
      g1[idx] = d1;
      g2[idx] = d1 * d1 + d2;
      ++idx;
    };
    for (complex w : p.z) accumulate(w, -p.lambda);
    for (complex w : p.zt) accumulate(w, 1.0);
    const complex weight = rn * detail::node_phase(k, n, K) * gk;
    jet.value += weight;
    for (std::size_t i = 0; i < dim; ++i) {
      jet.d1[i] += weight * g1[i];
      jet.d2[i] += weight * g2[i];
    }
  }
  jet.value /= static_cast<double>(K);
  for (std::size_t i = 0; i < dim; ++i) {
    jet.d1[i] /= static_cast<double>(K);
    jet.d2[i] /= static_cast<double>(K);
  }
  return jet;
}

/// Psi_n(x, xt) = Psi0^{N,Ntilde}(x, xt) P_n(e^{ix}, e^{ixt}); P_n is
/// re-extracted at every evaluation.
class CoefficientState {
 public:
  CoefficientState(int N, int Ntilde, complex lambda, int n,
                   QuadratureSpec quad = {})
      : N_(N), Ntilde_(Ntilde), lambda_(lambda), n_(n), quad_(quad),
        psi0_(build_psi0(N, Ntilde, lambda)) {}

  int size() const { return N_ + Ntilde_; }
  int N() const { return N_; }
  int Ntilde() const { return Ntilde_; }
  int n() const { return n_; }
  complex lambda() const { return lambda_; }
  const QuadratureSpec& quadrature() const { return quad_; }
  const ProductState& psi0() const { return psi0_; }

  AnnulusProduct annulus_product(const Configuration& cfg) const {
    const std::span<const double> all(cfg.coords);
    return AnnulusProduct::from_angles(lambda_, all.subspan(0, N_),
                                       all.subspan(N_, Ntilde_));
  }

  Coefficients coefficient(const Configuration& cfg,
                           const EllipticContext& ctx) const {
    return pn_coefficients(ctx, annulus_product(cfg), {n_, n_}, quad_);
  }

  complex eval(const Configuration& cfg, const EllipticContext& ctx) const {
    return ecs::eval(psi0_, cfg, ctx) * coefficient(cfg, ctx).at(n_);
  }

 private:
  int N_;
  int Ntilde_;
  complex lambda_;
  int n_;
  QuadratureSpec quad_;
  ProductState psi0_;
};

}  // namespace ecs
