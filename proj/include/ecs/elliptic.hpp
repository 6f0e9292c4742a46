#pragma once

// Elliptic building blocks on the lattice with periods 2*pi and i*beta:
//
//   theta(r) = sin(r/2) prod_{m>=1} (1 - 2 q^{2m} cos r + q^{4m}),  q = e^{-beta/2}
//   phi(r)   = d/dr log theta(r)
//   V(r)     = sum_{m in Z} 1 / (4 sin^2((r + i beta m)/2))
//   f(r)     = -d/dbeta log theta(r) + 1/12
//   c0       = 1/12 - sum_{m>=1} 1 / (2 sinh^2(beta m / 2))
//
// plus the multiplicative theta on the annulus q^2 < |z| < 1,
//
//   theta_annulus(z) = (1 - z) prod_{m>=1} (1 - q^{2m} z)(1 - q^{2m} / z).
//
// q = 0 (beta = infinity) is the trigonometric limit and is handled by
// closed-form branches, not by running the series with q = 0.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "ecs/errors.hpp"

namespace ecs {

using complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct TruncationPolicy {
  double target_eps = 1e-16;  // absolute tail bound requested from every series
  int max_terms = 256;
};

/// Immutable evaluation environment: fixed beta (equivalently q), the
/// truncation policy and the cached nome powers q^{2m} and constant c0.
class EllipticContext {
 public:
  static constexpr double c1 = 1.0 / 12.0;

  static EllipticContext from_beta(double beta, TruncationPolicy policy = {},
                                   double delta_sing = 1e-6) {
    if (!(beta > 0.0))
      throw DomainError("beta must be positive, got " + std::to_string(beta));
    return EllipticContext(beta, policy, delta_sing);
  }

  /// q = 0 selects the trigonometric limit.
  static EllipticContext from_q(double q, TruncationPolicy policy = {},
                                double delta_sing = 1e-6) {
    if (!(q >= 0.0 && q < 1.0))
      throw DomainError("q must lie in [0, 1), got " + std::to_string(q));
    if (q == 0.0) return trigonometric(policy, delta_sing);
    return EllipticContext(-2.0 * std::log(q), policy, delta_sing);
  }

  static EllipticContext trigonometric(TruncationPolicy policy = {},
                                       double delta_sing = 1e-6) {
    return EllipticContext(std::numeric_limits<double>::infinity(), policy,
                           delta_sing);
  }

  double beta() const { return beta_; }
  double q() const { return q_; }
  bool is_trigonometric() const { return q_ == 0.0; }
  const TruncationPolicy& policy() const { return policy_; }
  double delta_sing() const { return delta_sing_; }

  /// Number of retained q-series terms M (0 in the trigonometric limit).
  int terms() const { return static_cast<int>(nome_.size()); }

  /// q^{2m} for m = 1..terms(), stored at index m-1.
  const std::vector<double>& nome_powers() const { return nome_; }

  double c0() const { return c0_; }

  /// Same context at a different beta; used by finite differences in beta.
  EllipticContext with_beta(double beta) const {
    return from_beta(beta, policy_, delta_sing_);
  }

 private:
  EllipticContext(double beta, TruncationPolicy policy, double delta_sing)
      : beta_(beta), policy_(policy), delta_sing_(delta_sing) {
    if (!(policy_.target_eps > 0.0) || policy_.max_terms < 1)
      throw DomainError("invalid truncation policy");
    q_ = std::isinf(beta_) ? 0.0 : std::exp(-beta_ / 2.0);
    c0_ = c1;
    if (q_ == 0.0) return;
    // Smallest M with M q^{2M} < eps; the m-weighted bound also covers the
    // f series, whose terms carry an extra factor m.
    for (int m = 1;; ++m) {
      if (m > policy_.max_terms)
        throw TruncationError("q-series needs more than max_terms=" +
                              std::to_string(policy_.max_terms) +
                              " terms at beta=" + std::to_string(beta_));
      const double qm = std::exp(-beta_ * m);
      nome_.push_back(qm);
      if (m * qm < policy_.target_eps && qm < policy_.target_eps) break;
    }
    // 1/(2 sinh^2(beta m / 2)) = 2 Q / (1 - Q)^2 with Q = q^{2m}; summed
    // from the small end.
    double tail = 0.0;
    for (auto it = nome_.rbegin(); it != nome_.rend(); ++it) {
      const double qm = *it;
      tail += 2.0 * qm / ((1.0 - qm) * (1.0 - qm));
    }
    c0_ = c1 - tail;
  }

  double beta_;
  double q_ = 0.0;
  TruncationPolicy policy_;
  double delta_sing_;
  std::vector<double> nome_;
  double c0_ = c1;
};

namespace detail {

/// Signed distance from r to the nearest multiple of 2*pi.
inline double lattice_offset(double r) { return std::remainder(r, kTwoPi); }

inline void guard_singular(const EllipticContext& ctx, double r,
                           const char* what) {
  if (std::abs(lattice_offset(r)) < ctx.delta_sing())
    throw SingularityError(std::string(what) + ": argument " +
                           std::to_string(r) +
                           " is within delta_sing of a lattice point");
}

}  // namespace detail

inline double c0(const EllipticContext& ctx) { return ctx.c0(); }

/// Odd, 2*pi-antiperiodic, positive on (0, 2*pi).
inline double theta(const EllipticContext& ctx, double r) {
  const double s = std::sin(r / 2.0);
  if (ctx.is_trigonometric()) return s;
  const double c = std::cos(r);
  double prod = 1.0;
  for (double qm : ctx.nome_powers()) prod *= 1.0 - 2.0 * qm * c + qm * qm;
  return s * prod;
}

/// log theta(r) for r in (0, 2*pi), where theta is positive.
inline double log_theta(const EllipticContext& ctx, double r) {
  if (!(r > 0.0 && r < kTwoPi))
    throw DomainError("log_theta: argument " + std::to_string(r) +
                      " outside (0, 2pi)");
  detail::guard_singular(ctx, r, "log_theta");
  double acc = std::log(std::sin(r / 2.0));
  const double c = std::cos(r);
  for (double qm : ctx.nome_powers()) acc += std::log1p(qm * qm - 2.0 * qm * c);
  return acc;
}

/// Lattice sum with the +m and -m images paired; each pair equals
/// -2 Re[w / (1 - w)^2] with w = q^{2m} e^{ir}, so no term overflows.
inline double V(const EllipticContext& ctx, double r) {
  detail::guard_singular(ctx, r, "V");
  const double s = std::sin(r / 2.0);
  const double central = 1.0 / (4.0 * s * s);
  if (ctx.is_trigonometric()) return central;
  const complex eir = std::polar(1.0, r);
  const auto& pol = ctx.policy();
  double images = 0.0;
  for (int m = 1;; ++m) {
    if (m > pol.max_terms)
      throw TruncationError("V: lattice sum exceeded max_terms");
    const complex w = std::exp(-ctx.beta() * m) * eir;
    const complex one_minus = 1.0 - w;
    const complex term = w / (one_minus * one_minus);
    images -= 2.0 * term.real();
    if (2.0 * std::abs(term) < pol.target_eps) break;
  }
  return central + images;
}

inline double phi(const EllipticContext& ctx, double r) {
  detail::guard_singular(ctx, r, "phi");
  const double head = 0.5 / std::tan(r / 2.0);
  if (ctx.is_trigonometric()) return head;
  const double c = std::cos(r);
  const double s = std::sin(r);
  double sum = 0.0;
  for (double qm : ctx.nome_powers())
    sum += 2.0 * qm * s / (1.0 - 2.0 * qm * c + qm * qm);
  return head + sum;
}

/// Term-wise beta derivative of the product, using d/dbeta q^{2m} = -m q^{2m}.
inline double f(const EllipticContext& ctx, double r) {
  detail::guard_singular(ctx, r, "f");
  if (ctx.is_trigonometric()) return EllipticContext::c1;
  const double c = std::cos(r);
  const auto& nome = ctx.nome_powers();
  double sum = 0.0;
  for (std::size_t i = nome.size(); i-- > 0;) {
    const double qm = nome[i];
    const double m = static_cast<double>(i + 1);
    sum += 2.0 * m * qm * (qm - c) / (1.0 - 2.0 * qm * c + qm * qm);
  }
  return EllipticContext::c1 + sum;
}

/// `open`: q^2 < |z| < 1 strictly. `closed` additionally admits the
/// boundary circles (away from the zeros at z = 1 and z = q^2); it exists
/// for continuity checks against the real-argument theta.
enum class AnnulusDomain { open, closed };

namespace detail {

inline void guard_annulus(const EllipticContext& ctx, complex z,
                          AnnulusDomain dom) {
  const double r = std::abs(z);
  const double inner = ctx.q() * ctx.q();
  const bool inside = dom == AnnulusDomain::open
                          ? (r > inner && r < 1.0)
                          : (r >= inner * (1.0 - 1e-14) && r <= 1.0 + 1e-14 && r > 0.0);
  if (!inside)
    throw DomainError("theta_annulus: |z| = " + std::to_string(r) +
                      " outside the annulus (" + std::to_string(inner) +
                      ", 1)");
  if (std::abs(1.0 - z) < ctx.delta_sing() ||
      (inner > 0.0 && std::abs(z - inner) < ctx.delta_sing()))
    throw SingularityError("theta_annulus: z is at a zero of the product");
}

}  // namespace detail

inline complex theta_annulus(const EllipticContext& ctx, complex z,
                             AnnulusDomain dom = AnnulusDomain::open) {
  detail::guard_annulus(ctx, z, dom);
  complex prod = 1.0 - z;
  const complex zinv = 1.0 / z;
  for (double qm : ctx.nome_powers()) prod *= (1.0 - qm * z) * (1.0 - qm * zinv);
  return prod;
}

/// Sum of principal logs of the factors. Each factor has positive real
/// part on the annulus, so the sum is analytic there with no winding.
inline complex log_theta_annulus(const EllipticContext& ctx, complex z,
                                 AnnulusDomain dom = AnnulusDomain::open) {
  detail::guard_annulus(ctx, z, dom);
  complex acc = std::log(1.0 - z);
  const complex zinv = 1.0 / z;
  for (double qm : ctx.nome_powers())
    acc += std::log(1.0 - qm * z) + std::log(1.0 - qm * zinv);
  return acc;
}

/// Logarithmic derivatives of theta_annulus in log z:
///   first  = z d/dz log theta_annulus(z)
///   second = z d/dz (first)
struct AnnulusLogJet {
  complex first;
  complex second;
};

inline AnnulusLogJet theta_annulus_log_jet(
    const EllipticContext& ctx, complex z,
    AnnulusDomain dom = AnnulusDomain::open) {
  detail::guard_annulus(ctx, z, dom);
  // For a factor (1 - u) with u = a z^s (s = +-1):
  //   z d/dz log(1-u) = -s u/(1-u),  (z d/dz)^2 log(1-u) = -u/(1-u)^2.
  auto add = [](AnnulusLogJet& jet, complex u, double s) {
    const complex om = 1.0 - u;
    jet.first -= s * u / om;
    jet.second -= u / (om * om);
  };
  AnnulusLogJet jet{};
  add(jet, z, 1.0);
  const complex zinv = 1.0 / z;
  for (double qm : ctx.nome_powers()) {
    add(jet, qm * z, 1.0);
    add(jet, qm * zinv, -1.0);
  }
  return jet;
}

}  // namespace ecs
