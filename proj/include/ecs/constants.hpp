#pragma once

// Closed-form eigenvalue constants of the source identity and of the
// kernel-function identities derived from it.

#include <complex>
#include <string>

#include "ecs/elliptic.hpp"
#include "ecs/errors.hpp"
#include "ecs/models.hpp"

namespace ecs {

/// E0 = lambda^2 ((|m^2||m| - |m^3|) c0 + (|m|^2 - |m^2|) |m| c1).
inline complex energy_E0_prop1(const MassModel& model,
                               const EllipticContext& ctx) {
  const complex l2 = model.lambda() * model.lambda();
  const complex s1 = model.sum_m(), s2 = model.sum_m2(), s3 = model.sum_m3();
  return l2 * ((s2 * s1 - s3) * ctx.c0() +
               (s1 * s1 - s2) * s1 * EllipticContext::c1);
}

/// Same constant as the pair sum
/// sum_{J<K} lambda^2 m_J m_K [(m_J + m_K) c0 + 2 |m| c1].
inline complex energy_E0_pair_sum(const MassModel& model,
                                  const EllipticContext& ctx) {
  const complex l2 = model.lambda() * model.lambda();
  complex acc{};
  for (int j = 0; j < model.size(); ++j)
    for (int k = j + 1; k < model.size(); ++k) {
      const complex mj = model.mass(j), mk = model.mass(k);
      acc += l2 * mj * mk *
             ((mj + mk) * ctx.c0() + 2.0 * model.sum_m() * EllipticContext::c1);
    }
  return acc;
}

/// Constant C_{N,Ntilde,M,Mtilde} of the kernel-function identity.
inline complex constant_C(const DeformedModel& model,
                          const EllipticContext& ctx) {
  model.validate();
  const complex l = model.lambda;
  const double N = model.N, Nt = model.Ntilde, M = model.M, Mt = model.Mtilde;
  const double d = N - M, dt = Nt - Mt;
  const complex a = (N * (N - 1) - M * (M - 1)) * l * l -
                    (N + M) * dt * l + d * (Nt + Mt) -
                    (Nt * (Nt - 1) - Mt * (Mt - 1)) / l;
  const complex b = d * (d * d - N - M) * l * l -
                    (3 * d * d - N - M) * dt * l +
                    d * (3 * dt * dt - Nt - Mt) -
                    dt * (dt * dt - Nt - Mt) / l;
  return a * ctx.c0() + b * EllipticContext::c1;
}

/// Constant shift [N - M - (Ntilde - Mtilde)/lambda] v^2 from dressing the
/// kernel function with exp(i v [|x| - |y| - (|xt| - |yt|)/lambda]).
inline complex plane_wave_shift(const DeformedModel& model, double v) {
  return (static_cast<double>(model.N - model.M) -
          static_cast<double>(model.Ntilde - model.Mtilde) / model.lambda) *
         v * v;
}

/// E0 = (N - Ntilde^2/N) c0 for lambda = Ntilde/N.
inline double energy_E0_cor2(int N, int Ntilde, const EllipticContext& ctx) {
  if (N < 1) throw ConstraintError("energy_E0_cor2 needs N >= 1");
  if (Ntilde < 0) throw ConstraintError("Ntilde must be non-negative");
  const double n = N, nt = Ntilde;
  return (n - nt * nt / n) * ctx.c0();
}

/// E(n) = n^2 + (N - 1 - Ntilde^2/(N - 1)) c0 for lambda = Ntilde/(N - 1).
inline double energy_En_cor3(int N, int Ntilde, int n,
                             const EllipticContext& ctx) {
  if (N < 2) throw ConstraintError("energy_En_cor3 needs N >= 2");
  if (Ntilde < 1) throw ConstraintError("energy_En_cor3 needs Ntilde >= 1");
  const double nm1 = N - 1, nt = Ntilde;
  return static_cast<double>(n) * n + (nm1 - nt * nt / nm1) * ctx.c0();
}

/// Beta-dependent redefinition V -> V + b0, theta -> B1 theta with
/// b1 = d/dbeta log B1.
struct ShiftSpec {
  double b0 = 0.0;
  double b1 = 0.0;
};

/// E0 after the redefinition:
/// E0 - (lambda^2 (|m^2||m| - |m^3|) - lambda (N - 1) |m|) b0
///    - lambda^2 (|m|^2 - |m^2|) |m| b1.
inline complex shifted_E0(const MassModel& model, const EllipticContext& ctx,
                          ShiftSpec shift) {
  const complex l = model.lambda();
  const complex s1 = model.sum_m(), s2 = model.sum_m2(), s3 = model.sum_m3();
  const double n1 = model.size() - 1;
  return energy_E0_prop1(model, ctx) -
         (l * l * (s2 * s1 - s3) - l * n1 * s1) * shift.b0 -
         l * l * (s1 * s1 - s2) * s1 * shift.b1;
}

/// Same shift written as pair sums over gamma_JK and lambda m_J m_K.
inline complex shifted_E0_pair_sum(const MassModel& model,
                                   const EllipticContext& ctx,
                                   ShiftSpec shift) {
  const complex l = model.lambda();
  complex sum_gamma{}, sum_pair{};
  for (int j = 0; j < model.size(); ++j)
    for (int k = j + 1; k < model.size(); ++k) {
      sum_gamma += model.gamma(j, k);
      sum_pair += l * model.mass(j) * model.mass(k);
    }
  return energy_E0_pair_sum(model, ctx) - sum_gamma * shift.b0 -
         2.0 * l * model.sum_m() * sum_pair * shift.b1;
}

}  // namespace ecs
