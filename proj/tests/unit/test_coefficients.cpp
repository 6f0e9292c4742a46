#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ecs/coefficients.hpp"
#include "ecs/sampling.hpp"
#include "oracles.hpp"

using namespace ecs;

namespace {

/// Coefficients of u^n in prod_j (1 - z_j u)^{-1} prod_J (1 - zt_J u) for
/// n = 0..nmax: geometric series multiplied out (q = 0, lambda = 1).
std::vector<complex> geometric_oracle(const std::vector<complex>& z,
                                      const std::vector<complex>& zt, int nmax) {
  std::vector<complex> c(nmax + 1);
  c[0] = 1.0;
  for (complex w : z) {
    // multiply by sum_k w^k u^k
    for (int n = 1; n <= nmax; ++n) c[n] += w * c[n - 1];
  }
  for (complex w : zt) {
    for (int n = nmax; n >= 1; --n) c[n] -= w * c[n - 1];
  }
  return c;
}

}  // namespace

TEST(PnCoefficients, TrigonometricClosedForms) {
  const auto trig = EllipticContext::from_q(0.0);
  const auto p = AnnulusProduct::from_angles(1.0, std::vector<double>{0.4, 2.9},
                                             std::vector<double>{5.0});
  const auto c = pn_coefficients(trig, p, {-3, 6});
  EXPECT_LT(std::abs(c.at(0) - 1.0), 1e-12);
  EXPECT_LT(std::abs(c.at(1) - (p.z[0] + p.z[1] - p.zt[0])), 1e-12);
  EXPECT_LT(std::abs(c.at(-1)), 1e-12);
  const auto g = geometric_oracle(p.z, p.zt, 6);
  for (int n = 0; n <= 6; ++n) EXPECT_LT(std::abs(c.at(n) - g[n]), 1e-12) << n;
  for (int n = -3; n < 0; ++n) EXPECT_LT(std::abs(c.at(n)), 1e-12);
}

TEST(PnCoefficients, NodeDoublingAndContourIndependence) {
  const auto ctx = EllipticContext::from_beta(2.4);
  const auto p = AnnulusProduct::from_angles(1.0, std::vector<double>{5.5, 3.1},
                                             std::vector<double>{1.2});
  const IntRange range{-4, 5};
  const auto base = pn_coefficients(ctx, p, range, {256, 0.0});
  const auto twice = pn_coefficients(ctx, p, range, {512, 0.0});
  const double outer = 1.0 / (ctx.q() * ctx.q());
  const auto r1 = pn_coefficients(ctx, p, range, {256, 1.6});
  const auto r2 = pn_coefficients(ctx, p, range, {256, 0.6 * outer});
  for (int n = range.lo; n <= range.hi; ++n) {
    EXPECT_LT(std::abs(base.at(n) - twice.at(n)), 1e-10) << n;
    EXPECT_LT(std::abs(r1.at(n) - r2.at(n)), 1e-9) << n;
  }
}

TEST(PnCoefficients, GeneralLambdaNodeStability) {
  const auto ctx = EllipticContext::from_beta(3.0);
  const auto p = AnnulusProduct::from_angles(
      0.5, std::vector<double>{5.0, 3.5, 2.0}, std::vector<double>{1.0});
  const auto a = pn_coefficients(ctx, p, {-3, 3}, {128, 0.0});
  const auto b = pn_coefficients(ctx, p, {-3, 3}, {256, 0.0});
  for (int n = -3; n <= 3; ++n) EXPECT_LT(std::abs(a.at(n) - b.at(n)), 1e-10);
}

TEST(PnCoefficients, Errors) {
  const auto ctx = EllipticContext::from_beta(2.4);
  const auto p = AnnulusProduct::from_angles(1.0, std::vector<double>{1.0},
                                             std::vector<double>{});
  EXPECT_THROW(pn_coefficients(ctx, p, {0, 1}, {256, 0.9}), ConstraintError);
  EXPECT_THROW(pn_coefficients(ctx, p, {0, 1}, {256, 1.0 / std::exp(-2.4) + 1}),
               ConstraintError);
  EXPECT_THROW(pn_coefficients(ctx, p, {0, 1}, {8, 0.0}), ConstraintError);
  AnnulusProduct off = p;
  off.z[0] *= 1.1;
  EXPECT_THROW(pn_coefficients(ctx, off, {0, 1}), DomainError);
  // Close to q = 1 the integrand is far from band-limited at 16 nodes.
  const auto soft = EllipticContext::from_beta(0.3, {1e-16, 256});
  const auto many = AnnulusProduct::from_angles(
      2.0, std::vector<double>{0.1, 2.0, 4.0}, std::vector<double>{});
  EXPECT_THROW(pn_coefficients(soft, many, {0, 0}, {16, 1.02}), ConvergenceError);
}

TEST(Reconstruct, EmptyProductIsOne) {
  const auto trig = EllipticContext::from_q(0.0);
  const AnnulusProduct p{1.0, {}, {}};
  const auto c = pn_coefficients(trig, p, {0, 0});
  EXPECT_LT(std::abs(reconstruct_annulus_product(trig, c, complex(1.7, 0.4)) - 1.0),
            1e-15);
}

TEST(Reconstruct, TrigonometricGeometricConvergence) {
  const auto trig = EllipticContext::from_q(0.0);
  const auto p = AnnulusProduct::from_angles(1.0, std::vector<double>{0.5, 2.2},
                                             std::vector<double>{4.4});
  const auto c = pn_coefficients(trig, p, {0, 40});
  const complex xi = std::polar(2.0, 0.3);
  const complex exact = annulus_integrand(trig, p, xi);
  double prev = 0.0;
  for (int nmax : {10, 20, 30}) {
    Coefficients part = c;
    part.range = {0, nmax};
    part.values.resize(nmax + 1);
    const double err = std::abs(reconstruct_annulus_product(trig, part, xi) - exact);
    if (prev > 0.0) {
      // error ~ n^{N-1} R^{-n}: ten more terms gain at least a factor ~2^-10/4
      EXPECT_LT(err, prev * std::pow(0.5, 10) * 4);
    }
    prev = err;
  }
}

TEST(Reconstruct, EllipticMatchesDirectProduct) {
  const auto ctx = EllipticContext::from_beta(2.4);
  const auto p = AnnulusProduct::from_angles(1.0, std::vector<double>{0.7, 3.3},
                                             std::vector<double>{5.1});
  // Contour through |xi| = 1.8 keeps the roundoff of xi^{-n} P_n at eps for
  // every n of either sign.
  const auto c = pn_coefficients(ctx, p, {-40, 40}, {256, 1.8});
  const complex xi = std::polar(1.8, -0.7);
  EXPECT_LT(std::abs(reconstruct_annulus_product(ctx, c, xi) -
                     annulus_integrand(ctx, p, xi)),
            1e-8);
  EXPECT_THROW(reconstruct_annulus_product(ctx, c, complex(0.5, 0.0)), DomainError);
}

TEST(PnJet, MatchesFiniteDifferencesOfCoefficient) {
  const auto ctx = EllipticContext::from_beta(2.6);
  const std::vector<double> angles = {5.0, 3.6, 1.1};
  const complex lam(0.5, 0.0);
  auto P = [&](std::vector<double> a) {
    const auto p = AnnulusProduct::from_angles(
        lam, std::span<const double>(a).subspan(0, 2),
        std::span<const double>(a).subspan(2, 1));
    return pn_coefficients(ctx, p, {2, 2}).at(2);
  };
  const auto p0 = AnnulusProduct::from_angles(
      lam, std::span<const double>(angles).subspan(0, 2),
      std::span<const double>(angles).subspan(2, 1));
  const auto jet = pn_jet(ctx, p0, 2);
  EXPECT_LT(std::abs(jet.value - P(angles)), 1e-14);
  for (int j = 0; j < 3; ++j) {
    auto along = [&](double t) {
      auto a = angles;
      a[j] += t;
      return P(a);
    };
    EXPECT_LT(std::abs(oracle::d1(along, 0.0, 1e-2) - jet.d1[j]), 1e-8);
    EXPECT_LT(std::abs(oracle::d2(along, 0.0, 1e-2) - jet.d2[j]), 1e-6);
  }
}

TEST(Factorization, RealProductMatchesAnnulusIntegrandUpToConstant) {
  // c * prod theta(x_j - y)^{-lambda} prod theta(xt_J - y) * e^{iv(|x| - y - |xt|/lambda)}
  // with v = -lambda/2 equals G(e^{iy}) for one global c.
  const auto ctx = EllipticContext::from_beta(2.4);
  const int N = 3, Nt = 2;
  const double lambda = static_cast<double>(Nt) / (N - 1);
  const double v = -lambda / 2.0;
  std::vector<complex> ratios;
  for (const auto& cfg : sample_configurations(N + Nt + 1, 0.2, 20, 31)) {
    const std::span<const double> all(cfg.coords);
    const double y = all.back();  // smallest angle
    complex real_side = 1.0;
    double sx = 0.0, sxt = 0.0;
    for (int j = 0; j < N; ++j) {
      real_side *= std::pow(theta(ctx, all[j] - y), -lambda);
      sx += all[j];
    }
    for (int J = 0; J < Nt; ++J) {
      real_side *= theta(ctx, all[N + J] - y);
      sxt += all[N + J];
    }
    real_side *= std::exp(complex(0.0, v * (sx - y - sxt / lambda)));
    // Continuity onto |xi| = 1 via the closed annulus domain.
    complex g = 1.0;
    const complex xi = std::polar(1.0, y);
    for (int j = 0; j < N; ++j)
      g *= std::exp(-lambda * log_theta_annulus(ctx, std::polar(1.0, all[j]) / xi,
                                                AnnulusDomain::closed));
    for (int J = 0; J < Nt; ++J)
      g *= theta_annulus(ctx, std::polar(1.0, all[N + J]) / xi,
                         AnnulusDomain::closed);
    ratios.push_back(g / real_side);
  }
  for (const auto& r : ratios)
    EXPECT_LT(std::abs(r - ratios.front()), 1e-9 * std::abs(ratios.front()));
}

TEST(CoefficientState, EvalIsPsi0TimesCoefficient) {
  const auto ctx = EllipticContext::from_beta(2.5);
  const CoefficientState s(2, 1, 1.0, 2);
  const auto cfg = sample_configurations(3, 0.2, 1, 9).front();
  const auto c = s.coefficient(cfg, ctx);
  EXPECT_LT(std::abs(s.eval(cfg, ctx) - eval(s.psi0(), cfg, ctx) * c.at(2)), 1e-15);
}
