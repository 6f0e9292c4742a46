#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <cstring>

#include "ecs/elliptic.hpp"
#include "ecs/fd.hpp"
#include "ecs/sampling.hpp"
#include "oracles.hpp"

using namespace ecs;

namespace {

std::int64_t ulp_distance(double a, double b) {
  std::int64_t ia, ib;
  std::memcpy(&ia, &a, sizeof a);
  std::memcpy(&ib, &b, sizeof b);
  if (ia < 0) ia = std::numeric_limits<std::int64_t>::min() - ia;
  if (ib < 0) ib = std::numeric_limits<std::int64_t>::min() - ib;
  return ia > ib ? ia - ib : ib - ia;
}

// Frozen from a 40-digit evaluation of the same brute-force oracles.
constexpr double kC0Beta2 = -0.32246698061604453263;
constexpr double kThetaBeta2At13 = 0.56616955211780286895;
constexpr double kVBeta2At1 = 0.96590166667370646595;
constexpr double kPhiBeta2At1 = 1.2126883808330619691;
constexpr double kFBeta2At1 = -0.091122230858881270857;

}  // namespace

TEST(EllipticContext, NomeMatchesBetaExactly) {
  for (double beta : {0.7, 1.5, 2.0, 3.3, 8.0, 40.0}) {
    const auto ctx = EllipticContext::from_beta(beta);
    EXPECT_EQ(ctx.q(), std::exp(-beta / 2.0));
    EXPECT_EQ(ctx.beta(), beta);
  }
  const auto trig = EllipticContext::from_q(0.0);
  EXPECT_TRUE(trig.is_trigonometric());
  EXPECT_EQ(trig.terms(), 0);
  EXPECT_TRUE(std::isinf(trig.beta()));
}

TEST(EllipticContext, TermsObeyTruncationRule) {
  const auto ctx = EllipticContext::from_beta(2.0);
  const int M = ctx.terms();
  EXPECT_LT(std::pow(ctx.q(), 2 * M), ctx.policy().target_eps);
  EXPECT_LE(M, ctx.policy().max_terms);
}

TEST(EllipticContext, TruncationCapRaises) {
  EXPECT_THROW(EllipticContext::from_beta(0.01), TruncationError);
  EXPECT_THROW(EllipticContext::from_beta(2.0, {1e-16, 5}), TruncationError);
  EXPECT_THROW(EllipticContext::from_beta(-1.0), DomainError);
  EXPECT_THROW(EllipticContext::from_q(1.0), DomainError);
}

TEST(C0, TrigonometricLimitIsOneTwelfth) {
  EXPECT_EQ(c0(EllipticContext::from_q(0.0)), 1.0 / 12.0);
}

TEST(C0, MatchesDirectSummation) {
  const auto ctx = EllipticContext::from_beta(2.0);
  EXPECT_NEAR(c0(ctx), oracle::c0_direct(2.0), 1e-15);
  EXPECT_NEAR(c0(ctx), kC0Beta2, 1e-15);
}

TEST(C0, LargeBetaFirstTermBound) {
  const auto ctx = EllipticContext::from_beta(8.0);
  const double first = 1.0 / (2.0 * std::pow(std::sinh(4.0), 2));
  EXPECT_LT(std::abs(c0(ctx) - 1.0 / 12.0), first * 1.01);
  EXPECT_LT(c0(ctx), EllipticContext::c1);
}

TEST(C0, IncreasesTowardC1) {
  double prev = -1e9;
  for (double beta : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    const double v = c0(EllipticContext::from_beta(beta));
    EXPECT_GT(v, prev);
    EXPECT_LE(v, EllipticContext::c1);
    prev = v;
  }
}

TEST(Theta, TrigonometricValues) {
  const auto trig = EllipticContext::from_q(0.0);
  EXPECT_EQ(theta(trig, std::numbers::pi), 1.0);
  EXPECT_EQ(theta(trig, 0.0), 0.0);
}

TEST(Theta, OddAndGolden) {
  const auto ctx3 = EllipticContext::from_beta(3.0);
  EXPECT_EQ(theta(ctx3, 1.0), -theta(ctx3, -1.0));
  const auto ctx2 = EllipticContext::from_beta(2.0);
  EXPECT_NEAR(theta(ctx2, 1.3), oracle::theta_product(2.0, 1.3), 1e-15);
  EXPECT_NEAR(theta(ctx2, 1.3), kThetaBeta2At13, 1e-15);
}

TEST(Theta, PositiveOnOpenPeriod) {
  const auto ctx = EllipticContext::from_beta(1.5);
  for (double r = 0.01; r < kTwoPi; r += 0.05) EXPECT_GT(theta(ctx, r), 0.0);
}

TEST(LogTheta, MatchesLogOfTheta) {
  const auto ctx = EllipticContext::from_beta(2.2);
  for (double r : {0.3, 1.0, 3.0, 5.9})
    EXPECT_NEAR(log_theta(ctx, r), std::log(theta(ctx, r)), 1e-14);
  EXPECT_THROW(log_theta(ctx, -0.5), DomainError);
}

TEST(V, TrigonometricAndParity) {
  EXPECT_EQ(V(EllipticContext::from_q(0.0), std::numbers::pi), 0.25);
  const auto ctx = EllipticContext::from_beta(2.0);
  EXPECT_EQ(V(ctx, 1.0), V(ctx, -1.0));
}

TEST(V, MatchesLatticeSum) {
  const auto ctx = EllipticContext::from_beta(2.0);
  EXPECT_NEAR(V(ctx, 1.0), oracle::V_lattice(2.0, 1.0), 1e-14);
  EXPECT_NEAR(V(ctx, 1.0), kVBeta2At1, 1e-14);
  for (double r : {0.25, 2.0, 3.5, 6.0})
    EXPECT_NEAR(V(ctx, r), oracle::V_lattice(2.0, r), 1e-13 * (1 + V(ctx, r)));
}

TEST(V, SingularityGuard) {
  const auto ctx = EllipticContext::from_beta(2.0);
  EXPECT_THROW(V(ctx, 0.0), SingularityError);
  EXPECT_THROW(V(ctx, kTwoPi + 1e-8), SingularityError);
  EXPECT_THROW(phi(ctx, -kTwoPi), SingularityError);
  EXPECT_THROW(f(ctx, 1e-9), SingularityError);
  EXPECT_NO_THROW(V(ctx, 1e-5));
}

TEST(Phi, TrigonometricParityAndFD) {
  EXPECT_NEAR(phi(EllipticContext::from_q(0.0), std::numbers::pi), 0.0, 1e-16);
  const auto ctx3 = EllipticContext::from_beta(3.0);
  EXPECT_EQ(phi(ctx3, 0.7), -phi(ctx3, -0.7));
  const auto ctx = EllipticContext::from_beta(2.0);
  const double fd = oracle::d1(
      [](double r) { return std::log(oracle::theta_product(2.0, r)); }, 1.0);
  EXPECT_NEAR(phi(ctx, 1.0), fd, 1e-9);
  EXPECT_NEAR(phi(ctx, 1.0), kPhiBeta2At1, 1e-14);
}

TEST(F, TrigonometricParityAndBetaFD) {
  EXPECT_EQ(f(EllipticContext::from_q(0.0), 0.4), 1.0 / 12.0);
  const auto ctx3 = EllipticContext::from_beta(3.0);
  EXPECT_EQ(f(ctx3, 0.7), f(ctx3, -0.7));
  const auto ctx = EllipticContext::from_beta(2.0);
  const double fd = -oracle::d1(
      [](double b) { return std::log(oracle::theta_product(b, 1.0)); }, 2.0);
  EXPECT_NEAR(f(ctx, 1.0), fd + 1.0 / 12.0, 1e-8);
  EXPECT_NEAR(f(ctx, 1.0), kFBeta2At1, 1e-14);
}

TEST(ThetaAnnulus, TrigonometricReduces) {
  const auto trig = EllipticContext::from_q(0.0);
  EXPECT_EQ(theta_annulus(trig, complex(0.5, 0.0)), complex(0.5, 0.0));
}

TEST(ThetaAnnulus, LogVariantSelfConsistent) {
  const auto ctx = EllipticContext::from_beta(2.4);
  const complex z = std::polar(0.6, 0.9);
  const complex direct = theta_annulus(ctx, z);
  EXPECT_LT(std::abs(std::exp(log_theta_annulus(ctx, z)) - direct),
            1e-14 * std::abs(direct));
  EXPECT_LT(std::abs(direct - oracle::theta_annulus_product(2.4, z)), 1e-14);
}

TEST(ThetaAnnulus, LogIsContinuousAroundTheAnnulus) {
  // Principal logs per factor: no 2pi jumps along a circle in the annulus.
  const auto ctx = EllipticContext::from_beta(1.8);
  const double r = 0.5;
  complex prev = log_theta_annulus(ctx, std::polar(r, 0.0));
  for (int k = 1; k <= 2000; ++k) {
    const complex cur = log_theta_annulus(ctx, std::polar(r, kTwoPi * k / 2000));
    EXPECT_LT(std::abs(cur - prev), 0.05);
    prev = cur;
  }
}

TEST(ThetaAnnulus, MatchesRealThetaOnUnitCircle) {
  const auto ctx = EllipticContext::from_beta(2.4);
  const double x = 1.1;
  const complex via_annulus =
      complex(0.0, 0.5) * std::exp(complex(0.0, -x / 2.0)) *
      theta_annulus(ctx, std::polar(1.0, x), AnnulusDomain::closed);
  EXPECT_NEAR(via_annulus.real(), theta(ctx, x), 1e-13);
  EXPECT_NEAR(via_annulus.imag(), 0.0, 1e-13);
}

TEST(ThetaAnnulus, DomainSignals) {
  const auto ctx = EllipticContext::from_beta(2.0);
  EXPECT_THROW(theta_annulus(ctx, complex(1.0, 0.0)), DomainError);
  EXPECT_THROW(theta_annulus(ctx, complex(0.1, 0.0)), DomainError);  // q^2 = e^-2
  EXPECT_THROW(log_theta_annulus(ctx, complex(0.0, 1.2)), DomainError);
  EXPECT_THROW(theta_annulus(ctx, complex(1.0, 0.0), AnnulusDomain::closed),
               SingularityError);
}

TEST(ThetaAnnulus, LogJetMatchesFiniteDifferences) {
  const auto ctx = EllipticContext::from_beta(2.1);
  const complex z = std::polar(0.55, 1.3);
  const auto jet = theta_annulus_log_jet(ctx, z);
  // d/ds log theta(z e^s) at s = 0 is the log-z derivative.
  auto along = [&](double s) { return log_theta_annulus(ctx, z * std::exp(s)); };
  EXPECT_LT(std::abs(oracle::d1(along, 0.0, 1e-2) - jet.first), 1e-9);
  EXPECT_LT(std::abs(oracle::d2(along, 0.0, 1e-2) - jet.second), 1e-7);
}

// ---------------------------------------------------------------- properties

class AppendixIdentities : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(AppendixIdentities, DifferentialSquareAndThreePoint) {
  Rng rng(GetParam());
  for (int s = 0; s < 25; ++s) {
    const double beta = rng.uniform(1.5, 8.0);
    const double r = rng.uniform(0.2, kTwoPi - 0.2);
    const auto ctx = EllipticContext::from_beta(beta);
    const double v = V(ctx, r);
    const double dphi =
        first_derivative([&](double t) { return phi(ctx, r + t); },
                         StencilSpec{6, 1e-3, 1})
            .value;
    EXPECT_LT(std::abs(dphi + v), 1e-9 * (1 + std::abs(v))) << beta << " " << r;
    const double p = phi(ctx, r);
    EXPECT_LT(std::abs(p * p - v + 2 * f(ctx, r) + c0(ctx)),
              1e-9 * (1 + std::abs(v)));

    double x, y, z;
    auto far = [](double a) { return std::abs(std::remainder(a, kTwoPi)) >= 0.2; };
    do {
      x = rng.uniform(-kTwoPi, kTwoPi);
      y = rng.uniform(-kTwoPi, kTwoPi);
      z = -x - y;
    } while (!far(x) || !far(y) || !far(z));
    const double lhs = phi(ctx, x) * phi(ctx, y) + phi(ctx, x) * phi(ctx, z) +
                       phi(ctx, y) * phi(ctx, z);
    const double rhs = f(ctx, x) + f(ctx, y) + f(ctx, z);
    EXPECT_LT(std::abs(lhs - rhs), 1e-9 * (1 + std::abs(lhs)));
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, AppendixIdentities,
                         ::testing::Values(1u, 2u, 3u, 4u));

TEST(Parity, MirroredInputsWithinTwoUlp) {
  Rng rng(99);
  for (int s = 0; s < 200; ++s) {
    const auto ctx = EllipticContext::from_beta(rng.uniform(1.5, 8.0));
    const double r = rng.uniform(0.2, kTwoPi - 0.2);
    EXPECT_LE(ulp_distance(phi(ctx, -r), -phi(ctx, r)), 2);
    EXPECT_LE(ulp_distance(V(ctx, -r), V(ctx, r)), 2);
    EXPECT_LE(ulp_distance(f(ctx, -r), f(ctx, r)), 2);
    EXPECT_LE(ulp_distance(theta(ctx, -r), -theta(ctx, r)), 2);
  }
}

TEST(TrigonometricLimit, ClosedFormsWithinTwoUlp) {
  const auto trig = EllipticContext::from_q(0.0);
  Rng rng(5);
  for (int s = 0; s < 50; ++s) {
    const double r = rng.uniform(0.2, kTwoPi - 0.2);
    const double sh = std::sin(r / 2);
    EXPECT_LE(ulp_distance(theta(trig, r), sh), 2);
    EXPECT_LE(ulp_distance(V(trig, r), 1.0 / (4.0 * sh * sh)), 2);
    EXPECT_LE(ulp_distance(f(trig, r), 1.0 / 12.0), 2);
  }
  EXPECT_LE(ulp_distance(c0(trig), 1.0 / 12.0), 2);
}

TEST(Truncation, DoublingTermsChangesLessThanEps) {
  for (double beta : {1.5, 2.0, 4.0}) {
    const auto base = EllipticContext::from_beta(beta);
    const auto fine = EllipticContext::from_beta(beta, {1e-40, 256});
    ASSERT_GE(fine.terms(), 2 * base.terms());
    const double eps = base.policy().target_eps;
    for (double r : {0.3, 1.7, 4.0}) {
      const double tol = 4 * eps * (1 + std::abs(V(base, r)));
      EXPECT_LE(std::abs(theta(base, r) - theta(fine, r)), tol);
      EXPECT_LE(std::abs(V(base, r) - V(fine, r)), tol);
      EXPECT_LE(std::abs(phi(base, r) - phi(fine, r)), tol);
      EXPECT_LE(std::abs(f(base, r) - f(fine, r)), tol);
    }
    EXPECT_LE(std::abs(c0(base) - c0(fine)), 4 * eps);
  }
}
