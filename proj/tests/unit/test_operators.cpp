#include <gtest/gtest.h>

#include <cmath>

#include "ecs/constants.hpp"
#include "ecs/operators.hpp"
#include "ecs/sampling.hpp"

using namespace ecs;

namespace {

double rel(complex a, complex b, double scale) { return std::abs(a - b) / scale; }

}  // namespace

TEST(ApplyCalH, ConstantStateSingleParticle) {
  const auto ctx = EllipticContext::from_beta(2.0);
  const MassModel model(1.0, {0.7});
  const auto s = build_phi0(model);
  const Configuration cfg{{2.0}, 0.2};
  for (auto b : {Backend::analytic, Backend::fd})
    EXPECT_LT(std::abs(apply_calH(model, s, cfg, ctx, b).value), 1e-9);
}

TEST(ApplyCalH, PlaneWave) {
  const auto ctx = EllipticContext::from_beta(2.0);
  const complex m(0.8, 0.1);
  const MassModel model(1.0, {m});
  const double k = 1.7;
  const auto s = dress_plane_wave(build_phi0(model), k / m.real(), 1.0);
  // dress uses k_J = v m_J; pick v so that k_J is complex-consistent.
  const complex kk = s.momentum()[0];
  const Configuration cfg{{2.0}, 0.2};
  const auto a = apply_calH(model, s, cfg, ctx, Backend::analytic);
  EXPECT_LT(std::abs(a.value - kk * kk / m), 1e-13);
  const auto f = apply_calH(model, s, cfg, ctx, Backend::fd);
  EXPECT_LT(std::abs(f.value - kk * kk / m), 1e-7);
}

TEST(ApplyCalH, BackendsAgreeThreeParticles) {
  const auto ctx = EllipticContext::from_beta(2.3);
  const MassModel model(complex(1.3, -0.4), {1.0, -1.0, complex(0.37, 0.2)});
  const auto s = build_phi0(model);
  for (const auto& cfg : sample_configurations(3, 0.2, 5, 41)) {
    const auto a = apply_calH(model, s, cfg, ctx, Backend::analytic);
    const auto f = apply_calH(model, s, cfg, ctx, Backend::fd);
    EXPECT_LT(rel(a.value, f.value, a.scale()), 1e-6);
    EXPECT_LE(std::abs(a.value - f.value), 10 * f.error_estimate + 1e-9);
  }
}

TEST(ApplyCalH, AnalyticNeedsProductState) {
  const auto ctx = EllipticContext::from_beta(2.0);
  const MassModel model(1.0, {1.0, 2.0});
  const StateFunction g = [](const Configuration&, const EllipticContext&) {
    return complex(1.0);
  };
  const Configuration cfg{{3.0, 1.0}, 0.2};
  EXPECT_THROW(apply_calH(model, g, cfg, ctx, Backend::analytic), ConstraintError);
  EXPECT_NO_THROW(apply_calH(model, g, cfg, ctx, Backend::fd));
}

TEST(ApplyCalH, StencilMustFitMinSep) {
  const auto ctx = EllipticContext::from_beta(2.0);
  const MassModel model(1.0, {1.0, 2.0});
  const Configuration cfg{{3.0, 1.0}, 0.2};
  FdSettings fd;
  fd.space.h = 0.05;
  EXPECT_THROW(apply_calH(model, build_phi0(model), cfg, ctx, Backend::fd, fd),
               ConstraintError);
}

TEST(ApplyHDeformed, FreeCaseAndDifferenceVariable) {
  const auto ctx = EllipticContext::from_beta(2.0);
  const DeformedModel free{2, 0, 0, 0, 1.0};
  const ProductState constant(std::vector<CoordinateRole>{{Group::x, 1.0}, {Group::x, 1.0}});
  const Configuration cfg2{{3.0, 1.0}, 0.2};
  EXPECT_EQ(apply_H_deformed(free, Side::left, constant, cfg2, ctx, Backend::analytic).value,
            complex(0.0));
  const DeformedModel mixed{1, 1, 0, 0, 1.0};
  const auto psi0 = build_psi0(1, 1, 1.0);
  for (auto b : {Backend::analytic, Backend::fd})
    EXPECT_LT(std::abs(apply_H_deformed(mixed, Side::left, psi0, cfg2, ctx, b).value),
              1e-7);
  EXPECT_THROW(apply_H_deformed(mixed, Side::right, psi0, cfg2, ctx, Backend::analytic),
               ConstraintError);
}

TEST(ApplyHDeformed, EmbeddingReproducesLeftMinusRight) {
  const auto ctx = EllipticContext::from_beta(2.8);
  const DeformedModel dm{2, 1, 1, 2, complex(0.7, 0.25)};
  const auto F = build_kernel_F(dm);
  const auto model = dm.embedding();
  for (const auto& cfg : sample_configurations(dm.size(), 0.2, 4, 8)) {
    const auto calH = apply_calH(model, F, cfg, ctx, Backend::analytic);
    auto diff = apply_H_deformed(dm, Side::left, F, cfg, ctx, Backend::analytic);
    diff.add(apply_H_deformed(dm, Side::right, F, cfg, ctx, Backend::analytic), -1.0);
    EXPECT_LT(std::abs(calH.value - diff.value), 1e-10 * calH.scale());
  }
}

TEST(BetaDerivative, Cases) {
  const auto ctx = EllipticContext::from_beta(2.2);
  const ProductState flat(std::vector<CoordinateRole>(2));
  const Configuration cfg{{3.0, 1.2}, 0.2};
  EXPECT_EQ(beta_derivative(flat, cfg, ctx, Backend::analytic).value, complex(0.0));

  const complex lam(0.9, 0.3);
  const MassModel model(lam, {1.2, complex(-0.5, 0.1)});
  const auto phi0 = build_phi0(model);
  const complex expected =
      -lam * model.mass(0) * model.mass(1) *
      (f(ctx, cfg.coords[0] - cfg.coords[1]) - EllipticContext::c1);
  const auto a = beta_derivative(phi0, cfg, ctx, Backend::analytic);
  const auto d = beta_derivative(phi0, cfg, ctx, Backend::fd);
  EXPECT_LT(std::abs(a.value - expected), 1e-14);
  EXPECT_LT(std::abs(a.value - d.value), 1e-7);
  EXPECT_THROW(beta_derivative(phi0, cfg, EllipticContext::from_q(0.0), Backend::analytic),
               DomainError);
}

TEST(SourceDecomposition, TwoPlusThreeBodyAndReducedForm) {
  const auto ctx = EllipticContext::from_beta(2.1);
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = rng.integer(2, 5);
    std::vector<complex> masses;
    for (int j = 0; j < n; ++j)
      masses.push_back(std::polar(rng.uniform(0.4, 1.6), rng.uniform(-0.5, 0.5)) *
                       (rng.coin() ? 1.0 : -1.0));
    const MassModel model(rng.coupling(), masses);
    const auto cfg = sample_configurations(n, 0.2, 1, 100 + trial).front();
    const auto w = decompose_source(model, cfg, ctx);
    const double scale = 1 + std::abs(w.direct);
    EXPECT_LT(std::abs(w.direct - (w.two_body + w.three_body)), 1e-10 * scale);
    EXPECT_LT(std::abs(w.direct - w.reduced), 1e-10 * scale);
    // calH Phi0 / Phi0 = -W + sum gamma V.
    complex pot{};
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k)
        pot += model.gamma(j, k) * V(ctx, cfg.coords[j] - cfg.coords[k]);
    const auto app = apply_calH(model, build_phi0(model), cfg, ctx, Backend::analytic);
    EXPECT_LT(std::abs(app.value - (pot - w.reduced)), 1e-10 * app.scale());
  }
}

TEST(SourceIdentity, BothBackends) {
  const auto ctx = EllipticContext::from_beta(3.0);
  const MassModel model(2.0, {1.0, 1.0});
  const auto s = build_phi0(model);
  const Configuration cfg{{2.1, 0.8}, 0.2};
  for (auto b : {Backend::analytic, Backend::fd}) {
    auto app = apply_calH(model, s, cfg, ctx, b);
    app.add_term(2.0 * model.lambda() * model.sum_m() *
                 beta_derivative(s, cfg, ctx, b).value);
    app.add_term(-energy_E0_prop1(model, ctx));
    EXPECT_LT(std::abs(app.value) / app.scale(),
              b == Backend::analytic ? 1e-9 : 1e-6);
  }
}

TEST(Duality, DualOperatorIsMinusInverseLambdaTimesOriginal) {
  // H_{Nt,N}(xt, x; 1/lambda) = -(1/lambda) H_{N,Nt}(x, xt; lambda), checked on
  // a smooth non-eigenfunction test product.
  const auto ctx = EllipticContext::from_beta(2.5);
  const int N = 2, Nt = 2;
  const complex lam(1.4, 0.3);
  const DeformedModel orig{N, Nt, 0, 0, lam};
  const DeformedModel dual{Nt, N, 0, 0, 1.0 / lam};
  const StateFunction g = [](const Configuration& c, const EllipticContext& cx) {
    complex acc = 1.0;
    for (int i = 0; i < c.size(); ++i)
      acc *= std::exp(complex(0.3 * std::cos(c.coords[i] * (i + 1)),
                              0.2 * std::sin(c.coords[i])));
    return acc * (2.0 + theta(cx, c.coords[0] - c.coords[3]));
  };
  // The dual layout lists xt first; permute coordinates back for g.
  const StateFunction g_dual = [&](const Configuration& c, const EllipticContext& cx) {
    Configuration p = c;
    for (int i = 0; i < N; ++i) p.coords[i] = c.coords[Nt + i];
    for (int i = 0; i < Nt; ++i) p.coords[N + i] = c.coords[i];
    return g(p, cx);
  };
  for (const auto& cfg : sample_configurations(N + Nt, 0.2, 3, 5)) {
    Configuration dcfg = cfg;
    for (int i = 0; i < Nt; ++i) dcfg.coords[i] = cfg.coords[N + i];
    for (int i = 0; i < N; ++i) dcfg.coords[Nt + i] = cfg.coords[i];
    const auto a = apply_H_deformed(orig, Side::left, g, cfg, ctx, Backend::fd);
    const auto b = apply_H_deformed(dual, Side::left, g_dual, dcfg, ctx, Backend::fd);
    EXPECT_LT(std::abs(b.value + a.value / lam), 1e-6 * a.scale());
  }
}
