#pragma once

// Residual suites for the source identity, the kernel-function identities
// derived from it, the exact eigenfunctions and the closed-form constants.
//
// Every suite returns a ResidualReport: one SampleRecord per check and
// sample, each carrying its own seed, so a single failing record can be
// replayed in isolation. Relative residuals are |residual| / scale with
// scale = 1 + (largest single term), see OperatorApplication.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ecs/coefficients.hpp"
#include "ecs/constants.hpp"
#include "ecs/elliptic.hpp"
#include "ecs/errors.hpp"
#include "ecs/fd.hpp"
#include "ecs/models.hpp"
#include "ecs/operators.hpp"
#include "ecs/sampling.hpp"
#include "ecs/states.hpp"

namespace ecs {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- records

struct SampleRecord {
  std::string check;
  std::string backend;  // analytic | fd | agreement | closed_form | quadrature | ulp
  std::uint64_t seed = 0;
  std::vector<double> coords;
  json params = json::object();
  double residual = 0.0;
  double scale = 1.0;
  double rel = 0.0;
  double tolerance = 0.0;
  double error_estimate = 0.0;
  bool derived = false;  // property implied by, not stated with, the identities
  bool pass = false;
};

struct ResidualReport {
  std::string suite;
  json parameters = json::object();
  json metadata = json::object();
  std::vector<SampleRecord> samples;
  double max_rel_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  double elapsed_ms = 0.0;

  /// Binding record: the one with the largest rel/tolerance. The report
  /// passes iff every record does, i.e. iff the binding one does; an empty
  /// report never passes.
  void finalize() {
    pass = !samples.empty();
    double worst = -1.0;
    for (const auto& s : samples) {
      pass = pass && s.pass;
      const double ratio =
          s.tolerance > 0.0 ? s.rel / s.tolerance
                            : std::numeric_limits<double>::infinity();
      if (ratio > worst || std::isnan(ratio)) {
        worst = std::isnan(ratio) ? std::numeric_limits<double>::infinity()
                                  : ratio;
        max_rel_residual = s.rel;
        tolerance = s.tolerance;
      }
    }
  }

  /// Per (check, backend) maxima, in first-seen order.
  json tiers() const {
    json out = json::array();
    for (const auto& s : samples) {
      auto it = std::find_if(out.begin(), out.end(), [&](const json& t) {
        return t["check"] == s.check && t["backend"] == s.backend;
      });
      if (it == out.end()) {
        out.push_back({{"check", s.check},
                       {"backend", s.backend},
                       {"count", 0},
                       {"max_rel_residual", 0.0},
                       {"tolerance", s.tolerance},
                       {"derived", s.derived},
                       {"pass", true}});
        it = std::prev(out.end());
      }
      (*it)["count"] = (*it)["count"].get<int>() + 1;
      (*it)["max_rel_residual"] =
          std::max((*it)["max_rel_residual"].get<double>(), s.rel);
      (*it)["tolerance"] = std::max((*it)["tolerance"].get<double>(), s.tolerance);
      (*it)["pass"] = (*it)["pass"].get<bool>() && s.pass;
    }
    return out;
  }
};

// ---------------------------------------------------------------- options

struct Tolerances {
  double analytic = 1e-9;
  double fd = 1e-6;
  double cor3 = 1e-5;
  double closed_form = 1e-13;
  double contour = 1e-9;
  double node_doubling = 1e-10;
  double q0_closed_form = 1e-12;
  double ulp = 2.0;
  double agreement = 1.0;  // |analytic - fd| in units of the FD error bound
  std::optional<double> override_all;

  double get(double tier) const { return override_all ? *override_all : tier; }
};

/// Everything a suite may read. Unset optionals fall back to the suite's
/// own random draws or defaults.
struct SuiteOptions {
  std::uint64_t seed = 1;
  std::optional<int> samples;
  std::optional<double> beta;
  std::optional<double> q;  // q = 0 selects the trigonometric limit
  std::optional<int> calN;
  std::optional<complex> lambda;
  std::vector<complex> masses;
  std::optional<int> N, Ntilde, M, Mtilde;
  std::optional<double> v;
  std::optional<IntRange> n_range;
  double min_sep = 0.2;
  FdSettings fd{};
  QuadratureSpec quad{};
  Tolerances tol{};

  bool has_context() const { return beta.has_value() || q.has_value(); }

  EllipticContext context() const {
    if (beta && q) throw ConstraintError("give either beta or q, not both");
    if (q) return EllipticContext::from_q(*q);
    return EllipticContext::from_beta(beta.value_or(2.5));
  }
};

// ------------------------------------------------------------- residuals

/// Residual of one identity at one configuration, with its scale and the
/// FD error bound (0 for analytic evaluations).
struct Residual {
  complex value{};
  double scale = 1.0;
  double error_estimate = 0.0;

  double abs() const { return std::abs(value); }
  double rel() const { return abs() / scale; }
};

/// (calH + 2 lambda |m| d/dbeta - E0) Phi0 / Phi0.
inline Residual residual_prop1(const MassModel& model,
                               const EllipticContext& ctx,
                               const Configuration& cfg, Backend backend,
                               const FdSettings& fd = {}) {
  const auto state = build_phi0(model);
  auto app = apply_calH(model, state, cfg, ctx, backend, fd);
  double err = app.error_estimate;
  const complex coef = 2.0 * model.lambda() * model.sum_m();
  if (!ctx.is_trigonometric() && coef != 0.0) {
    const auto db = beta_derivative(state, cfg, ctx, backend, fd);
    app.add_term(coef * db.value);
    err += std::abs(coef) * db.error_estimate;
  }
  app.add_term(-energy_E0_prop1(model, ctx));
  return {app.value, app.scale(), err};
}

struct Dressing {
  double v = 0.0;
  complex c{1.0, 0.0};
};

/// (H_left - H_right + 2[(N-M) lambda - Ntilde + Mtilde] d/dbeta - C) F / F,
/// with C shifted by the plane-wave constant when dressed.
inline Residual residual_cor1(const DeformedModel& model,
                              const EllipticContext& ctx,
                              const Configuration& cfg,
                              std::optional<Dressing> dressing, Backend backend,
                              const FdSettings& fd = {}) {
  model.validate();
  if (model.left_size() < 1 || model.right_size() < 1)
    throw ConstraintError("cor1 needs N + Ntilde >= 1 and M + Mtilde >= 1");
  auto F = build_kernel_F(model);
  if (dressing) F = dress_plane_wave(F, dressing->v, dressing->c, model);
  auto app = apply_H_deformed(model, Side::left, F, cfg, ctx, backend, fd);
  app.add(apply_H_deformed(model, Side::right, F, cfg, ctx, backend, fd), -1.0);
  double err = app.error_estimate;
  const complex coef = model.beta_coefficient();
  if (!ctx.is_trigonometric() && coef != 0.0) {
    const auto db = beta_derivative(F, cfg, ctx, backend, fd);
    app.add_term(coef * db.value);
    err += std::abs(coef) * db.error_estimate;
  }
  complex C = constant_C(model, ctx);
  if (dressing) C += plane_wave_shift(model, dressing->v);
  app.add_term(-C);
  return {app.value, app.scale(), err};
}

/// (H_{N,Ntilde} Psi0)/Psi0 - E0 with lambda = Ntilde/N.
inline Residual residual_cor2(int N, int Ntilde, const EllipticContext& ctx,
                              const Configuration& cfg, Backend backend,
                              const FdSettings& fd = {}) {
  if (N < 1) throw ConstraintError("cor2 needs N >= 1");
  const complex lambda = static_cast<double>(Ntilde) / N;
  if (lambda == 0.0) throw ConstraintError("cor2 needs Ntilde >= 1");
  const DeformedModel model{N, Ntilde, 0, 0, lambda};
  auto app = apply_H_deformed(model, Side::left, build_psi0(N, Ntilde, lambda),
                              cfg, ctx, backend, fd);
  app.add_term(-energy_E0_cor2(N, Ntilde, ctx));
  return {app.value, app.scale(), app.error_estimate};
}

/// Relative size below which P_n counts as vanishing.
inline constexpr double kDegenerateCoefficient = 1e-8;

/// (H_{N,Ntilde} Psi_n)/Psi_n - E(n) with lambda = Ntilde/(N-1) and
/// Psi_n = Psi0 P_n. The FD backend re-extracts P_n at every stencil point;
/// the analytic backend differentiates under the contour integral. Throws
/// ConvergenceError when |P_n| < 1e-8 of its quadrature scale.
inline Residual residual_cor3(int N, int Ntilde, int n,
                              const EllipticContext& ctx,
                              const Configuration& cfg,
                              const QuadratureSpec& quad, Backend backend,
                              const FdSettings& fd = {}) {
  const double En = energy_En_cor3(N, Ntilde, n, ctx);
  const complex lambda = static_cast<double>(Ntilde) / (N - 1);
  const CoefficientState state(N, Ntilde, lambda, n, quad);
  const auto c = state.coefficient(cfg, ctx);
  if (std::abs(c.at(n)) < kDegenerateCoefficient * c.scale_at(n))
    throw ConvergenceError("P_" + std::to_string(n) +
                           " is degenerate (vanishes) at this configuration");
  const DeformedModel model{N, Ntilde, 0, 0, lambda};
  auto app = apply_H_deformed(model, Side::left, state, cfg, ctx, backend, fd);
  app.add_term(-En);
  return {app.value, app.scale(), app.error_estimate};
}

// ------------------------------------------------------------- plumbing

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of sample `index` in stream `stream` of a run seeded with `base`.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                 std::uint64_t index) {
  return splitmix64(splitmix64(base ^ (stream << 40)) + index);
}

/// Runs fn(i) for i in [0, count) on hardware threads; results keep index
/// order, and the first failure by index is rethrown.
template <class T>
std::vector<T> parallel_map(int count, const std::function<T(int)>& fn) {
  std::vector<T> out(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i; (i = next.fetch_add(1)) < count;) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(
      static_cast<int>(std::thread::hardware_concurrency()), 1, std::max(count, 1));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline json complex_json(complex z) { return json::array({z.real(), z.imag()}); }

inline SampleRecord record(std::string check, std::string backend,
                           std::uint64_t seed, std::vector<double> coords,
                           double residual, double scale, double tolerance) {
  SampleRecord r;
  r.check = std::move(check);
  r.backend = std::move(backend);
  r.seed = seed;
  r.coords = std::move(coords);
  r.residual = residual;
  r.scale = scale;
  r.rel = residual / scale;
  r.tolerance = tolerance;
  r.pass = r.rel < tolerance;
  return r;
}

/// Equality of two closed forms, scaled by 1 + the larger magnitude.
inline SampleRecord closed_form(std::string check, std::uint64_t seed,
                                complex a, complex b, double tolerance) {
  return record(std::move(check), "closed_form", seed, {}, std::abs(a - b),
                1.0 + std::max(std::abs(a), std::abs(b)), tolerance);
}

/// Distance in units in the last place of the larger magnitude.
inline double ulp_distance(double a, double b) {
  if (a == b) return 0.0;
  const double m = std::max(std::abs(a), std::abs(b));
  const double ulp = std::nextafter(m, std::numeric_limits<double>::infinity()) - m;
  return std::abs(a - b) / ulp;
}

inline SampleRecord from_residual(std::string check, Backend backend,
                                  std::uint64_t seed, const Configuration& cfg,
                                  const Residual& r, double tolerance) {
  auto rec = record(std::move(check), to_string(backend), seed, cfg.coords,
                    r.abs(), r.scale, tolerance);
  rec.error_estimate = r.error_estimate;
  return rec;
}

/// |analytic - fd| against the FD error bound plus a roundoff floor.
inline SampleRecord agreement(std::string check, std::uint64_t seed,
                              const Configuration& cfg, const Residual& a,
                              const Residual& f, double tolerance) {
  const double bound = f.error_estimate + 1e-12 * f.scale;
  auto rec = record(std::move(check), "agreement", seed, cfg.coords,
                    std::abs(a.value - f.value), bound, tolerance);
  rec.error_estimate = f.error_estimate;
  return rec;
}

inline complex random_mass(Rng& rng) {
  const double sign = rng.coin() ? 1.0 : -1.0;
  const double r = rng.uniform(0.4, 1.6);
  if (rng.coin()) return sign * r;
  return sign * std::polar(r, rng.uniform(-0.8, 0.8));
}

inline json model_json(const MassModel& m) {
  json masses = json::array();
  for (complex x : m.masses()) masses.push_back(complex_json(x));
  return {{"lambda", complex_json(m.lambda())}, {"masses", masses}};
}

inline json model_json(const DeformedModel& m) {
  return {{"N", m.N}, {"Ntilde", m.Ntilde}, {"M", m.M},
          {"Mtilde", m.Mtilde}, {"lambda", complex_json(m.lambda)}};
}

inline json context_json(const EllipticContext& ctx) {
  if (ctx.is_trigonometric()) return {{"q", 0.0}, {"terms", 0}};
  return {{"beta", ctx.beta()}, {"q", ctx.q()}, {"terms", ctx.terms()}};
}

inline json stencil_json(const StencilSpec& s) {
  return {{"order", s.order}, {"h", s.h}, {"richardson_levels", s.richardson_levels}};
}

inline json base_metadata(const SuiteOptions& o) {
  const TruncationPolicy pol{};
  return {{"truncation", {{"target_eps", pol.target_eps}, {"max_terms", pol.max_terms}}},
          {"stencil", stencil_json(o.fd.space)},
          {"beta_stencil", stencil_json(o.fd.beta)},
          {"min_sep", o.min_sep}};
}

inline EllipticContext draw_context(const SuiteOptions& o, Rng& rng, double lo,
                                    double hi) {
  const double b = rng.uniform(lo, hi);  // always drawn: keeps streams aligned
  return o.has_context() ? o.context() : EllipticContext::from_beta(b);
}

template <class F>
ResidualReport timed(const char* suite, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  ResidualReport rep = body();
  rep.suite = suite;
  rep.finalize();
  rep.elapsed_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  return rep;
}

inline void append(ResidualReport& rep, std::vector<std::vector<SampleRecord>> parts) {
  for (auto& p : parts)
    for (auto& r : p) rep.samples.push_back(std::move(r));
}

}  // namespace detail

// ----------------------------------------------------------------- suites

/// Functional identities of phi, V, f, c0 and their parities, plus the
/// trigonometric limit.
inline ResidualReport run_appendix(const SuiteOptions& o) {
  return detail::timed("appendix", [&] {
    ResidualReport rep;
    rep.metadata = detail::base_metadata(o);
    const Tolerances& t = o.tol;
    const StencilSpec r_stencil{4, 1e-3, 2};
    rep.metadata["r_stencil"] = detail::stencil_json(r_stencil);
    const int count = o.samples.value_or(200);
    auto parts = detail::parallel_map<std::vector<SampleRecord>>(count, [&](int i) {
      const auto seed = detail::derive_seed(o.seed, 1, i);
      Rng rng(seed);
      const auto ctx = detail::draw_context(o, rng, 1.5, 8.0);
      const double r = rng.uniform(0.2, kTwoPi - 0.2);
      const double p = phi(ctx, r), v = V(ctx, r), fr = f(ctx, r);
      const json params = detail::context_json(ctx);
      std::vector<SampleRecord> out;
      auto push = [&](SampleRecord rec) {
        rec.params = params;
        out.push_back(std::move(rec));
      };

      const auto dphi = first_derivative([&](double h) { return phi(ctx, r + h); },
                                         r_stencil);
      auto rec = detail::record("phi_prime_is_minus_V", "fd", seed, {r},
                                std::abs(dphi.value + v), 1.0 + std::abs(v),
                                t.get(t.analytic));
      rec.error_estimate = dphi.error;
      push(std::move(rec));

      push(detail::record("phi_squared", "analytic", seed, {r},
                          std::abs(p * p - v + 2.0 * fr + ctx.c0()),
                          1.0 + std::abs(v), t.get(t.analytic)));

      if (!ctx.is_trigonometric()) {
        // f = -d/dbeta log theta + 1/12
        const StencilSpec bs{4, 1e-3, 2};
        const auto dlog = first_derivative(
            [&](double h) { return log_theta(ctx.with_beta(ctx.beta() + h), r); }, bs);
        push(detail::record("f_beta_derivative", "fd", seed, {r},
                            std::abs(fr - (EllipticContext::c1 - dlog.value)),
                            1.0 + std::abs(fr), t.get(t.analytic)));
      }

      // Three-point identity at x + y + z = 0, every argument away from 2 pi Z.
      double y = 0.0, z = 0.0;
      for (int tries = 0;; ++tries) {
        y = rng.uniform(0.2, kTwoPi - 0.2);
        z = -r - y;
        if (std::abs(std::remainder(z, kTwoPi)) >= 0.2) break;
        if (tries > 1000) throw DomainError("three-point draw did not converge");
      }
      const double px = p, py = phi(ctx, y), pz = phi(ctx, z);
      const double lhs = px * py + px * pz + py * pz;
      const double rhs = fr + f(ctx, y) + f(ctx, z);
      const double big = std::max({std::abs(px * py), std::abs(px * pz),
                                   std::abs(py * pz), std::abs(rhs)});
      push(detail::record("three_point", "analytic", seed, {r, y, z},
                          std::abs(lhs - rhs), 1.0 + big, t.get(t.analytic)));

      const double ulps = std::max(
          {detail::ulp_distance(theta(ctx, -r), -theta(ctx, r)),
           detail::ulp_distance(phi(ctx, -r), -p), detail::ulp_distance(V(ctx, -r), v),
           detail::ulp_distance(f(ctx, -r), fr)});
      push(detail::record("parity", "ulp", seed, {r}, ulps, 1.0, t.get(t.ulp)));
      return out;
    });
    detail::append(rep, std::move(parts));

    // Trigonometric limit against the elementary closed forms.
    const auto trig = EllipticContext::trigonometric();
    const int trig_count = o.samples ? std::max(1, *o.samples / 4) : 50;
    for (int i = 0; i < trig_count; ++i) {
      const auto seed = detail::derive_seed(o.seed, 2, i);
      Rng rng(seed);
      const double r = rng.uniform(0.2, kTwoPi - 0.2);
      const double s = std::sin(r / 2.0);
      const double ulps =
          std::max({detail::ulp_distance(theta(trig, r), s),
                    detail::ulp_distance(V(trig, r), 1.0 / (4.0 * s * s)),
                    detail::ulp_distance(c0(trig), 1.0 / 12.0),
                    detail::ulp_distance(f(trig, r), 1.0 / 12.0)});
      auto rec = detail::record("trigonometric_limit", "ulp", seed, {r}, ulps, 1.0,
                                t.get(t.ulp));
      rec.params = detail::context_json(trig);
      rep.samples.push_back(std::move(rec));
    }
    rep.parameters = {{"samples", count}, {"trigonometric_samples", trig_count},
                      {"seed", o.seed}};
    return rep;
  });
}

/// Source identity for random (or given) mass models, both backends.
inline ResidualReport run_prop1(const SuiteOptions& o) {
  return detail::timed("prop1", [&] {
    ResidualReport rep;
    rep.metadata = detail::base_metadata(o);
    const Tolerances& t = o.tol;
    if (o.calN && !o.masses.empty() && *o.calN != static_cast<int>(o.masses.size()))
      throw ConstraintError("--calN disagrees with the number of masses");
    if (o.calN && *o.calN < 1) throw ConstraintError("calN must be >= 1");
    const int count = o.samples.value_or(50);
    auto parts = detail::parallel_map<std::vector<SampleRecord>>(count, [&](int i) {
      const auto seed = detail::derive_seed(o.seed, 3, i);
      Rng rng(seed);
      const int n = o.masses.empty() ? o.calN.value_or(rng.integer(2, 4))
                                     : static_cast<int>(o.masses.size());
      const complex lam = rng.coupling();
      std::vector<complex> masses;
      for (int j = 0; j < n; ++j) masses.push_back(detail::random_mass(rng));
      const auto ctx = detail::draw_context(o, rng, 1.5, 6.0);
      const MassModel model(o.lambda.value_or(lam),
                            o.masses.empty() ? masses : o.masses);
      const auto cfg =
          sample_configurations(n, o.min_sep, 1, detail::derive_seed(seed, 0, 0)).front();
      json params = detail::model_json(model);
      params.update(detail::context_json(ctx));
      params["E0"] = detail::complex_json(energy_E0_prop1(model, ctx));
      const auto a = residual_prop1(model, ctx, cfg, Backend::analytic, o.fd);
      const auto f = residual_prop1(model, ctx, cfg, Backend::fd, o.fd);
      std::vector<SampleRecord> out{
          detail::from_residual("prop1", Backend::analytic, seed, cfg, a, t.get(t.analytic)),
          detail::from_residual("prop1", Backend::fd, seed, cfg, f, t.get(t.fd)),
          detail::agreement("prop1", seed, cfg, a, f, t.get(t.agreement))};
      for (auto& r : out) r.params = params;
      return out;
    });
    detail::append(rep, std::move(parts));
    rep.parameters = {{"samples", count}, {"seed", o.seed}};
    if (o.calN) rep.parameters["calN"] = *o.calN;
    if (o.lambda) rep.parameters["lambda"] = detail::complex_json(*o.lambda);
    if (o.has_context()) rep.parameters["context"] = detail::context_json(o.context());
    return rep;
  });
}

namespace detail {

struct Cor1Draw {
  DeformedModel model;
  EllipticContext ctx;
  bool balanced_attempt = false;
};

/// Group sizes in {0,1,2} with at least one coordinate per side; every third
/// draw sets lambda to balance the sizes when that is possible.
inline Cor1Draw draw_cor1(const SuiteOptions& o, Rng& rng, int index) {
  DeformedModel m;
  for (;;) {
    m.N = o.N.value_or(rng.integer(0, 2));
    m.Ntilde = o.Ntilde.value_or(rng.integer(0, 2));
    m.M = o.M.value_or(rng.integer(0, 2));
    m.Mtilde = o.Mtilde.value_or(rng.integer(0, 2));
    if (m.left_size() >= 1 && m.right_size() >= 1) break;
    if (o.N && o.Ntilde && o.M && o.Mtilde)
      throw ConstraintError("cor1 needs N + Ntilde >= 1 and M + Mtilde >= 1");
  }
  m.lambda = rng.coupling();
  const bool attempt = index % 3 == 0;
  if (attempt && m.N != m.M && m.Ntilde != m.Mtilde)
    m.lambda = static_cast<double>(m.Ntilde - m.Mtilde) / (m.N - m.M);
  if (o.lambda) m.lambda = *o.lambda;
  if (m.lambda == 0.0) throw ConstraintError("lambda must be nonzero");
  return {m, draw_context(o, rng, 1.5, 6.0), attempt};
}

}  // namespace detail

/// Kernel-function identity for random group sizes: both backends, the mass
/// embedding, the balanced case and (derived) the coupling duality.
inline ResidualReport run_cor1(const SuiteOptions& o) {
  return detail::timed("cor1", [&] {
    ResidualReport rep;
    rep.metadata = detail::base_metadata(o);
    const Tolerances& t = o.tol;
    const int count = o.samples.value_or(30);
    std::optional<Dressing> dressing;
    if (o.v) dressing = Dressing{*o.v, 1.0};
    auto parts = detail::parallel_map<std::vector<SampleRecord>>(count, [&](int i) {
      const auto seed = detail::derive_seed(o.seed, 4, i);
      Rng rng(seed);
      const auto draw = detail::draw_cor1(o, rng, i);
      const auto& m = draw.model;
      const auto& ctx = draw.ctx;
      const auto cfg = sample_configurations(m.size(), o.min_sep, 1,
                                             detail::derive_seed(seed, 0, 0))
                           .front();
      json params = detail::model_json(m);
      params.update(detail::context_json(ctx));
      params["C"] = detail::complex_json(constant_C(m, ctx));
      params["balanced"] = m.balanced();
      if (dressing) params["v"] = dressing->v;

      std::vector<SampleRecord> out;
      const auto a = residual_cor1(m, ctx, cfg, dressing, Backend::analytic, o.fd);
      const auto f = residual_cor1(m, ctx, cfg, dressing, Backend::fd, o.fd);
      out.push_back(detail::from_residual("cor1", Backend::analytic, seed, cfg, a,
                                          t.get(t.analytic)));
      out.push_back(detail::from_residual("cor1", Backend::fd, seed, cfg, f, t.get(t.fd)));
      out.push_back(detail::agreement("cor1", seed, cfg, a, f, t.get(t.agreement)));

      if (m.balanced()) {
        // Exactly zero, not merely small.
        out.push_back(detail::record("balanced_beta_coefficient", "closed_form", seed,
                                     {}, std::abs(m.beta_coefficient()), 1.0,
                                     std::numeric_limits<double>::min()));
      }

      // Mass embedding into the source identity.
      const auto model = m.embedding();
      const auto F = build_kernel_F(m);
      const auto calH = apply_calH(model, F, cfg, ctx, Backend::analytic);
      auto diff = apply_H_deformed(m, Side::left, F, cfg, ctx, Backend::analytic);
      diff.add(apply_H_deformed(m, Side::right, F, cfg, ctx, Backend::analytic), -1.0);
      out.push_back(detail::record("embedding_operator", "analytic", seed, cfg.coords,
                                   std::abs(calH.value - diff.value), calH.scale(),
                                   t.get(1e-10)));
      const complex ratio = eval(F, cfg, ctx) / eval(build_phi0(model), cfg, ctx);
      out.push_back(detail::record("embedding_state", "analytic", seed, cfg.coords,
                                   std::abs(ratio - 1.0), 1.0, t.get(1e-10)));
      out.push_back(detail::closed_form("embedding_constant", seed, constant_C(m, ctx),
                                        energy_E0_prop1(model, ctx),
                                        t.get(t.closed_form)));

      // Duality lambda -> 1/lambda with the tilde and plain groups swapped.
      if (!dressing) {
        const DeformedModel dual{m.Ntilde, m.N, m.Mtilde, m.M, 1.0 / m.lambda};
        Configuration dcfg = cfg;
        std::vector<int> perm;
        for (int k = 0; k < m.Ntilde; ++k) perm.push_back(m.N + k);
        for (int k = 0; k < m.N; ++k) perm.push_back(k);
        for (int k = 0; k < m.Mtilde; ++k) perm.push_back(m.left_size() + m.M + k);
        for (int k = 0; k < m.M; ++k) perm.push_back(m.left_size() + k);
        for (std::size_t k = 0; k < perm.size(); ++k) dcfg.coords[k] = cfg.coords[perm[k]];
        const auto Fd = build_kernel_F(dual);
        auto lhs = apply_H_deformed(dual, Side::left, Fd, dcfg, ctx, Backend::analytic);
        lhs.add(apply_H_deformed(dual, Side::right, Fd, dcfg, ctx, Backend::analytic),
                -1.0);
        const auto orig = diff;
        auto rec = detail::record("duality_operator", "analytic", seed, cfg.coords,
                                  std::abs(lhs.value + orig.value / m.lambda),
                                  1.0 + std::max(lhs.max_term, orig.max_term /
                                                                   std::abs(m.lambda)),
                                  t.get(t.analytic));
        rec.derived = true;
        out.push_back(std::move(rec));
        auto crec = detail::closed_form("duality_constant", seed, constant_C(dual, ctx),
                                        -constant_C(m, ctx) / m.lambda,
                                        t.get(t.closed_form));
        crec.derived = true;
        out.push_back(std::move(crec));
      }
      for (auto& r : out) r.params = params;
      return out;
    });
    detail::append(rep, std::move(parts));
    rep.parameters = {{"samples", count}, {"seed", o.seed}};
    if (dressing) rep.parameters["v"] = dressing->v;
    rep.metadata["derived_checks"] = json::array({"duality_operator", "duality_constant"});
    return rep;
  });
}

/// Plane-wave dressing of the kernel function: dressed residuals and the
/// constant shift, measured and closed form.
inline ResidualReport run_lemma1(const SuiteOptions& o) {
  return detail::timed("lemma1", [&] {
    ResidualReport rep;
    rep.metadata = detail::base_metadata(o);
    const Tolerances& t = o.tol;
    const int count = o.samples.value_or(20);
    auto parts = detail::parallel_map<std::vector<SampleRecord>>(count, [&](int i) {
      const auto seed = detail::derive_seed(o.seed, 5, i);
      Rng rng(seed);
      const auto draw = detail::draw_cor1(o, rng, i);
      const auto& m = draw.model;
      const auto& ctx = draw.ctx;
      const double v_draw = rng.uniform(-1.5, 1.5);
      const Dressing d{o.v.value_or(v_draw),
                       std::polar(rng.uniform(0.5, 2.0), rng.uniform(-3.0, 3.0))};
      const auto cfg = sample_configurations(m.size(), o.min_sep, 1,
                                             detail::derive_seed(seed, 0, 0))
                           .front();
      json params = detail::model_json(m);
      params.update(detail::context_json(ctx));
      params["v"] = d.v;
      params["c"] = detail::complex_json(d.c);
      const complex shift = plane_wave_shift(m, d.v);
      params["shift"] = detail::complex_json(shift);

      std::vector<SampleRecord> out;
      const auto a = residual_cor1(m, ctx, cfg, d, Backend::analytic, o.fd);
      const auto f = residual_cor1(m, ctx, cfg, d, Backend::fd, o.fd);
      out.push_back(detail::from_residual("dressed", Backend::analytic, seed, cfg, a,
                                          t.get(t.analytic)));
      out.push_back(detail::from_residual("dressed", Backend::fd, seed, cfg, f, t.get(t.fd)));
      out.push_back(detail::agreement("dressed", seed, cfg, a, f, t.get(t.agreement)));

      // Measured shift: (H_left - H_right) on the dressed minus undressed state.
      auto ratio = [&](const ProductState& s) {
        auto app = apply_H_deformed(m, Side::left, s, cfg, ctx, Backend::analytic);
        app.add(apply_H_deformed(m, Side::right, s, cfg, ctx, Backend::analytic), -1.0);
        return app;
      };
      const auto F = build_kernel_F(m);
      const auto dressed = ratio(dress_plane_wave(F, d.v, d.c, m));
      const auto plain = ratio(F);
      out.push_back(detail::record(
          "measured_shift", "analytic", seed, cfg.coords,
          std::abs(dressed.value - plain.value - shift),
          1.0 + std::max(dressed.max_term, plain.max_term), t.get(t.analytic)));

      // Closed form: sum of kinetic coefficient times k_J^2 over the momenta.
      const auto D = dress_plane_wave(F, d.v, d.c, m);
      complex kinetic{};
      for (int j = 0; j < m.size(); ++j) {
        const complex k = D.momentum()[j];
        const Group g = m.group_of(j);
        const complex coef = g == Group::x    ? 1.0
                             : g == Group::xt ? -m.lambda
                             : g == Group::y  ? -1.0
                                              : m.lambda;
        kinetic += coef * k * k;
      }
      out.push_back(detail::closed_form("shift_closed_form", seed, kinetic, shift,
                                        t.get(t.closed_form)));
      for (auto& r : out) r.params = params;
      return out;
    });
    detail::append(rep, std::move(parts));
    rep.parameters = {{"samples", count}, {"seed", o.seed}};
    if (o.v) rep.parameters["v"] = *o.v;
    return rep;
  });
}

/// Exact groundstates at lambda = Ntilde/N.
inline ResidualReport run_cor2(const SuiteOptions& o) {
  return detail::timed("cor2", [&] {
    ResidualReport rep;
    rep.metadata = detail::base_metadata(o);
    const Tolerances& t = o.tol;
    std::vector<std::pair<int, int>> pairs = {{1, 1}, {2, 1}, {2, 2}, {3, 2}};
    if (o.N || o.Ntilde) {
      if (!o.N || !o.Ntilde) throw ConstraintError("cor2 needs both --N and --Ntilde");
      if (*o.N < 1 || *o.Ntilde < 1) throw ConstraintError("cor2 needs N, Ntilde >= 1");
      pairs = {{*o.N, *o.Ntilde}};
    }
    for (auto [N, Nt] : pairs) {
      const double lam = static_cast<double>(Nt) / N;
      if (o.lambda && std::abs(*o.lambda - lam) > 1e-12)
        throw ConstraintError("cor2 requires lambda = Ntilde/N = " + std::to_string(lam));
    }
    std::vector<EllipticContext> ctxs;
    if (o.has_context()) ctxs.push_back(o.context());
    else ctxs = {EllipticContext::from_beta(2.0), EllipticContext::from_beta(4.0)};
    const int per = o.samples.value_or(10);

    struct Job { int N, Nt; std::size_t c; int k; };
    std::vector<Job> jobs;
    for (auto [N, Nt] : pairs)
      for (std::size_t c = 0; c < ctxs.size(); ++c)
        for (int k = 0; k < per; ++k) jobs.push_back({N, Nt, c, k});
    auto parts = detail::parallel_map<std::vector<SampleRecord>>(
        static_cast<int>(jobs.size()), [&](int i) {
          const auto& j = jobs[i];
          const auto& ctx = ctxs[j.c];
          const auto seed = detail::derive_seed(o.seed, 6, i);
          const auto cfg = sample_configurations(j.N + j.Nt, o.min_sep, 1, seed).front();
          json params = {{"N", j.N}, {"Ntilde", j.Nt},
                         {"lambda", static_cast<double>(j.Nt) / j.N}};
          params.update(detail::context_json(ctx));
          params["eigenvalue"] = energy_E0_cor2(j.N, j.Nt, ctx);
          const auto a = residual_cor2(j.N, j.Nt, ctx, cfg, Backend::analytic, o.fd);
          const auto f = residual_cor2(j.N, j.Nt, ctx, cfg, Backend::fd, o.fd);
          std::vector<SampleRecord> out{
              detail::from_residual("cor2", Backend::analytic, seed, cfg, a, t.get(t.analytic)),
              detail::from_residual("cor2", Backend::fd, seed, cfg, f, t.get(t.fd)),
              detail::agreement("cor2", seed, cfg, a, f, t.get(t.agreement))};
          for (auto& r : out) r.params = params;
          return out;
        });
    detail::append(rep, std::move(parts));
    rep.parameters = {{"samples_per_case", per}, {"seed", o.seed}};
    if (pairs.size() == 1) {
      const auto [N, Nt] = pairs.front();
      rep.parameters["N"] = N;
      rep.parameters["Ntilde"] = Nt;
      rep.parameters["lambda"] = static_cast<double>(Nt) / N;
      if (ctxs.size() == 1) {
        rep.parameters["context"] = detail::context_json(ctxs.front());
        rep.parameters["eigenvalue"] = energy_E0_cor2(N, Nt, ctxs.front());
      }
    }
    return rep;
  });
}

/// Eigenfunctions Psi_n = Psi0 P_n: FD residuals on the full state, the
/// under-the-integral cross-check, quadrature stability and the q = 0
/// closed forms of P_n.
inline ResidualReport run_cor3(const SuiteOptions& o) {
  return detail::timed("cor3", [&] {
    ResidualReport rep;
    rep.metadata = detail::base_metadata(o);
    const Tolerances& t = o.tol;
    const int N = o.N.value_or(2), Nt = o.Ntilde.value_or(1);
    if (N < 2 || Nt < 1) throw ConstraintError("cor3 needs N >= 2 and Ntilde >= 1");
    const double lam = static_cast<double>(Nt) / (N - 1);
    if (o.lambda && std::abs(*o.lambda - lam) > 1e-12)
      throw ConstraintError("cor3 requires lambda = Ntilde/(N-1) = " + std::to_string(lam));
    const IntRange range = o.n_range.value_or(IntRange{-2, 3});
    if (range.hi < range.lo) throw ConstraintError("empty n range");
    std::vector<EllipticContext> ctxs;
    if (o.has_context()) ctxs.push_back(o.context());
    else ctxs = {EllipticContext::from_beta(2.4), EllipticContext::from_beta(2.5)};
    for (const auto& ctx : ctxs) o.quad.validate(ctx);
    const int per = o.samples.value_or(5);
    const int max_attempts = 50;

    struct Job { std::size_t c; int n; int k; };
    std::vector<Job> jobs;
    json skipped = json::array();
    for (std::size_t c = 0; c < ctxs.size(); ++c)
      for (int n = range.lo; n <= range.hi; ++n) {
        // P_n vanishes identically for n < 0 at q = 0.
        if (ctxs[c].is_trigonometric() && n < 0) {
          skipped.push_back(n);
          continue;
        }
        for (int k = 0; k < per; ++k) jobs.push_back({c, n, k});
      }
    if (!skipped.empty()) rep.metadata["skipped_n_trigonometric"] = skipped;

    auto parts = detail::parallel_map<std::vector<SampleRecord>>(
        static_cast<int>(jobs.size()), [&](int i) {
          const auto& j = jobs[i];
          const auto& ctx = ctxs[j.c];
          const auto seed = detail::derive_seed(o.seed, 7, i);
          const CoefficientState state(N, Nt, lam, j.n, o.quad);
          // Resample configurations where P_n is (numerically) zero.
          Configuration cfg;
          int rejected = 0;
          for (;; ++rejected) {
            if (rejected >= max_attempts)
              throw ConvergenceError("P_" + std::to_string(j.n) +
                                     " degenerate at every sampled configuration");
            cfg = sample_configurations(N + Nt, o.min_sep, 1,
                                        detail::derive_seed(seed, 1, rejected))
                      .front();
            const auto c = state.coefficient(cfg, ctx);
            if (std::abs(c.at(j.n)) >= kDegenerateCoefficient * c.scale_at(j.n)) break;
          }
          const double En = energy_En_cor3(N, Nt, j.n, ctx);
          json params = {{"N", N}, {"Ntilde", Nt}, {"lambda", lam}, {"n", j.n},
                         {"eigenvalue", En}, {"rejected", rejected},
                         {"quad_nodes", o.quad.nodes},
                         {"quad_radius", o.quad.resolved_radius(ctx)}};
          params.update(detail::context_json(ctx));
          const auto f = residual_cor3(N, Nt, j.n, ctx, cfg, o.quad, Backend::fd, o.fd);
          const auto a =
              residual_cor3(N, Nt, j.n, ctx, cfg, o.quad, Backend::analytic, o.fd);
          std::vector<SampleRecord> out{
              detail::from_residual("cor3", Backend::fd, seed, cfg, f, t.get(t.cor3)),
              detail::from_residual("cor3_jet", Backend::analytic, seed, cfg, a,
                                    t.get(t.analytic)),
              detail::agreement("cor3", seed, cfg, a, f, t.get(t.agreement))};
          if (j.k == 0) {
            const auto p = state.annulus_product(cfg);
            const IntRange one{j.n, j.n};
            const auto base = pn_coefficients(ctx, p, one, o.quad);
            QuadratureSpec twice = o.quad;
            twice.nodes *= 2;
            const auto doubled = pn_coefficients(ctx, p, one, twice);
            const complex P = base.at(j.n);
            out.push_back(detail::record("node_doubling", "quadrature", seed, cfg.coords,
                                         std::abs(P - doubled.at(j.n)),
                                         std::max(1.0, std::abs(P)),
                                         t.get(t.node_doubling)));
            if (!ctx.is_trigonometric()) {
              const double outer = 1.0 / (ctx.q() * ctx.q());
              const auto r1 = pn_coefficients(ctx, p, one, {o.quad.nodes, 1.6});
              const auto r2 =
                  pn_coefficients(ctx, p, one, {o.quad.nodes, 0.6 * outer});
              out.push_back(detail::record(
                  "contour_independence", "quadrature", seed, cfg.coords,
                  std::abs(r1.at(j.n) - r2.at(j.n)), std::max(1.0, std::abs(P)),
                  t.get(t.contour)));
            }
            out.push_back(detail::closed_form("spectrum_shape", seed,
                                              En - energy_En_cor3(N, Nt, 0, ctx),
                                              static_cast<double>(j.n) * j.n,
                                              t.get(t.closed_form)));
          }
          for (auto& r : out) r.params = params;
          return out;
        });
    detail::append(rep, std::move(parts));

    // q = 0: P_0 = 1, P_1 = lambda sum z - sum zt, P_{-1} = 0.
    const auto trig = EllipticContext::trigonometric();
    for (int k = 0; k < per; ++k) {
      const auto seed = detail::derive_seed(o.seed, 8, k);
      const auto cfg = sample_configurations(N + Nt, o.min_sep, 1, seed).front();
      const CoefficientState state(N, Nt, lam, 0, o.quad);
      const auto p = state.annulus_product(cfg);
      const auto c = pn_coefficients(trig, p, {-1, 1}, o.quad);
      complex p1{};
      for (complex z : p.z) p1 += lam * z;
      for (complex z : p.zt) p1 -= z;
      const double res = std::max({std::abs(c.at(0) - 1.0), std::abs(c.at(1) - p1),
                                   std::abs(c.at(-1))});
      auto rec = detail::record("q0_closed_forms", "quadrature", seed, cfg.coords, res,
                                1.0, t.get(t.q0_closed_form));
      rec.params = {{"N", N}, {"Ntilde", Nt}, {"lambda", lam}, {"q", 0.0}};
      rep.samples.push_back(std::move(rec));
    }
    rep.parameters = {{"N", N}, {"Ntilde", Nt}, {"lambda", lam},
                      {"n", {range.lo, range.hi}}, {"samples_per_n", per},
                      {"seed", o.seed}};
    rep.metadata["quadrature"] = {{"nodes", o.quad.nodes},
                                  {"radius", o.quad.radius == 0.0
                                                 ? json("default")
                                                 : json(o.quad.radius)}};
    rep.metadata["degenerate_threshold"] = kDegenerateCoefficient;
    return rep;
  });
}

/// Closed-form constants: pair-sum forms, the zero-total-mass reduction,
/// convention shifts, the mass embedding and the plane-wave shift.
inline ResidualReport run_shift(const SuiteOptions& o) {
  return detail::timed("shift", [&] {
    ResidualReport rep;
    rep.metadata = detail::base_metadata(o);
    const double tol = o.tol.get(o.tol.closed_form);
    const int count = o.samples.value_or(20);
    auto parts = detail::parallel_map<std::vector<SampleRecord>>(count, [&](int i) {
      const auto seed = detail::derive_seed(o.seed, 9, i);
      Rng rng(seed);
      const auto ctx = detail::draw_context(o, rng, 1.5, 6.0);
      const int n = o.calN.value_or(rng.integer(2, 5));
      const complex lam = o.lambda.value_or(rng.coupling());
      std::vector<complex> masses;
      for (int j = 0; j < n; ++j) masses.push_back(detail::random_mass(rng));
      if (!o.masses.empty()) masses = o.masses;
      const MassModel model(lam, masses);
      const complex c0v = ctx.c0();
      std::vector<SampleRecord> out;

      out.push_back(detail::closed_form("E0_pair_sum", seed, energy_E0_prop1(model, ctx),
                                        energy_E0_pair_sum(model, ctx), tol));

      // Zero total mass: E0 = -lambda^2 |m^3| c0.
      std::vector<complex> zero;
      complex rest{};
      do {
        zero.clear();
        rest = 0.0;
        for (int j = 0; j + 1 < std::max(n, 2); ++j) {
          zero.push_back(detail::random_mass(rng));
          rest += zero.back();
        }
      } while (std::abs(rest) < 0.2);
      zero.push_back(-rest);
      const MassModel balanced(lam, zero);
      out.push_back(detail::closed_form("zero_mass_reduction", seed,
                                        energy_E0_prop1(balanced, ctx),
                                        -lam * lam * balanced.sum_m3() * c0v, tol));

      // Convention shift by (c0, c1) and by a random (b0, b1).
      out.push_back(detail::closed_form(
          "shift_c0_c1", seed, shifted_E0(model, ctx, {ctx.c0(), EllipticContext::c1}),
          lam * static_cast<double>(n - 1) * model.sum_m() * c0v, tol));
      const ShiftSpec s{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      out.push_back(detail::closed_form("shift_pair_sum", seed, shifted_E0(model, ctx, s),
                                        shifted_E0_pair_sum(model, ctx, s), tol));

      // Deformed constants: embedding, balanced reduction, plane-wave shift.
      DeformedModel dm{rng.integer(0, 2), rng.integer(0, 2), rng.integer(0, 2),
                       rng.integer(0, 2), rng.coupling()};
      out.push_back(detail::closed_form("embedding_constant", seed, constant_C(dm, ctx),
                                        energy_E0_prop1(dm.embedding(), ctx), tol));
      DeformedModel bal = dm;
      if (bal.N == bal.M) bal.N += 1;
      if (bal.Ntilde == bal.Mtilde) bal.Ntilde += 1;
      bal.lambda = static_cast<double>(bal.Ntilde - bal.Mtilde) / (bal.N - bal.M);
      const double dN = bal.N - bal.M, dNt = bal.Ntilde - bal.Mtilde;
      out.push_back(detail::closed_form(
          "balanced_reduction", seed, constant_C(bal, ctx),
          (-bal.lambda * bal.lambda * dN + dNt / bal.lambda) * c0v, tol));
      const double v = rng.uniform(-1.5, 1.5);
      const auto D = dress_plane_wave(build_kernel_F(dm), v, 1.0, dm);
      complex kinetic{};
      for (int j = 0; j < dm.size(); ++j) {
        const complex k = D.momentum()[j];
        const Group g = dm.group_of(j);
        const complex coef = g == Group::x    ? 1.0
                             : g == Group::xt ? -dm.lambda
                             : g == Group::y  ? -1.0
                                              : dm.lambda;
        kinetic += coef * k * k;
      }
      out.push_back(detail::closed_form("plane_wave_shift", seed, kinetic,
                                        plane_wave_shift(dm, v), tol));

      json params = detail::model_json(model);
      params.update(detail::context_json(ctx));
      for (auto& r : out) r.params = params;
      return out;
    });
    detail::append(rep, std::move(parts));
    rep.parameters = {{"samples", count}, {"seed", o.seed}};
    return rep;
  });
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"appendix", "prop1", "cor1", "cor2",
                                                 "cor3",     "lemma1", "shift"};
  return names;
}

inline ResidualReport run_suite(const std::string& name, const SuiteOptions& o);

/// Every suite in turn; check names are prefixed with the suite id.
inline ResidualReport run_all(const SuiteOptions& o) {
  return detail::timed("all", [&] {
    ResidualReport rep;
    for (const auto& name : suite_names()) {
      auto sub = run_suite(name, o);
      for (auto& s : sub.samples) {
        s.check = name + "/" + s.check;
        rep.samples.push_back(std::move(s));
      }
      rep.parameters[name] = sub.parameters;
      rep.metadata[name] = sub.metadata;
    }
    return rep;
  });
}

inline ResidualReport run_suite(const std::string& name, const SuiteOptions& o) {
  if (name == "appendix") return run_appendix(o);
  if (name == "prop1") return run_prop1(o);
  if (name == "cor1") return run_cor1(o);
  if (name == "cor2") return run_cor2(o);
  if (name == "cor3") return run_cor3(o);
  if (name == "lemma1") return run_lemma1(o);
  if (name == "shift") return run_shift(o);
  if (name == "all") return run_all(o);
  throw ConstraintError("unknown suite '" + name + "'");
}

}  // namespace ecs
