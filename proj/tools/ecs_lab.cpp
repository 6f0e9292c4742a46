// ecs_lab: run residual suites and print constant / eigenvalue / coefficient
// tables.
//
//   ecs_lab verify <appendix|prop1|cor1|cor2|cor3|lemma1|shift|all> [flags]
//   ecs_lab table  <eigenvalues|constants|coefficients> [flags]
//
// Exit codes: 0 pass, 1 some sample failed, 2 constraint or usage error,
// 3 numerical-domain error (singularity, truncation, convergence, domain).

#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ecs/constants.hpp"
#include "ecs/parse.hpp"
#include "ecs/report.hpp"
#include "ecs/verify.hpp"

namespace {

using ecs::json;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConstraint = 2;
constexpr int kExitNumerical = 3;

struct Flags {
  double beta = 0.0, q = 0.0;
  std::string lambda, masses, n_range;
  int calN = 0, N = 0, Ntilde = 0, M = 0, Mtilde = 0;
  double v = 0.0;
  int samples = 0;
  std::uint64_t seed = 1;
  double tol = 0.0;
  int fd_order = 4;
  double fd_step = 1e-3;
  int quad_nodes = 256;
  double quad_radius = 0.0;
  std::string format = "json", out = "-";
  bool no_timing = false;
  double b0 = 0.0, b1 = 0.0;
  std::string x, xt;
};

/// Flags shared by both subcommands.
void add_common(CLI::App* app, Flags& f) {
  auto* beta = app->add_option("--beta", f.beta, "Imaginary period beta > 0");
  auto* q = app->add_option("--q", f.q, "Nome q in [0,1); 0 is the trigonometric limit");
  beta->excludes(q);
  app->add_option("--lambda", f.lambda, "Coupling, e.g. 1.3 or 1.3-0.4i");
  app->add_option("--masses", f.masses, "Comma-separated (complex) masses");
  app->add_option("--calN", f.calN, "Number of particles of the source model");
  app->add_option("--N", f.N, "Size of the x group");
  app->add_option("--Ntilde", f.Ntilde, "Size of the xt group");
  app->add_option("--M", f.M, "Size of the y group");
  app->add_option("--Mtilde", f.Mtilde, "Size of the yt group");
  app->add_option("--v", f.v, "Plane-wave dressing velocity");
  app->add_option("--n", f.n_range, "Integer n or range a..b");
  app->add_option("--quad-nodes", f.quad_nodes, "Quadrature nodes K")->check(CLI::Range(16, 1 << 16));
  app->add_option("--quad-radius", f.quad_radius, "Contour radius R in (1, 1/q^2); 0 = default");
  app->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app->add_option("--out", f.out, "Output path, - for standard output");
}

bool given(const CLI::App* app, const std::string& name) {
  return app->get_option(name)->count() > 0;
}

/// Raw flag values as given on the command line, in declaration order.
json given_flags(const CLI::App* app) {
  json out = json::object();
  for (const auto* opt : app->get_options()) {
    if (opt->get_name() == "--help" || opt->count() == 0) continue;
    const auto& res = opt->results();
    out[opt->get_name()] = res.empty() ? json(true)
                           : res.size() == 1 ? json(res.front())
                                             : json(res);
  }
  return out;
}

ecs::SuiteOptions suite_options(const CLI::App* app, const Flags& f) {
  ecs::SuiteOptions o;
  o.seed = f.seed;
  if (given(app, "--samples")) {
    if (f.samples < 1) throw ecs::ConstraintError("--samples must be >= 1");
    o.samples = f.samples;
  }
  if (given(app, "--beta")) o.beta = f.beta;
  if (given(app, "--q")) o.q = f.q;
  if (given(app, "--lambda")) o.lambda = ecs::parse_complex(f.lambda);
  if (given(app, "--masses")) o.masses = ecs::parse_complex_list(f.masses);
  if (given(app, "--calN")) o.calN = f.calN;
  if (given(app, "--N")) o.N = f.N;
  if (given(app, "--Ntilde")) o.Ntilde = f.Ntilde;
  if (given(app, "--M")) o.M = f.M;
  if (given(app, "--Mtilde")) o.Mtilde = f.Mtilde;
  if (given(app, "--v")) o.v = f.v;
  if (given(app, "--n")) o.n_range = ecs::parse_range(f.n_range);
  if (given(app, "--tol")) {
    if (!(f.tol > 0.0)) throw ecs::ConstraintError("--tol must be positive");
    o.tol.override_all = f.tol;
  }
  o.fd.space.order = f.fd_order;
  o.fd.space.h = f.fd_step;
  o.fd.space.validate();
  o.quad = {f.quad_nodes, f.quad_radius};
  if (o.has_context()) o.quad.validate(o.context());
  return o;
}

void emit(const std::string& text, const std::string& out) {
  if (out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream file(out, std::ios::binary);
  if (!file) throw ecs::ConstraintError("cannot open output file '" + out + "'");
  file << text;
}

json cjson(ecs::complex z) { return json::array({z.real(), z.imag()}); }

// ------------------------------------------------------------------ tables

json table_eigenvalues(const ecs::EllipticContext& ctx, const CLI::App* app,
                       const Flags& f, json& params) {
  const int N = given(app, "--N") ? f.N : 2;
  const int Nt = given(app, "--Ntilde") ? f.Ntilde : 1;
  const auto range = given(app, "--n") ? ecs::parse_range(f.n_range) : ecs::IntRange{-2, 3};
  params = {{"N", N}, {"Ntilde", Nt}};
  params.update(ecs::detail::context_json(ctx));
  if (N >= 1 && Nt >= 0) {
    params["groundstate_lambda"] = static_cast<double>(Nt) / N;
    params["groundstate_E0"] = ecs::energy_E0_cor2(N, Nt, ctx);
  }
  json rows = json::array();
  if (N < 2 || Nt < 1) return rows;
  params["lambda"] = static_cast<double>(Nt) / (N - 1);
  for (int n = range.lo; n <= range.hi; ++n) {
    const double E = ecs::energy_En_cor3(N, Nt, n, ctx);
    rows.push_back({{"n", n}, {"E", E}, {"E_minus_n2", E - static_cast<double>(n) * n}});
  }
  return rows;
}

json table_constants(const ecs::EllipticContext& ctx, const CLI::App* app,
                     const Flags& f, json& params) {
  const ecs::complex lam = given(app, "--lambda") ? ecs::parse_complex(f.lambda) : 1.0;
  const ecs::DeformedModel dm{f.N, f.Ntilde, f.M, f.Mtilde, lam};
  dm.validate();
  const ecs::ShiftSpec shift{f.b0, f.b1};
  params = ecs::detail::model_json(dm);
  params.update(ecs::detail::context_json(ctx));
  params["b0"] = shift.b0;
  params["b1"] = shift.b1;
  json rows = json::array();
  auto row = [&](const char* name, ecs::complex z) {
    rows.push_back({{"name", name}, {"re", z.real()}, {"im", z.imag()}});
  };
  row("C", ecs::constant_C(dm, ctx));
  row("beta_coefficient", dm.beta_coefficient());
  row("c0", ctx.c0());
  row("c1", ecs::EllipticContext::c1);
  if (dm.size() >= 1) {
    const auto emb = dm.embedding();
    row("E0_embedding", ecs::energy_E0_prop1(emb, ctx));
    row("E0_embedding_shifted", ecs::shifted_E0(emb, ctx, shift));
  }
  if (given(app, "--v")) row("plane_wave_shift", ecs::plane_wave_shift(dm, f.v));
  if (given(app, "--masses")) {
    const ecs::MassModel m(lam, ecs::parse_complex_list(f.masses));
    row("E0", ecs::energy_E0_prop1(m, ctx));
    row("E0_shifted", ecs::shifted_E0(m, ctx, shift));
  }
  return rows;
}

json table_coefficients(const ecs::EllipticContext& ctx, const CLI::App* app,
                        const Flags& f, json& params) {
  const int N = given(app, "--N") ? f.N : 2;
  const int Nt = given(app, "--Ntilde") ? f.Ntilde : 1;
  if (N < 1) throw ecs::ConstraintError("coefficients need N >= 1");
  const ecs::complex lam = given(app, "--lambda") ? ecs::parse_complex(f.lambda)
                           : N >= 2 ? ecs::complex(static_cast<double>(Nt) / (N - 1))
                                    : ecs::complex(1.0);
  std::vector<double> x, xt;
  if (given(app, "--x") || given(app, "--xt")) {
    for (auto z : ecs::parse_complex_list(f.x)) x.push_back(z.real());
    if (!f.xt.empty())
      for (auto z : ecs::parse_complex_list(f.xt)) xt.push_back(z.real());
    if (static_cast<int>(x.size()) != N || static_cast<int>(xt.size()) != Nt)
      throw ecs::ConstraintError("--x/--xt sizes must match --N/--Ntilde");
  } else {
    // Evenly spaced, decreasing angles.
    const int total = N + Nt;
    for (int k = 0; k < total; ++k) {
      const double a = ecs::kTwoPi * (total - k - 0.5) / total;
      (k < N ? x : xt).push_back(a);
    }
  }
  const auto range = given(app, "--n") ? ecs::parse_range(f.n_range) : ecs::IntRange{-2, 3};
  const ecs::QuadratureSpec quad{f.quad_nodes, f.quad_radius};
  const auto p = ecs::AnnulusProduct::from_angles(lam, x, xt);
  const auto c = ecs::pn_coefficients(ctx, p, range, quad);
  params = {{"N", N}, {"Ntilde", Nt}, {"lambda", cjson(lam)}, {"x", x}, {"xt", xt},
            {"quad_nodes", c.nodes}, {"quad_radius", c.radius}};
  params.update(ecs::detail::context_json(ctx));
  json rows = json::array();
  for (int n = range.lo; n <= range.hi; ++n) {
    const auto v = c.at(n);
    rows.push_back({{"n", n}, {"re", v.real()}, {"im", v.imag()},
                    {"abs", std::abs(v)}, {"scale", c.scale_at(n)}});
  }
  return rows;
}

ecs::EllipticContext table_context(const CLI::App* app, const Flags& f) {
  if (given(app, "--q")) return ecs::EllipticContext::from_q(f.q);
  return ecs::EllipticContext::from_beta(given(app, "--beta") ? f.beta : 2.5);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual suites and tables for elliptic Calogero-Sutherland identities"};
  app.require_subcommand(1);
  Flags f;

  std::string suite;
  auto* verify = app.add_subcommand("verify", "Run a residual suite and write a report");
  verify->add_option("suite", suite, "Suite id")
      ->required()
      ->check(CLI::IsMember({"appendix", "prop1", "cor1", "cor2", "cor3", "lemma1",
                             "shift", "all"}));
  add_common(verify, f);
  verify->add_option("--samples", f.samples, "Samples (per case) instead of the suite default");
  verify->add_option("--seed", f.seed, "Base seed");
  verify->add_option("--tol", f.tol, "Override every tolerance");
  verify->add_option("--fd-order", f.fd_order, "FD stencil order")->check(CLI::IsMember({2, 4, 6}));
  verify->add_option("--fd-step", f.fd_step, "FD step h");
  verify->add_flag("--no-timing", f.no_timing, "Write elapsed_ms as null");

  std::string kind;
  auto* table = app.add_subcommand("table", "Print eigenvalues, constants or P_n coefficients");
  table->add_option("kind", kind, "Table kind")
      ->required()
      ->check(CLI::IsMember({"eigenvalues", "constants", "coefficients"}));
  add_common(table, f);
  table->add_option("--b0", f.b0, "Constant added to V");
  table->add_option("--b1", f.b1, "beta log-derivative of the theta rescaling");
  table->add_option("--x", f.x, "Comma-separated x angles (coefficients)");
  table->add_option("--xt", f.xt, "Comma-separated xt angles (coefficients)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConstraint;
  }

  ecs::RunManifest manifest;
  manifest.output = f.out;
  manifest.format = f.format;
  manifest.seed = f.seed;
  const CLI::App* sub = verify->parsed() ? verify : table;
  manifest.subcommand = verify->parsed() ? "verify " + suite : "table " + kind;
  manifest.parameters = given_flags(sub);
  if (verify->parsed() && given(verify, "--tol")) manifest.tolerance_override = f.tol;

  try {
    if (verify->parsed()) {
      const auto opts = suite_options(verify, f);
      const auto report = ecs::run_suite(suite, opts);
      const bool timing = !f.no_timing;
      emit(f.format == "csv" ? ecs::report_csv(report, manifest, timing)
                             : ecs::report_json(report, manifest, timing).dump(2) + "\n",
           f.out);
      if (!report.pass)
        std::cerr << "verify " << suite << ": FAIL max_rel_residual="
                  << report.max_rel_residual << " tolerance=" << report.tolerance << "\n";
      return report.pass ? kExitPass : kExitFail;
    }
    const auto ctx = table_context(table, f);
    json params;
    json rows = kind == "eigenvalues"  ? table_eigenvalues(ctx, table, f, params)
                : kind == "constants" ? table_constants(ctx, table, f, params)
                                      : table_coefficients(ctx, table, f, params);
    if (f.format == "csv") {
      emit(ecs::table_csv(rows, manifest), f.out);
    } else {
      const json doc = {{"manifest", manifest.to_json()}, {"table", kind},
                        {"parameters", params}, {"rows", rows}};
      emit(doc.dump(2) + "\n", f.out);
    }
    return kExitPass;
  } catch (const ecs::ConstraintError& e) {
    std::cerr << "constraint violation: " << e.what()
              << "\nparameters: " << manifest.to_json().dump() << "\n";
    return kExitConstraint;
  } catch (const ecs::Error& e) {
    std::cerr << "numerical-domain error: " << e.what()
              << "\nparameters: " << manifest.to_json().dump() << "\n";
    return kExitNumerical;
  }
}
