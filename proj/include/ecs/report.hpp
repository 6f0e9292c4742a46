#pragma once

// Serialization of residual reports and tables. Output depends only on the
// report contents and the manifest; wall time lives in `elapsed_ms` alone
// and can be nulled for byte-identical comparison.

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ecs/verify.hpp"

namespace ecs {

/// Subcommand, resolved flags, seed, tolerance override, output path and
/// format: everything needed to reproduce a run.
struct RunManifest {
  std::string subcommand;
  json parameters = json::object();
  std::uint64_t seed = 0;
  std::optional<double> tolerance_override;
  std::string output = "-";
  std::string format = "json";

  json to_json() const {
    return {{"subcommand", subcommand},
            {"parameters", parameters},
            {"seed", seed},
            {"tolerance_override",
             tolerance_override ? json(*tolerance_override) : json(nullptr)},
            {"output", output},
            {"format", format}};
  }
};

inline json sample_json(const SampleRecord& s) {
  return {{"check", s.check},
          {"backend", s.backend},
          {"seed", s.seed},
          {"coords", s.coords},
          {"params", s.params},
          {"residual", s.residual},
          {"scale", s.scale},
          {"rel", s.rel},
          {"tolerance", s.tolerance},
          {"error_estimate", s.error_estimate},
          {"derived", s.derived},
          {"pass", s.pass}};
}

inline json report_json(const ResidualReport& r, const RunManifest& m,
                        bool timing = true) {
  json samples = json::array();
  for (const auto& s : r.samples) samples.push_back(sample_json(s));
  return {{"manifest", m.to_json()},
          {"suite", r.suite},
          {"parameters", r.parameters},
          {"metadata", r.metadata},
          {"tiers", r.tiers()},
          {"samples", samples},
          {"max_rel_residual", r.max_rel_residual},
          {"tolerance", r.tolerance},
          {"pass", r.pass},
          {"elapsed_ms", timing ? json(r.elapsed_ms) : json(nullptr)}};
}

namespace detail {

inline std::string csv_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// One row per sample; manifest and summary as leading `#` lines.
inline std::string report_csv(const ResidualReport& r, const RunManifest& m,
                              bool timing = true) {
  std::ostringstream os;
  os << "# manifest: " << m.to_json().dump() << "\n";
  os << "# suite: " << r.suite << "\n";
  os << "# max_rel_residual: " << detail::csv_number(r.max_rel_residual)
     << "\n# tolerance: " << detail::csv_number(r.tolerance)
     << "\n# pass: " << (r.pass ? "true" : "false") << "\n";
  if (timing) os << "# elapsed_ms: " << detail::csv_number(r.elapsed_ms) << "\n";
  os << "check,backend,seed,residual,scale,rel,tolerance,error_estimate,"
        "derived,pass,coords,params\n";
  for (const auto& s : r.samples) {
    std::string coords;
    for (std::size_t i = 0; i < s.coords.size(); ++i)
      coords += (i ? ";" : "") + detail::csv_number(s.coords[i]);
    os << s.check << ',' << s.backend << ',' << s.seed << ','
       << detail::csv_number(s.residual) << ',' << detail::csv_number(s.scale)
       << ',' << detail::csv_number(s.rel) << ','
       << detail::csv_number(s.tolerance) << ','
       << detail::csv_number(s.error_estimate) << ','
       << (s.derived ? "true" : "false") << ',' << (s.pass ? "true" : "false")
       << ',' << coords << ',' << detail::csv_quote(s.params.dump()) << "\n";
  }
  return os.str();
}

/// Rows of uniform objects; columns are the keys of the first row.
inline std::string table_csv(const json& rows, const RunManifest& m) {
  std::ostringstream os;
  os << "# manifest: " << m.to_json().dump() << "\n";
  if (rows.empty()) return os.str();
  std::vector<std::string> keys;
  for (const auto& [k, v] : rows.front().items()) keys.push_back(k);
  for (std::size_t i = 0; i < keys.size(); ++i) os << (i ? "," : "") << keys[i];
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const auto& v = row.at(keys[i]);
      os << (i ? "," : "");
      if (v.is_number_float()) os << detail::csv_number(v.get<double>());
      else if (v.is_string()) os << v.get<std::string>();
      else os << v.dump();
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace ecs
