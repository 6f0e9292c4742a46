#pragma once

// Text forms accepted on the command line: complex numbers ("1.3-0.4i",
// "2i", "-i", "0.5"), comma lists of them, and integer ranges ("-2..3").

#include <cctype>
#include <complex>
#include <string>
#include <vector>

#include "ecs/coefficients.hpp"
#include "ecs/errors.hpp"

namespace ecs {

namespace detail {

inline double parse_real(const std::string& s, const std::string& whole) {
  if (s.empty()) throw ConstraintError("cannot parse number '" + whole + "'");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConstraintError("cannot parse number '" + whole + "'");
  }
  if (used != s.size()) throw ConstraintError("cannot parse number '" + whole + "'");
  return v;
}

}  // namespace detail

inline std::complex<double> parse_complex(std::string text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw ConstraintError("empty complex number");
  const char last = s.back();
  if (last != 'i' && last != 'j') return detail::parse_real(s, text);
  s.pop_back();
  // Split at the last sign that is not a leading sign or an exponent sign.
  std::size_t split = std::string::npos;
  for (std::size_t k = s.size(); k-- > 1;) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  const std::string re = split == std::string::npos ? "" : s.substr(0, split);
  std::string im = split == std::string::npos ? s : s.substr(split);
  if (im.empty() || im == "+") im = "1";
  if (im == "-") im = "-1";
  return {re.empty() ? 0.0 : detail::parse_real(re, text),
          detail::parse_real(im, text)};
}

inline std::vector<std::complex<double>> parse_complex_list(const std::string& text) {
  std::vector<std::complex<double>> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = text.find(',', start);
    out.push_back(parse_complex(text.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

/// "a..b" or a single integer "a".
inline IntRange parse_range(const std::string& text) {
  auto to_int = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      throw ConstraintError("cannot parse range '" + text + "'");
    }
    if (used != s.size()) throw ConstraintError("cannot parse range '" + text + "'");
    return v;
  };
  const std::size_t dots = text.find("..");
  if (dots == std::string::npos) {
    const int v = to_int(text);
    return {v, v};
  }
  const IntRange r{to_int(text.substr(0, dots)), to_int(text.substr(dots + 2))};
  if (r.hi < r.lo) throw ConstraintError("empty range '" + text + "'");
  return r;
}

}  // namespace ecs
