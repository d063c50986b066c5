#include "invdes/circuit_ir/units.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <string>
#include <utility>

namespace invdes::circuit_ir {

std::string_view to_string(Quantity q) {
  switch (q) {
    case Quantity::resistance: return "resistance";
    case Quantity::capacitance: return "capacitance";
    case Quantity::inductance: return "inductance";
    case Quantity::length: return "length";
    case Quantity::voltage: return "voltage";
    case Quantity::current: return "current";
    case Quantity::area: return "area";
  }
  return "?";
}

double unit_scale(Quantity q) {
  switch (q) {
    case Quantity::resistance: return 1e3;
    case Quantity::capacitance: return 1e-13;
    case Quantity::inductance: return 1e-10;
    case Quantity::length: return 1e-6;
    case Quantity::voltage: return 1.0;
    case Quantity::current: return 1e-3;
    case Quantity::area: return 1e-13;
  }
  return 1.0;
}

std::optional<double> parse_si_literal(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double mantissa = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, mantissa);
  if (ec != std::errc() || ptr == begin) return std::nullopt;

  std::string suffix(ptr, end);
  std::transform(suffix.begin(), suffix.end(), suffix.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (suffix.empty()) return mantissa;

  static constexpr std::array<std::pair<std::string_view, double>, 7> kSuffixes = {{
      {"meg", 1e6}, {"f", 1e-15}, {"p", 1e-12}, {"n", 1e-9}, {"u", 1e-6}, {"m", 1e-3}, {"k", 1e3},
  }};
  for (const auto& [s, mult] : kSuffixes) {
    if (suffix == s) return mantissa * mult;
  }
  return std::nullopt;
}

std::string format_literal(double value) {
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    double back = 0.0;
    std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
    if (back == value) break;
  }
  return buf;
}

}  // namespace invdes::circuit_ir
