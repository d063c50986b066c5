#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace invdes::circuit_ir {

/// Physical quantity carried by a component attribute.
enum class Quantity { resistance, capacitance, inductance, length, voltage, current, area };

std::string_view to_string(Quantity q);

/// Unit scale used to rescale SI values into network-friendly magnitudes
/// (R/1e3, C/1e-13, L/1e-10, W/1e-6, V/1, I/1e-3, areas/1e-13).
double unit_scale(Quantity q);

/// Parses a literal such as "45n", "1.5k", "10meg" or "2e-6".
/// Suffixes f, p, n, u, m, k, meg are case-insensitive. Returns nullopt when
/// the text is not a numeric literal.
std::optional<double> parse_si_literal(std::string_view text);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_literal(double value);

}  // namespace invdes::circuit_ir
