#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "invdes/circuit_ir/units.hpp"
#include "invdes/error.hpp"

namespace invdes::circuit_ir {

enum class ComponentKind { nmos, pmos, resistor, capacitor, inductor, vsource, isource, balun, varactor };
enum class SourceKind { none, dc, ac };

std::string_view to_string(ComponentKind k);
std::optional<ComponentKind> parse_component_kind(std::string_view text);
std::string_view to_string(SourceKind k);

bool is_mos(ComponentKind k);
bool is_source(ComponentKind k);
/// Number of terminals a component of this kind must list.
std::size_t terminal_count(ComponentKind k);

/// One attribute a component kind accepts, with its quantity and optional default.
struct AttrSchema {
  std::string name;
  Quantity quantity;
  std::optional<double> default_value;
};

/// Accepted attributes per kind, in feature order.
std::span<const AttrSchema> attribute_schema(ComponentKind k);

/// Parse failure with 1-based line/column of the offending token.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message);
  [[nodiscard]] std::size_t line() const { return line_; }
  [[nodiscard]] std::size_t column() const { return column_; }
  [[nodiscard]] const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string detail_;
};

/// Literal number or reference to a declared symbol.
struct AttrValue {
  std::variant<double, std::string> value;

  [[nodiscard]] bool is_symbol() const { return std::holds_alternative<std::string>(value); }
  [[nodiscard]] double literal() const { return std::get<double>(value); }
  [[nodiscard]] const std::string& symbol() const { return std::get<std::string>(value); }

  friend bool operator==(const AttrValue&, const AttrValue&) = default;
};

struct ComponentDecl {
  std::string id;
  ComponentKind kind = ComponentKind::resistor;
  std::vector<std::string> terminals;
  std::map<std::string, AttrValue> attrs;
  SourceKind source = SourceKind::none;
  std::size_t line = 0;  ///< diagnostics only; ignored by equality

  friend bool operator==(const ComponentDecl& a, const ComponentDecl& b) {
    return a.id == b.id && a.kind == b.kind && a.terminals == b.terminals && a.attrs == b.attrs &&
           a.source == b.source;
  }
};

/// A sweepable parameter: SI bounds and the unit scale used during optimization.
struct ParamSpec {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  double scale = 1.0;

  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

struct Netlist {
  std::string name;
  std::vector<ComponentDecl> components;
  std::vector<ParamSpec> parameters;  ///< declaration order
  std::map<std::string, double> constants;

  [[nodiscard]] const ParamSpec* find_parameter(std::string_view symbol) const;
  /// Nets in first-appearance order.
  [[nodiscard]] std::vector<std::string> nodes() const;

  friend bool operator==(const Netlist&, const Netlist&) = default;
};

/// Parses the line-based netlist format:
///   .name NAME
///   .param NAME MIN MAX SCALE
///   .const NAME VALUE
///   ID KIND NET... key=value... [type=dc|ac]
/// `#` starts a comment. Throws ParseError.
Netlist parse_netlist(std::string_view text);

Netlist load_netlist(const std::filesystem::path& path);

/// Canonical text form; parse_netlist(serialize(n)) == n.
std::string serialize(const Netlist& netlist);

}  // namespace invdes::circuit_ir
