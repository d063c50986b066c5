#include "invdes/circuit_ir/netlist.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace invdes::circuit_ir {

namespace {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    tokens.push_back({line.substr(start, i - start), start + 1});
  }
  return tokens;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

bool is_net_name(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == ':' ||
           c == '+' || c == '-';
  });
}

const std::array<AttrSchema, 2> kMosAttrs = {{
    {"L", Quantity::length, 45e-9},
    {"W", Quantity::length, std::nullopt},
}};
const std::array<AttrSchema, 1> kResistorAttrs = {{{"R", Quantity::resistance, std::nullopt}}};
const std::array<AttrSchema, 1> kCapacitorAttrs = {{{"C", Quantity::capacitance, std::nullopt}}};
const std::array<AttrSchema, 1> kInductorAttrs = {{{"L", Quantity::inductance, std::nullopt}}};
const std::array<AttrSchema, 2> kVsourceAttrs = {{
    {"V", Quantity::voltage, 0.0},
    {"rport", Quantity::resistance, 0.0},
}};
const std::array<AttrSchema, 1> kIsourceAttrs = {{{"I", Quantity::current, std::nullopt}}};
const std::array<AttrSchema, 3> kBalunAttrs = {{
    {"Lm", Quantity::inductance, std::nullopt},
    {"Lp", Quantity::inductance, std::nullopt},
    {"Ls", Quantity::inductance, std::nullopt},
}};
const std::array<AttrSchema, 2> kVaractorAttrs = {{
    {"L", Quantity::length, 45e-9},
    {"W", Quantity::length, std::nullopt},
}};

struct PendingSymbol {
  std::string symbol;
  std::size_t line;
  std::size_t column;
};

}  // namespace

std::string_view to_string(ComponentKind k) {
  switch (k) {
    case ComponentKind::nmos: return "nmos";
    case ComponentKind::pmos: return "pmos";
    case ComponentKind::resistor: return "resistor";
    case ComponentKind::capacitor: return "capacitor";
    case ComponentKind::inductor: return "inductor";
    case ComponentKind::vsource: return "vsource";
    case ComponentKind::isource: return "isource";
    case ComponentKind::balun: return "balun";
    case ComponentKind::varactor: return "varactor";
  }
  return "?";
}

std::optional<ComponentKind> parse_component_kind(std::string_view text) {
  for (auto k : {ComponentKind::nmos, ComponentKind::pmos, ComponentKind::resistor,
                 ComponentKind::capacitor, ComponentKind::inductor, ComponentKind::vsource,
                 ComponentKind::isource, ComponentKind::balun, ComponentKind::varactor}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string_view to_string(SourceKind k) {
  switch (k) {
    case SourceKind::none: return "none";
    case SourceKind::dc: return "dc";
    case SourceKind::ac: return "ac";
  }
  return "?";
}

bool is_mos(ComponentKind k) { return k == ComponentKind::nmos || k == ComponentKind::pmos; }

bool is_source(ComponentKind k) {
  return k == ComponentKind::vsource || k == ComponentKind::isource;
}

std::size_t terminal_count(ComponentKind k) {
  switch (k) {
    case ComponentKind::nmos:
    case ComponentKind::pmos:
    case ComponentKind::balun: return 3;
    default: return 2;
  }
}

std::span<const AttrSchema> attribute_schema(ComponentKind k) {
  switch (k) {
    case ComponentKind::nmos:
    case ComponentKind::pmos: return kMosAttrs;
    case ComponentKind::resistor: return kResistorAttrs;
    case ComponentKind::capacitor: return kCapacitorAttrs;
    case ComponentKind::inductor: return kInductorAttrs;
    case ComponentKind::vsource: return kVsourceAttrs;
    case ComponentKind::isource: return kIsourceAttrs;
    case ComponentKind::balun: return kBalunAttrs;
    case ComponentKind::varactor: return kVaractorAttrs;
  }
  return {};
}

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& message)
    : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column),
      detail_(message) {}

const ParamSpec* Netlist::find_parameter(std::string_view symbol) const {
  for (const auto& p : parameters) {
    if (p.name == symbol) return &p;
  }
  return nullptr;
}

std::vector<std::string> Netlist::nodes() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& c : components) {
    for (const auto& t : c.terminals) {
      if (seen.insert(t).second) out.push_back(t);
    }
  }
  return out;
}

Netlist parse_netlist(std::string_view text) {
  Netlist net;
  net.name = "netlist";
  std::set<std::string> ids;
  std::vector<PendingSymbol> pending;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto tokens = tokenize(line);
    if (tokens.empty()) {
      if (eol == text.size()) break;
      continue;
    }

    auto literal = [&](const Token& t) {
      auto v = parse_si_literal(t.text);
      if (!v) throw ParseError(line_no, t.column, "expected numeric literal, got '" + std::string(t.text) + "'");
      return *v;
    };
    auto symbol_name = [&](const Token& t) {
      if (!is_identifier(t.text)) {
        throw ParseError(line_no, t.column, "invalid identifier '" + std::string(t.text) + "'");
      }
      std::string name(t.text);
      if (net.find_parameter(name) || net.constants.count(name)) {
        throw ParseError(line_no, t.column, "symbol '" + name + "' declared twice");
      }
      return name;
    };

    const auto& head = tokens[0];
    if (head.text.front() == '.') {
      if (head.text == ".name") {
        if (tokens.size() != 2 || !is_identifier(tokens[1].text)) {
          throw ParseError(line_no, head.column, ".name expects one identifier");
        }
        net.name = std::string(tokens[1].text);
      } else if (head.text == ".param") {
        if (tokens.size() != 5) throw ParseError(line_no, head.column, ".param expects NAME MIN MAX SCALE");
        ParamSpec p;
        p.name = symbol_name(tokens[1]);
        p.lower = literal(tokens[2]);
        p.upper = literal(tokens[3]);
        p.scale = literal(tokens[4]);
        if (p.lower > p.upper) throw ParseError(line_no, tokens[2].column, "parameter MIN exceeds MAX");
        if (!(p.scale > 0.0)) throw ParseError(line_no, tokens[4].column, "parameter SCALE must be positive");
        net.parameters.push_back(std::move(p));
      } else if (head.text == ".const") {
        if (tokens.size() != 3) throw ParseError(line_no, head.column, ".const expects NAME VALUE");
        auto name = symbol_name(tokens[1]);
        net.constants[name] = literal(tokens[2]);
      } else {
        throw ParseError(line_no, head.column, "unknown directive '" + std::string(head.text) + "'");
      }
      if (eol == text.size()) break;
      continue;
    }

    if (!is_identifier(head.text)) {
      throw ParseError(line_no, head.column, "invalid component id '" + std::string(head.text) + "'");
    }
    if (tokens.size() < 2) throw ParseError(line_no, head.column, "missing component kind");
    auto kind = parse_component_kind(tokens[1].text);
    if (!kind) {
      throw ParseError(line_no, tokens[1].column,
                       "unknown component kind '" + std::string(tokens[1].text) + "'");
    }

    ComponentDecl decl;
    decl.id = std::string(head.text);
    decl.kind = *kind;
    decl.line = line_no;
    if (!ids.insert(decl.id).second) {
      throw ParseError(line_no, head.column, "duplicate component id '" + decl.id + "'");
    }

    std::size_t i = 2;
    for (; i < tokens.size() && tokens[i].text.find('=') == std::string_view::npos; ++i) {
      if (!is_net_name(tokens[i].text)) {
        throw ParseError(line_no, tokens[i].column, "invalid net name '" + std::string(tokens[i].text) + "'");
      }
      decl.terminals.emplace_back(tokens[i].text);
    }
    const std::size_t expected = terminal_count(decl.kind);
    if (decl.terminals.size() != expected) {
      throw ParseError(line_no, head.column,
                       std::string(to_string(decl.kind)) + " expects " + std::to_string(expected) +
                           " terminals, got " + std::to_string(decl.terminals.size()));
    }

    auto schema = attribute_schema(decl.kind);
    bool saw_type = false;
    for (; i < tokens.size(); ++i) {
      const auto& tok = tokens[i];
      auto eq = tok.text.find('=');
      if (eq == std::string_view::npos) {
        throw ParseError(line_no, tok.column, "net names must precede key=value attributes");
      }
      std::string key(tok.text.substr(0, eq));
      std::string_view val = tok.text.substr(eq + 1);
      if (val.empty()) throw ParseError(line_no, tok.column, "empty value for '" + key + "'");

      if (key == "type") {
        if (!is_source(decl.kind)) throw ParseError(line_no, tok.column, "'type' applies to sources only");
        if (val == "dc") {
          decl.source = SourceKind::dc;
        } else if (val == "ac") {
          decl.source = SourceKind::ac;
        } else {
          throw ParseError(line_no, tok.column + eq + 1, "source type must be dc or ac");
        }
        saw_type = true;
        continue;
      }
      auto it = std::find_if(schema.begin(), schema.end(), [&](const AttrSchema& s) { return s.name == key; });
      if (it == schema.end()) {
        throw ParseError(line_no, tok.column,
                         "attribute '" + key + "' not accepted by " + std::string(to_string(decl.kind)));
      }
      if (decl.attrs.count(key)) throw ParseError(line_no, tok.column, "attribute '" + key + "' repeated");
      if (auto v = parse_si_literal(val)) {
        decl.attrs[key] = AttrValue{*v};
      } else if (is_identifier(val)) {
        decl.attrs[key] = AttrValue{std::string(val)};
        pending.push_back({std::string(val), line_no, tok.column + eq + 1});
      } else {
        throw ParseError(line_no, tok.column + eq + 1, "malformed value '" + std::string(val) + "'");
      }
    }
    for (const auto& s : schema) {
      if (decl.attrs.count(s.name)) continue;
      if (!s.default_value) {
        throw ParseError(line_no, head.column,
                         "missing attribute '" + s.name + "' for " + std::string(to_string(decl.kind)));
      }
      decl.attrs[s.name] = AttrValue{*s.default_value};
    }
    if (is_source(decl.kind) && !saw_type) decl.source = SourceKind::dc;

    net.components.push_back(std::move(decl));
    if (eol == text.size()) break;
  }

  for (const auto& ref : pending) {
    if (!net.find_parameter(ref.symbol) && !net.constants.count(ref.symbol)) {
      throw ParseError(ref.line, ref.column, "undeclared symbol '" + ref.symbol + "'");
    }
  }
  return net;
}

Netlist load_netlist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open netlist '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_netlist(ss.str());
}

std::string serialize(const Netlist& netlist) {
  std::ostringstream out;
  out << ".name " << netlist.name << '\n';
  for (const auto& p : netlist.parameters) {
    out << ".param " << p.name << ' ' << format_literal(p.lower) << ' ' << format_literal(p.upper) << ' '
        << format_literal(p.scale) << '\n';
  }
  for (const auto& [name, value] : netlist.constants) {
    out << ".const " << name << ' ' << format_literal(value) << '\n';
  }
  for (const auto& c : netlist.components) {
    out << c.id << ' ' << to_string(c.kind);
    for (const auto& t : c.terminals) out << ' ' << t;
    for (const auto& [key, value] : c.attrs) {
      out << ' ' << key << '=' << (value.is_symbol() ? value.symbol() : format_literal(value.literal()));
    }
    if (is_source(c.kind)) out << " type=" << to_string(c.source);
    out << '\n';
  }
  return out.str();
}

}  // namespace invdes::circuit_ir
