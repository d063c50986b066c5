#include "invdes/circuit_ir/graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace invdes::circuit_ir {

namespace {

struct EdgeRecipe {
  const char* role;
  std::size_t a;  // terminal indices; kInternal marks the balun T node
  std::size_t b;
  const char* attr;  // balun: source attribute mapped onto L
};

constexpr std::size_t kInternal = 99;

// MOS terminals are (d, g, s).
constexpr std::array<EdgeRecipe, 3> kMosEdges = {{
    {"DG", 0, 1, nullptr},
    {"DS", 0, 2, nullptr},
    {"GS", 1, 2, nullptr},
}};

// Balun terminals are (primary, secondary, common); T-equivalent network.
constexpr std::array<EdgeRecipe, 3> kBalunEdges = {{
    {"M", kInternal, 2, "Lm"},
    {"P", 0, kInternal, "Lp"},
    {"S", 1, kInternal, "Ls"},
}};

void put_attr(Edge& e, const std::string& key, const AttrValue& value, const Netlist& netlist) {
  if (!value.is_symbol()) {
    e.numeric[key] = value.literal();
    return;
  }
  const auto& sym = value.symbol();
  if (auto it = netlist.constants.find(sym); it != netlist.constants.end()) {
    e.numeric[key] = it->second;
  } else {
    e.parametric[key] = sym;
  }
}

void attach_diffusion(Edge& e) {
  if (auto it = e.numeric.find("W"); it != e.numeric.end()) {
    e.computed["Ad"] = it->second * kDiffusionExtension;
    e.computed["As"] = it->second * kDiffusionExtension;
  }
}

}  // namespace

std::vector<std::string> Edge::attribute_keys() const {
  std::set<std::string> keys;
  for (const auto& [k, v] : numeric) keys.insert(k);
  for (const auto& [k, v] : parametric) keys.insert(k);
  for (const auto& [k, v] : computed) keys.insert(k);
  // Diffusion areas exist for every MOS edge; with a parametric W they are
  // only materialized at bind time.
  if (is_mos(kind)) {
    keys.insert("Ad");
    keys.insert("As");
  }
  return {keys.begin(), keys.end()};
}

std::size_t CircuitGraph::node_index(std::string_view net) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] == net) return i;
  }
  throw Error("unknown node '" + std::string(net) + "'");
}

const ParamSpec* CircuitGraph::find_parameter(std::string_view symbol) const {
  for (const auto& p : parameters) {
    if (p.name == symbol) return &p;
  }
  return nullptr;
}

CircuitGraph build_graph(const Netlist& netlist, int topology_id) {
  CircuitGraph g;
  g.name = netlist.name;
  g.topology_id = topology_id;
  g.parameters = netlist.parameters;

  std::unordered_map<std::string, std::size_t> index;
  auto node = [&](const std::string& net) {
    auto [it, inserted] = index.emplace(net, g.nodes.size());
    if (inserted) g.nodes.push_back(net);
    return it->second;
  };

  for (const auto& c : netlist.components) {
    std::vector<std::size_t> t;
    for (const auto& net : c.terminals) t.push_back(node(net));

    if (is_mos(c.kind)) {
      for (const auto& r : kMosEdges) {
        Edge e;
        e.component = c.id;
        e.role = r.role;
        e.label = c.id + "_" + r.role;
        e.etype = std::string(to_string(c.kind)) + "_" + r.role;
        e.kind = c.kind;
        e.u = t[r.a];
        e.v = t[r.b];
        for (const auto& [k, v] : c.attrs) put_attr(e, k, v, netlist);
        attach_diffusion(e);
        g.edges.push_back(std::move(e));
      }
    } else if (c.kind == ComponentKind::balun) {
      const std::size_t mid = node(c.id + "_t");
      for (const auto& r : kBalunEdges) {
        Edge e;
        e.component = c.id;
        e.role = r.role;
        e.label = c.id + "_" + r.role;
        e.etype = "inductor";
        e.kind = ComponentKind::inductor;
        e.u = r.a == kInternal ? mid : t[r.a];
        e.v = r.b == kInternal ? mid : t[r.b];
        put_attr(e, "L", c.attrs.at(r.attr), netlist);
        g.edges.push_back(std::move(e));
      }
    } else {
      Edge e;
      e.component = c.id;
      e.label = c.id;
      e.etype = std::string(to_string(c.kind));
      e.kind = c.kind;
      e.u = t[0];
      e.v = t[1];
      e.source = c.source;
      for (const auto& [k, v] : c.attrs) put_attr(e, k, v, netlist);
      g.edges.push_back(std::move(e));
    }
  }

  std::stable_sort(g.edges.begin(), g.edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.component, a.role) < std::tie(b.component, b.role);
  });
  return g;
}

CircuitGraph canonicalize(const CircuitGraph& graph) {
  std::vector<std::size_t> order(graph.nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return graph.nodes[a] < graph.nodes[b]; });
  std::vector<std::size_t> perm(order.size());
  for (std::size_t new_i = 0; new_i < order.size(); ++new_i) perm[order[new_i]] = new_i;

  CircuitGraph out = relabel_nodes(graph, perm);
  for (auto& e : out.edges) {
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::stable_sort(out.edges.begin(), out.edges.end(),
                   [](const Edge& a, const Edge& b) { return a.label < b.label; });
  return out;
}

CircuitGraph relabel_nodes(const CircuitGraph& graph, const std::vector<std::size_t>& perm) {
  const std::size_t n = graph.nodes.size();
  if (perm.size() != n) throw ShapeError("permutation size does not match node count");
  std::vector<bool> seen(n, false);
  for (auto p : perm) {
    if (p >= n || seen[p]) throw ShapeError("not a permutation");
    seen[p] = true;
  }
  CircuitGraph out = graph;
  for (std::size_t i = 0; i < n; ++i) out.nodes[perm[i]] = graph.nodes[i];
  for (auto& e : out.edges) {
    e.u = perm[e.u];
    e.v = perm[e.v];
  }
  return out;
}

void check_schema_uniformity(const CircuitGraph& graph) {
  std::map<std::string, std::vector<std::string>> schema;
  for (const auto& e : graph.edges) {
    auto keys = e.attribute_keys();
    auto [it, inserted] = schema.emplace(e.etype, keys);
    if (!inserted && it->second != keys) {
      throw Error("edge '" + e.label + "' breaks the attribute schema of etype '" + e.etype + "'");
    }
  }
}

ParameterVector::ParameterVector(std::vector<std::string> names, std::vector<double> values)
    : names_(std::move(names)), values_(std::move(values)) {
  if (names_.size() != values_.size()) throw ShapeError("parameter names and values differ in length");
  std::set<std::string> unique(names_.begin(), names_.end());
  if (unique.size() != names_.size()) throw Error("duplicate parameter name");
}

ParameterVector ParameterVector::from_map(const std::map<std::string, double>& values) {
  std::vector<std::string> names;
  std::vector<double> vals;
  for (const auto& [k, v] : values) {
    names.push_back(k);
    vals.push_back(v);
  }
  return {std::move(names), std::move(vals)};
}

const double* ParameterVector::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return &values_[i];
  }
  return nullptr;
}

double ParameterVector::at(std::string_view name) const {
  if (const double* v = find(name)) return *v;
  throw BindError("missing parameter '" + std::string(name) + "'");
}

std::map<std::string, double> ParameterVector::to_map() const {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < names_.size(); ++i) out[names_[i]] = values_[i];
  return out;
}

double BoundGraph::value(std::size_t edge, std::string_view attr) const {
  if (edge >= attrs.size()) throw Error("edge index out of range");
  auto it = attrs[edge].find(std::string(attr));
  if (it == attrs[edge].end()) {
    throw Error("edge '" + graph.edges[edge].label + "' has no attribute '" + std::string(attr) + "'");
  }
  return it->second;
}

BoundGraph bind_parameters(const CircuitGraph& graph, const ParameterVector& x) {
  BoundGraph out;
  out.graph = graph;
  out.params = x;
  out.attrs.reserve(graph.edges.size());
  for (const auto& e : graph.edges) {
    std::map<std::string, double> a = e.numeric;
    for (const auto& [key, sym] : e.parametric) {
      const double* v = x.find(sym);
      if (!v) throw BindError("missing value for parameter '" + sym + "'");
      if (const ParamSpec* spec = graph.find_parameter(sym)) {
        const double tol = 1e-12 * std::max(std::abs(spec->lower), std::abs(spec->upper));
        if (*v < spec->lower - tol || *v > spec->upper + tol || !std::isfinite(*v)) {
          throw BindError("parameter '" + sym + "' = " + format_literal(*v) + " outside [" +
                          format_literal(spec->lower) + ", " + format_literal(spec->upper) + "]");
        }
      }
      a[key] = *v;
    }
    for (const auto& [k, v] : e.computed) a[k] = v;
    if (is_mos(e.kind) && a.count("W")) {
      a["Ad"] = a["W"] * kDiffusionExtension;
      a["As"] = a["W"] * kDiffusionExtension;
    }
    out.attrs.push_back(std::move(a));
  }
  return out;
}

std::string export_dot(const CircuitGraph& graph) {
  static constexpr std::array<const char*, 10> kPalette = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::set<std::string> etypes;
  for (const auto& e : graph.edges) etypes.insert(e.etype);
  std::map<std::string, std::string> color;
  std::size_t i = 0;
  for (const auto& t : etypes) color[t] = kPalette[i++ % kPalette.size()];

  std::ostringstream out;
  out << "graph \"" << graph.name << "\" {\n";
  for (const auto& n : graph.nodes) out << "  \"" << n << "\";\n";
  for (const auto& e : graph.edges) {
    out << "  \"" << graph.nodes[e.u] << "\" -- \"" << graph.nodes[e.v] << "\" [label=\"" << e.label
        << "\", etype=\"" << e.etype << "\", color=\"" << color[e.etype] << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace invdes::circuit_ir
