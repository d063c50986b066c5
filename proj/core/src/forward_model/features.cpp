#include "invdes/forward_model/features.hpp"

#include <algorithm>

#include "invdes/diffnum/ops.hpp"
#include "invdes/error.hpp"

namespace invdes::forward_model {

using circuit_ir::Quantity;
using diffnum::Tensor;

namespace {

std::size_t onehot_slot(circuit_ir::SourceKind s) {
  switch (s) {
    case circuit_ir::SourceKind::dc: return 0;
    case circuit_ir::SourceKind::ac: return 1;
    case circuit_ir::SourceKind::none: return 2;
  }
  return 2;
}

std::vector<FeatureSlot> mos_slots() {
  return {{"W", Quantity::length}, {"L", Quantity::length}, {"Ad", Quantity::area}, {"As", Quantity::area}};
}

}  // namespace

const std::vector<std::string>& known_etypes() {
  static const std::vector<std::string> etypes = [] {
    std::vector<std::string> v = {"capacitor", "inductor", "isource", "resistor", "varactor", "vsource"};
    for (const char* dev : {"nmos", "pmos"}) {
      for (const char* role : {"DG", "DS", "GS"}) v.push_back(std::string(dev) + "_" + role);
    }
    std::sort(v.begin(), v.end());
    return v;
  }();
  return etypes;
}

EtypeSchema etype_schema(const std::string& etype) {
  EtypeSchema s;
  s.etype = etype;
  if (etype.rfind("nmos_", 0) == 0 || etype.rfind("pmos_", 0) == 0) {
    if (std::find(known_etypes().begin(), known_etypes().end(), etype) == known_etypes().end()) {
      throw Error("unknown etype '" + etype + "'");
    }
    s.slots = mos_slots();
  } else if (etype == "resistor") {
    s.slots = {{"R", Quantity::resistance}};
  } else if (etype == "capacitor") {
    s.slots = {{"C", Quantity::capacitance}};
  } else if (etype == "inductor") {
    s.slots = {{"L", Quantity::inductance}};
  } else if (etype == "varactor") {
    s.slots = {{"W", Quantity::length}, {"L", Quantity::length}};
  } else if (etype == "vsource") {
    s.slots = {{"V", Quantity::voltage}, {"rport", Quantity::resistance}};
  } else if (etype == "isource") {
    s.slots = {{"I", Quantity::current}};
  } else {
    throw Error("unknown etype '" + etype + "'");
  }
  return s;
}

std::map<std::string, double> rescale_inputs(const std::map<std::string, double>& attrs, const std::string& etype) {
  std::map<std::string, double> out;
  for (const auto& slot : etype_schema(etype).slots) {
    auto it = attrs.find(slot.attr);
    if (it != attrs.end()) out[slot.attr] = it->second / circuit_ir::unit_scale(slot.quantity);
  }
  return out;
}

std::vector<double> edge_features(const circuit_ir::BoundGraph& graph, std::size_t edge) {
  const auto& e = graph.graph.edges.at(edge);
  const auto schema = etype_schema(e.etype);
  std::vector<double> out;
  out.reserve(schema.dim());
  for (const auto& slot : schema.slots) out.push_back(graph.value(edge, slot.attr) / circuit_ir::unit_scale(slot.quantity));
  for (std::size_t k = 0; k < kSourceOneHot; ++k) out.push_back(k == onehot_slot(e.source) ? 1.0 : 0.0);
  return out;
}

GraphTemplate GraphTemplate::compile(const circuit_ir::CircuitGraph& graph,
                                     const std::vector<circuit_ir::ParamSpec>& params) {
  GraphTemplate t;
  t.num_nodes_ = graph.nodes.size();
  t.params_ = params;
  for (const auto& p : params) {
    t.names_.push_back(p.name);
    t.scales_.push_back(p.scale);
  }
  const std::size_t zero_slot = params.size();
  auto param_index = [&](const std::string& sym) {
    for (std::size_t j = 0; j < t.names_.size(); ++j) {
      if (t.names_[j] == sym) return j;
    }
    throw Error("graph references parameter '" + sym + "' absent from the parameter list");
  };

  std::map<std::string, std::vector<std::size_t>> by_etype;
  for (std::size_t i = 0; i < graph.edges.size(); ++i) by_etype[graph.edges[i].etype].push_back(i);

  for (const auto& [etype, edges] : by_etype) {
    const auto schema = etype_schema(etype);
    EdgeGroup g;
    g.etype = etype;
    g.dim = schema.dim();
    g.edges = edges;
    for (std::size_t ei : edges) {
      const auto& e = graph.edges[ei];
      for (const auto& slot : schema.slots) {
        const double unit = circuit_ir::unit_scale(slot.quantity);
        double constant = 0.0;
        double coef = 0.0;
        std::size_t index = zero_slot;
        if (auto it = e.numeric.find(slot.attr); it != e.numeric.end()) {
          constant = it->second / unit;
        } else if (auto pt = e.parametric.find(slot.attr); pt != e.parametric.end()) {
          index = param_index(pt->second);
          coef = t.scales_[index] / unit;
        } else if (auto ct = e.computed.find(slot.attr); ct != e.computed.end()) {
          constant = ct->second / unit;
        } else if ((slot.attr == "Ad" || slot.attr == "As") && e.parametric.count("W")) {
          index = param_index(e.parametric.at("W"));
          coef = t.scales_[index] * circuit_ir::kDiffusionExtension / unit;
        } else {
          throw Error("edge '" + e.label + "' lacks attribute '" + slot.attr + "'");
        }
        g.constant.push_back(constant);
        g.coef.push_back(coef);
        g.index.push_back(index);
      }
      for (std::size_t k = 0; k < kSourceOneHot; ++k) {
        g.constant.push_back(k == onehot_slot(e.source) ? 1.0 : 0.0);
        g.coef.push_back(0.0);
        g.index.push_back(zero_slot);
      }
      t.src_.push_back(e.u);
      t.dst_.push_back(e.v);
    }
    t.groups_.push_back(std::move(g));
  }
  return t;
}

std::vector<double> GraphTemplate::scale(const circuit_ir::ParameterVector& x_si) const {
  std::vector<double> out(names_.size());
  for (std::size_t j = 0; j < names_.size(); ++j) out[j] = x_si.at(names_[j]) / scales_[j];
  return out;
}

std::vector<double> GraphTemplate::scale(const std::map<std::string, double>& x_si) const {
  std::vector<double> out(names_.size());
  for (std::size_t j = 0; j < names_.size(); ++j) {
    auto it = x_si.find(names_[j]);
    if (it == x_si.end()) throw circuit_ir::BindError("missing value for parameter '" + names_[j] + "'");
    out[j] = it->second / scales_[j];
  }
  return out;
}

circuit_ir::ParameterVector GraphTemplate::unscale(const std::vector<double>& x_scaled) const {
  if (x_scaled.size() != names_.size()) throw ShapeError("scaled parameter vector has the wrong length");
  std::vector<double> si(x_scaled.size());
  for (std::size_t j = 0; j < si.size(); ++j) si[j] = x_scaled[j] * scales_[j];
  return {names_, std::move(si)};
}

Tensor GraphTemplate::features(std::size_t g, const Tensor& x_scaled) const {
  const EdgeGroup& grp = groups_.at(g);
  if (x_scaled.numel() != names_.size()) throw ShapeError("scaled parameter vector has the wrong length");
  const std::size_t rows = grp.edges.size();
  Tensor constant({rows, grp.dim}, grp.constant);
  if (names_.empty()) return constant;
  Tensor padded = diffnum::concat({diffnum::reshape(x_scaled, {names_.size()}), Tensor::vector({0.0})}, 0);
  Tensor picked = diffnum::reshape(diffnum::index_select(padded, grp.index), {rows, grp.dim});
  return diffnum::add(constant, diffnum::mul(picked, Tensor({rows, grp.dim}, grp.coef)));
}

void GraphTemplate::features(std::size_t g, const std::vector<double>& x_scaled, std::vector<double>& out) const {
  const EdgeGroup& grp = groups_.at(g);
  if (x_scaled.size() != names_.size()) throw ShapeError("scaled parameter vector has the wrong length");
  out.resize(grp.constant.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const std::size_t j = grp.index[k];
    out[k] = grp.constant[k] + (j < x_scaled.size() ? grp.coef[k] * x_scaled[j] : 0.0);
  }
}

}  // namespace invdes::forward_model
