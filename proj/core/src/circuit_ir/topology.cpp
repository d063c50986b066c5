#include "invdes/circuit_ir/topology.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace invdes::circuit_ir {

using nlohmann::ordered_json;

void TopologySpec::validate() const {
  if (code.empty()) throw Error("topology " + std::to_string(id) + " has no code");
  if (parameters.empty()) throw Error("topology " + code + " declares no parameters");
  for (const auto& p : parameters) {
    if (!(p.lower < p.upper)) throw Error("topology " + code + ": parameter " + p.name + " needs lower < upper");
    if (!(p.scale > 0.0)) throw Error("topology " + code + ": parameter " + p.name + " needs scale > 0");
  }
  if (metric_mask.empty()) throw Error("topology " + code + " has an empty metric mask");
  if (!(area_budget_mm2 > 0.0)) throw Error("topology " + code + " needs a positive area budget");
}

const ParamSpec* TopologySpec::find_parameter(std::string_view name) const {
  for (const auto& p : parameters) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

Netlist TopologySpec::load_netlist() const { return circuit_ir::load_netlist(netlist_path); }

CircuitGraph TopologySpec::load_graph() const { return build_graph(load_netlist(), id); }

TopologySpec TopologySpec::from_json(std::string_view text, const std::filesystem::path& base_dir) {
  TopologySpec s;
  try {
    auto j = ordered_json::parse(text);
    s.id = j.at("id").get<int>();
    s.code = j.at("code").get<std::string>();
    for (const auto& p : j.at("parameters")) {
      s.parameters.push_back({p.at("name").get<std::string>(), p.at("lower").get<double>(),
                              p.at("upper").get<double>(), p.at("scale").get<double>()});
    }
    s.metric_mask = MetricMask::from_names(j.at("metrics").get<std::vector<std::string>>());
    s.area_budget_mm2 = j.value("area_budget_mm2", 1.0);
    std::filesystem::path net = j.at("netlist").get<std::string>();
    s.netlist_path = net.is_absolute() ? net : base_dir / net;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed topology document: ") + e.what());
  }
  s.validate();
  return s;
}

std::string TopologySpec::to_json() const {
  ordered_json j;
  j["id"] = id;
  j["code"] = code;
  j["parameters"] = ordered_json::array();
  for (const auto& p : parameters) {
    j["parameters"].push_back({{"name", p.name}, {"lower", p.lower}, {"upper", p.upper}, {"scale", p.scale}});
  }
  j["metrics"] = metric_mask.names();
  j["area_budget_mm2"] = area_budget_mm2;
  j["netlist"] = netlist_path.filename().string();
  return j.dump(2);
}

TopologyRegistry TopologyRegistry::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("registry directory '" + dir.string() + "' not found");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  TopologyRegistry reg;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
      reg.add(TopologySpec::from_json(ss.str(), dir));
    } catch (const Error& e) {
      throw Error(f.filename().string() + ": " + e.what());
    }
  }
  if (reg.by_id_.empty()) throw Error("registry directory '" + dir.string() + "' holds no topologies");
  return reg;
}

void TopologyRegistry::add(TopologySpec spec) {
  spec.validate();
  if (by_id_.count(spec.id)) throw Error("duplicate topology id " + std::to_string(spec.id));
  for (const auto& [id, other] : by_id_) {
    if (other.code == spec.code) throw Error("duplicate topology code " + spec.code);
  }
  CircuitGraph g = spec.load_graph();
  // The netlist must declare exactly the registry entry's parameters with the same bounds.
  if (g.parameters.size() != spec.parameters.size()) {
    throw Error("topology " + spec.code + ": netlist parameters differ from the registry entry");
  }
  for (const auto& p : spec.parameters) {
    const ParamSpec* q = g.find_parameter(p.name);
    if (!q || !(*q == p)) throw Error("topology " + spec.code + ": netlist declaration of " + p.name + " differs");
  }
  check_schema_uniformity(g);
  graphs_.emplace(spec.id, std::move(g));
  by_id_.emplace(spec.id, std::move(spec));
}

const TopologySpec& TopologyRegistry::by_id(int id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw Error("unknown topology id " + std::to_string(id));
  return it->second;
}

const TopologySpec& TopologyRegistry::by_code(std::string_view code) const {
  for (const auto& [id, spec] : by_id_) {
    if (spec.code == code) return spec;
  }
  throw Error("unknown topology '" + std::string(code) + "'");
}

const TopologySpec& TopologyRegistry::resolve(std::string_view code_or_id) const {
  if (!code_or_id.empty() &&
      std::all_of(code_or_id.begin(), code_or_id.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return by_id(std::stoi(std::string(code_or_id)));
  }
  return by_code(code_or_id);
}

std::vector<const TopologySpec*> TopologyRegistry::all() const {
  std::vector<const TopologySpec*> out;
  for (const auto& [id, spec] : by_id_) out.push_back(&spec);
  return out;
}

const CircuitGraph& TopologyRegistry::graph(int id) const {
  auto it = graphs_.find(id);
  if (it == graphs_.end()) throw Error("unknown topology id " + std::to_string(id));
  return it->second;
}

}  // namespace invdes::circuit_ir
