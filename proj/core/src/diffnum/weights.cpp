#include "invdes/diffnum/weights.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace invdes::diffnum {

using nlohmann::ordered_json;

std::string serialize_weights(const std::vector<NamedTensor>& tensors) {
  ordered_json doc;
  doc["format_version"] = kWeightFormatVersion;
  doc["tensors"] = ordered_json::array();
  for (const auto& t : tensors) {
    ordered_json e;
    e["name"] = t.name;
    e["shape"] = t.tensor.shape();
    e["data"] = t.tensor.data();
    doc["tensors"].push_back(std::move(e));
  }
  return doc.dump();
}

std::vector<NamedTensor> parse_weights(std::string_view text) {
  std::vector<NamedTensor> out;
  try {
    auto doc = ordered_json::parse(text);
    const int version = doc.at("format_version").get<int>();
    if (version != kWeightFormatVersion) throw Error("unsupported weight format version " + std::to_string(version));
    for (const auto& e : doc.at("tensors")) {
      out.push_back({e.at("name").get<std::string>(),
                     Tensor(e.at("shape").get<Shape>(), e.at("data").get<std::vector<double>>())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed weight container: ") + e.what());
  }
  return out;
}

void load_weights_into(const std::vector<NamedTensor>& dst, std::string_view text) {
  auto stored = parse_weights(text);
  std::map<std::string, const Tensor*> by_name;
  for (const auto& s : stored) {
    if (!by_name.emplace(s.name, &s.tensor).second) throw Error("duplicate tensor '" + s.name + "'");
  }
  if (stored.size() != dst.size()) {
    throw Error("weight container holds " + std::to_string(stored.size()) + " tensors, model expects " +
                std::to_string(dst.size()));
  }
  for (const auto& d : dst) {
    auto it = by_name.find(d.name);
    if (it == by_name.end()) throw Error("weight container lacks tensor '" + d.name + "'");
    if (it->second->shape() != d.tensor.shape()) {
      throw ShapeError("tensor '" + d.name + "' has shape " + to_string(it->second->shape()) + ", expected " +
                       to_string(d.tensor.shape()));
    }
    Tensor t = d.tensor;
    t.mutable_data() = it->second->data();
  }
}

void save_weights_file(const std::vector<NamedTensor>& tensors, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << serialize_weights(tensors);
}

void load_weights_file(const std::vector<NamedTensor>& dst, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  load_weights_into(dst, ss.str());
}

std::uint64_t weight_hash(const std::vector<NamedTensor>& tensors) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& t : tensors) {
    feed(t.name.data(), t.name.size());
    for (auto d : t.tensor.shape()) {
      std::uint64_t v = d;
      feed(&v, sizeof v);
    }
    feed(t.tensor.data().data(), t.tensor.data().size() * sizeof(double));
  }
  return h;
}

}  // namespace invdes::diffnum
