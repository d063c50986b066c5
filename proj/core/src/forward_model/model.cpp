#include "invdes/forward_model/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "invdes/diffnum/init.hpp"
#include "invdes/diffnum/ops.hpp"
#include "invdes/diffnum/weights.hpp"
#include "invdes/error.hpp"
#include "json.hpp"

namespace invdes::forward_model {

using diffnum::Tensor;
using nlohmann::ordered_json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> feature_names(const EtypeSchema& s) {
  std::vector<std::string> out;
  for (const auto& slot : s.slots) out.push_back(slot.attr);
  out.insert(out.end(), {"src_dc", "src_ac", "src_none"});
  return out;
}

}  // namespace

std::array<bool, kNumMetrics> TargetCodec::default_log_scale() {
  std::array<bool, kNumMetrics> out{};
  out[static_cast<std::size_t>(Metric::BW)] = true;
  out[static_cast<std::size_t>(Metric::OscF)] = true;
  return out;
}

TargetCodec TargetCodec::fit(const std::vector<PerformanceVector>& raw, const std::array<bool, kNumMetrics>& log_scale) {
  TargetCodec c;
  c.log_scale = log_scale;
  std::vector<PerformanceVector> transformed;
  transformed.reserve(raw.size());
  for (const auto& p : raw) {
    PerformanceVector t = p;
    for (std::size_t i = 0; i < kNumMetrics; ++i) {
      if (!p.mask.test(i) || !log_scale[i]) continue;
      if (!(p.values[i] > 0.0)) {
        throw DomainError("metric " + std::string(kMetricNames[i]) + " must be positive for log scaling");
      }
      t.values[i] = std::log10(p.values[i]);
    }
    transformed.push_back(t);
  }
  c.stats = NormStats::fit(transformed);
  return c;
}

double TargetCodec::encode(std::size_t metric, double raw) const {
  if (log_scale[metric]) {
    if (!(raw > 0.0)) {
      throw DomainError("metric " + std::string(kMetricNames[metric]) + " must be positive for log scaling");
    }
    raw = std::log10(raw);
  }
  return stats.normalize(metric, raw);
}

double TargetCodec::decode(std::size_t metric, double z) const {
  const double t = stats.denormalize(metric, z);
  return log_scale[metric] ? std::pow(10.0, t) : t;
}

PerformanceVector TargetCodec::encode(const PerformanceVector& raw) const {
  PerformanceVector out;
  out.mask = raw.mask;
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (raw.mask.test(i)) out.values[i] = encode(i, raw.values[i]);
  }
  return out;
}

std::string TargetCodec::to_json() const {
  ordered_json j;
  j["log10"] = ordered_json::array();
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (log_scale[i]) j["log10"].push_back(std::string(kMetricNames[i]));
  }
  j["stats"] = ordered_json::parse(stats.to_json());
  return j.dump();
}

TargetCodec TargetCodec::from_json(std::string_view text) {
  TargetCodec c;
  try {
    auto j = ordered_json::parse(text);
    for (const auto& name : j.at("log10")) {
      auto idx = metric_index(name.get<std::string>());
      if (!idx) throw Error("unknown metric in target codec");
      c.log_scale[*idx] = true;
    }
    c.stats = NormStats::from_json(j.at("stats").dump());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed target codec: ") + e.what());
  }
  return c;
}

Batch make_batch(const std::vector<const GraphTemplate*>& graphs, const std::vector<std::vector<double>>& x_scaled) {
  if (graphs.size() != x_scaled.size()) throw ShapeError("graph and parameter lists differ in length");
  Batch b;
  b.num_graphs = graphs.size();
  std::map<std::string, std::vector<double>> rows;
  std::map<std::string, std::size_t> dims;
  std::map<std::string, std::vector<std::size_t>> src, dst, owner;
  std::vector<double> scratch;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const GraphTemplate& t = *graphs[gi];
    std::size_t edge = 0;
    for (std::size_t g = 0; g < t.groups().size(); ++g) {
      const EdgeGroup& grp = t.groups()[g];
      t.features(g, x_scaled[gi], scratch);
      auto& r = rows[grp.etype];
      r.insert(r.end(), scratch.begin(), scratch.end());
      dims[grp.etype] = grp.dim;
      for (std::size_t k = 0; k < grp.edges.size(); ++k, ++edge) {
        src[grp.etype].push_back(b.num_nodes + t.src()[edge]);
        dst[grp.etype].push_back(b.num_nodes + t.dst()[edge]);
        owner[grp.etype].push_back(gi);
      }
    }
    b.num_nodes += t.num_nodes();
  }
  for (auto& [etype, data] : rows) {
    const std::size_t d = dims[etype];
    const std::size_t n = data.size() / d;
    b.etypes.push_back(etype);
    b.features.emplace_back(diffnum::Shape{n, d}, std::move(data));
    b.src.insert(b.src.end(), src[etype].begin(), src[etype].end());
    b.dst.insert(b.dst.end(), dst[etype].begin(), dst[etype].end());
    b.graph_of_edge.insert(b.graph_of_edge.end(), owner[etype].begin(), owner[etype].end());
  }
  return b;
}

Tensor message_pass(const Tensor& e, const std::vector<std::size_t>& src, const std::vector<std::size_t>& dst,
                    std::size_t num_nodes, const MessageFn& msg, const UpdateFn& upd, std::size_t layers) {
  if (e.dim() != 2 || e.rows() != src.size() || src.size() != dst.size()) {
    throw ShapeError("message_pass: embeddings and endpoint lists disagree");
  }
  Tensor cur = e;
  for (std::size_t l = 0; l < layers; ++l) {
    Tensor m = msg(cur);
    Tensor h = diffnum::add(diffnum::scatter_add(m, src, num_nodes), diffnum::scatter_add(m, dst, num_nodes));
    cur = upd(cur, diffnum::index_select(h, src), diffnum::index_select(h, dst));
  }
  return cur;
}

ForwardModel::ForwardModel(ModelConfig config)
    : config_(std::move(config)),
      msg_({config_.dim, config_.hidden, config_.dim}, diffnum::derive_seed(config_.seed, 1), config_.trunk_out_gain),
      upd_({3 * config_.dim, config_.hidden, config_.dim}, diffnum::derive_seed(config_.seed, 2), config_.trunk_out_gain),
      head_({config_.dim, config_.head_hidden, config_.head_hidden, kNumMetrics}, diffnum::derive_seed(config_.seed, 3)) {
  if (config_.dim == 0 || config_.hidden == 0 || config_.head_hidden == 0) throw Error("model widths must be positive");
  std::uint64_t k = 100;
  for (const auto& etype : config_.etypes) {
    const auto schema = etype_schema(etype);
    encoders_.emplace(etype, diffnum::Mlp({schema.dim(), config_.hidden, config_.dim}, diffnum::derive_seed(config_.seed, k++)));
  }
}

const diffnum::Mlp& ForwardModel::encoder(const std::string& etype) const {
  auto it = encoders_.find(etype);
  if (it == encoders_.end()) throw Error("forward model has no encoder for etype '" + etype + "'");
  return it->second;
}

Tensor ForwardModel::update(const Tensor& e, const Tensor& hu, const Tensor& hv) const {
  return upd_.forward(diffnum::concat({e, diffnum::add(hu, hv), diffnum::abs(diffnum::sub(hu, hv))}, 1));
}

Tensor ForwardModel::readout(const Tensor& e, const std::vector<std::size_t>& src, const std::vector<std::size_t>& dst,
                             std::size_t num_nodes, const std::vector<std::size_t>& graph_of_edge,
                             std::size_t num_graphs) const {
  Tensor out = message_pass(
      e, src, dst, num_nodes, [this](const Tensor& x) { return msg_.forward(x); },
      [this](const Tensor& x, const Tensor& hu, const Tensor& hv) { return update(x, hu, hv); }, config_.layers);
  return head_.forward(diffnum::scatter_add(out, graph_of_edge, num_graphs));
}

Tensor ForwardModel::forward(const Batch& batch) const {
  if (batch.features.empty()) throw ShapeError("empty batch");
  std::vector<Tensor> enc;
  enc.reserve(batch.features.size());
  for (std::size_t k = 0; k < batch.features.size(); ++k) enc.push_back(encoder(batch.etypes[k]).forward(batch.features[k]));
  Tensor e = enc.size() == 1 ? enc[0] : diffnum::concat(enc, 0);
  return readout(e, batch.src, batch.dst, batch.num_nodes, batch.graph_of_edge, batch.num_graphs);
}

Tensor ForwardModel::encode_edges(const circuit_ir::BoundGraph& graph) const {
  const auto& edges = graph.graph.edges;
  std::map<std::string, std::vector<std::size_t>> by_etype;
  for (std::size_t i = 0; i < edges.size(); ++i) by_etype[edges[i].etype].push_back(i);
  std::vector<Tensor> enc;
  std::vector<std::size_t> position(edges.size());
  std::size_t k = 0;
  for (const auto& [etype, idx] : by_etype) {
    const diffnum::Mlp& net = encoder(etype);
    std::vector<double> data;
    for (std::size_t i : idx) {
      auto f = edge_features(graph, i);
      data.insert(data.end(), f.begin(), f.end());
      position[i] = k++;
    }
    const std::size_t d = data.size() / idx.size();
    enc.push_back(net.forward(Tensor({idx.size(), d}, std::move(data))));
  }
  if (enc.empty()) throw ShapeError("graph has no edges");
  return diffnum::index_select(diffnum::concat(enc, 0), position);
}

Tensor ForwardModel::predict(const circuit_ir::BoundGraph& graph) const {
  Tensor e = encode_edges(graph);
  std::vector<std::size_t> src, dst;
  for (const auto& edge : graph.graph.edges) {
    src.push_back(edge.u);
    dst.push_back(edge.v);
  }
  std::vector<std::size_t> owner(src.size(), 0);
  return diffnum::reshape(readout(e, src, dst, graph.graph.nodes.size(), owner, 1), {kNumMetrics});
}

Tensor ForwardModel::predict(const GraphTemplate& graph, const Tensor& x_scaled) const {
  std::vector<Tensor> enc;
  enc.reserve(graph.groups().size());
  for (std::size_t g = 0; g < graph.groups().size(); ++g) {
    enc.push_back(encoder(graph.groups()[g].etype).forward(graph.features(g, x_scaled)));
  }
  if (enc.empty()) throw ShapeError("graph has no edges");
  Tensor e = enc.size() == 1 ? enc[0] : diffnum::concat(enc, 0);
  std::vector<std::size_t> owner(graph.num_edges(), 0);
  return diffnum::reshape(readout(e, graph.src(), graph.dst(), graph.num_nodes(), owner, 1), {kNumMetrics});
}

std::vector<diffnum::NamedTensor> ForwardModel::trunk_parameters() const {
  std::vector<diffnum::NamedTensor> out;
  for (const auto& [etype, net] : encoders_) net.append_parameters("enc." + etype, out);
  msg_.append_parameters("msg", out);
  upd_.append_parameters("upd", out);
  return out;
}

std::vector<diffnum::NamedTensor> ForwardModel::head_parameters() const {
  std::vector<diffnum::NamedTensor> out;
  head_.append_parameters("head", out);
  return out;
}

std::vector<diffnum::NamedTensor> ForwardModel::named_parameters() const {
  auto out = trunk_parameters();
  auto head = head_parameters();
  out.insert(out.end(), head.begin(), head.end());
  return out;
}

ForwardModel ForwardModel::clone() const {
  ForwardModel copy(config_);
  auto src = named_parameters();
  auto dst = copy.named_parameters();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i].tensor.mutable_data() = src[i].tensor.data();
  copy.codec_ = codec_;
  return copy;
}

void ForwardModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  diffnum::save_weights_file(named_parameters(), dir / "forward.weights.json");
  ordered_json side;
  side["format_version"] = 1;
  side["dim"] = config_.dim;
  side["layers"] = config_.layers;
  side["hidden"] = config_.hidden;
  side["head_hidden"] = config_.head_hidden;
  side["seed"] = config_.seed;
  side["etypes"] = ordered_json::object();
  for (const auto& etype : config_.etypes) side["etypes"][etype] = feature_names(etype_schema(etype));
  side["unit_scales"] = ordered_json::object();
  for (auto q : {circuit_ir::Quantity::resistance, circuit_ir::Quantity::capacitance, circuit_ir::Quantity::inductance,
                 circuit_ir::Quantity::length, circuit_ir::Quantity::voltage, circuit_ir::Quantity::current,
                 circuit_ir::Quantity::area}) {
    side["unit_scales"][std::string(circuit_ir::to_string(q))] = circuit_ir::unit_scale(q);
  }
  side["targets"] = ordered_json::parse(codec_.to_json());
  std::ofstream out(dir / "forward.json");
  if (!out) throw Error("cannot write '" + (dir / "forward.json").string() + "'");
  out << side.dump(2) << '\n';
}

ForwardModel ForwardModel::load(const std::filesystem::path& dir) {
  ModelConfig cfg;
  TargetCodec codec;
  try {
    auto side = ordered_json::parse(read_file(dir / "forward.json"));
    cfg.dim = side.at("dim").get<std::size_t>();
    cfg.layers = side.at("layers").get<std::size_t>();
    cfg.hidden = side.at("hidden").get<std::size_t>();
    cfg.head_hidden = side.at("head_hidden").get<std::size_t>();
    cfg.seed = side.at("seed").get<std::uint64_t>();
    cfg.etypes.clear();
    for (const auto& [etype, names] : side.at("etypes").items()) {
      if (names.get<std::vector<std::string>>() != feature_names(etype_schema(etype))) {
        throw Error("stored feature layout of etype '" + etype + "' differs from this build");
      }
      cfg.etypes.push_back(etype);
    }
    for (const auto& [q, scale] : side.at("unit_scales").items()) {
      bool matched = false;
      for (auto k : {circuit_ir::Quantity::resistance, circuit_ir::Quantity::capacitance, circuit_ir::Quantity::inductance,
                     circuit_ir::Quantity::length, circuit_ir::Quantity::voltage, circuit_ir::Quantity::current,
                     circuit_ir::Quantity::area}) {
        if (circuit_ir::to_string(k) == q) {
          matched = true;
          if (circuit_ir::unit_scale(k) != scale.get<double>()) throw Error("stored unit scale of " + q + " differs");
        }
      }
      if (!matched) throw Error("unknown quantity '" + q + "' in model sidecar");
    }
    codec = TargetCodec::from_json(side.at("targets").dump());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed forward-model sidecar: ") + e.what());
  }
  ForwardModel m(cfg);
  diffnum::load_weights_file(m.named_parameters(), dir / "forward.weights.json");
  m.codec_ = std::move(codec);
  return m;
}

}  // namespace invdes::forward_model
