#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "invdes/circuit_ir/graph.hpp"
#include "invdes/circuit_ir/netlist.hpp"
#include "invdes/circuit_ir/topology.hpp"
#include "invdes/classifier/classifier.hpp"
#include "invdes/classifier/dataset.hpp"
#include "invdes/error.hpp"
#include "invdes/forward_model/train.hpp"
#include "invdes/inverse/design.hpp"
#include "invdes/layout/layout.hpp"
#include "invdes/oracle/oracle.hpp"
#include "json.hpp"

#ifndef INVDES_DATA_DIR
#define INVDES_DATA_DIR "data"
#endif

namespace invdes::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr std::array<double, 3> kSplit = {0.8, 0.1, 0.1};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ordered_json read_json(const std::string& path) {
  try {
    return ordered_json::parse(read_text(path));
  } catch (const ordered_json::parse_error& e) {
    throw Error("'" + path + "' is not valid JSON: " + e.what());
  }
}

/// Writes the primary result to --out when given, otherwise to `out`.
void emit(const RunConfig& cfg, std::ostream& out, const std::string& text) {
  if (cfg.out.empty()) {
    out << text << "\n";
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw Error("cannot write '" + cfg.out + "'");
  f << text << "\n";
}

std::map<std::string, double> read_params(const std::string& path) {
  const ordered_json j = read_json(path);
  const ordered_json& body = j.contains("params") ? j.at("params") : j;
  if (!body.is_object()) throw Error("parameter file must hold a JSON object of name: value");
  std::map<std::string, double> out;
  for (const auto& [name, value] : body.items()) {
    if (!value.is_number()) throw Error("parameter '" + name + "' is not a number");
    out[name] = value.get<double>();
  }
  return out;
}

struct TargetFile {
  PerformanceVector metrics;
  std::optional<std::string> topology;
  std::optional<std::uint64_t> seed;
};

TargetFile read_target(const std::string& path) {
  const ordered_json j = read_json(path);
  if (!j.is_object()) throw Error("target file must hold a JSON object");
  TargetFile t;
  const ordered_json& metrics = j.contains("metrics") ? j.at("metrics") : j;
  for (const auto& [name, value] : metrics.items()) {
    if (!j.contains("metrics") && (name == "topology" || name == "seed")) continue;
    const auto idx = metric_index(name);
    if (!idx) throw Error("unknown metric '" + name + "' in target");
    if (value.is_null()) continue;
    if (!value.is_number()) throw Error("metric '" + name + "' is not a number");
    t.metrics.values[*idx] = value.get<double>();
    t.metrics.mask.set(*idx);
  }
  if (j.contains("topology")) t.topology = j.at("topology").get<std::string>();
  if (j.contains("seed")) t.seed = j.at("seed").get<std::uint64_t>();
  return t;
}

ordered_json metrics_json(const PerformanceVector& v) {
  ordered_json j = ordered_json::object();
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (v.mask.test(i)) j[std::string(kMetricNames[i])] = v.values[i];
  }
  return j;
}

circuit_ir::TopologyRegistry load_registry(const RunConfig& cfg, std::ostream& err) {
  const std::string dir = resolve_registry(cfg);
  err << "[invdes] registry " << dir << "\n";
  return circuit_ir::TopologyRegistry::load(dir);
}

/// Graph from --netlist, or from --topology via the registry.
circuit_ir::CircuitGraph graph_from_flags(const RunConfig& cfg, std::ostream& err,
                                          std::optional<circuit_ir::TopologyRegistry>& registry) {
  if (!cfg.netlist.empty()) {
    int id = -1;
    if (!cfg.topology.empty()) {
      registry = load_registry(cfg, err);
      id = registry->resolve(cfg.topology).id;
    }
    return circuit_ir::build_graph(circuit_ir::load_netlist(cfg.netlist), id);
  }
  if (cfg.topology.empty()) throw CLI::ValidationError("--netlist or --topology is required");
  registry = load_registry(cfg, err);
  return registry->graph(registry->resolve(cfg.topology).id);
}

bool has_file(const std::string& dir, const char* name) { return fs::exists(fs::path(dir) / name); }

int gen_data(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::vector<std::string> families = cfg.families;
  if (families.empty()) {
    for (const auto& f : oracle::builtin_families()) families.push_back(f.name);
  }
  const Dataset data = oracle::generate_dataset(families, cfg.n, cfg.seed);
  err << "[invdes] generated " << data.size() << " records\n";
  if (cfg.out.empty()) {
    out << to_jsonl(data);
  } else {
    save_jsonl(data, cfg.out);
  }
  return 0;
}

int train_classifier_cmd(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Split split = stratified_split(load_jsonl(cfg.data), kSplit, cfg.seed);
  classifier::TrainConfig tc;
  tc.seed = cfg.seed;
  if (cfg.epochs) tc.max_epochs = *cfg.epochs;
  if (cfg.batch) tc.batch = *cfg.batch;
  if (cfg.lr) tc.lr = *cfg.lr;
  tc.on_epoch = [&err](std::size_t e, double train, double val) {
    err << "[invdes] classifier epoch " << e << " train " << train << " val " << val << "\n";
  };
  const auto result = classifier::train_classifier(split, tc);
  result.model.save(cfg.out);
  ordered_json j;
  j["model"] = cfg.out;
  j["epochs"] = result.epochs;
  j["best_val_loss"] = result.best_val_loss;
  j["test"] = ordered_json::parse(result.test.to_json());
  out << j.dump() << "\n";
  return 0;
}

forward_model::ForwardTrainConfig forward_config(const RunConfig& cfg, std::ostream& err) {
  forward_model::ForwardTrainConfig fc;
  fc.seed = cfg.seed;
  fc.model.seed = cfg.seed;
  if (cfg.epochs) fc.max_epochs = *cfg.epochs;
  if (cfg.batch) fc.batch = *cfg.batch;
  if (cfg.lr) fc.lr = *cfg.lr;
  fc.on_epoch = [&err](std::size_t e, double train, double val, double lr) {
    err << "[invdes] forward epoch " << e << " train " << train << " val " << val << " lr " << lr << "\n";
  };
  return fc;
}

int train_gnn_cmd(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto registry = load_registry(cfg, err);
  const Split split = stratified_split(load_jsonl(cfg.data), kSplit, cfg.seed);
  const auto result = forward_model::train_forward(registry, split, forward_config(cfg, err));
  result.model.save(cfg.out);
  ordered_json j;
  j["model"] = cfg.out;
  j["epochs"] = result.epochs;
  j["best_val_loss"] = result.best_val_loss;
  j["test"] = ordered_json::parse(result.test.to_json());
  out << j.dump() << "\n";
  return 0;
}

int finetune_cmd(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto registry = load_registry(cfg, err);
  const auto base = forward_model::ForwardModel::load(cfg.model);
  const Split split = stratified_split(load_jsonl(cfg.data), kSplit, cfg.seed);
  const auto zero_shot = forward_model::evaluate_forward(base, registry, split.test);
  const auto result = forward_model::finetune_head(base, registry, split, forward_config(cfg, err));
  result.model.save(cfg.out);
  ordered_json j;
  j["model"] = cfg.out;
  j["epochs"] = result.epochs;
  j["zero_shot"] = ordered_json::parse(zero_shot.to_json());
  j["finetuned"] = ordered_json::parse(result.test.to_json());
  out << j.dump() << "\n";
  return 0;
}

int predict_cmd(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto model = forward_model::ForwardModel::load(cfg.model);
  std::optional<circuit_ir::TopologyRegistry> registry;
  const auto graph = graph_from_flags(cfg, err, registry);
  std::map<std::string, double> params;
  if (!cfg.params.empty()) params = read_params(cfg.params);
  const auto bound = circuit_ir::bind_parameters(graph, circuit_ir::ParameterVector::from_map(params));
  const diffnum::Tensor z = model.predict(bound);
  PerformanceVector v;
  v.mask = registry ? registry->resolve(cfg.topology).metric_mask : model.codec().stats.fitted;
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (v.mask.test(i)) v.values[i] = model.codec().decode(i, z.data()[i]);
  }
  ordered_json j;
  j["graph"] = graph.name;
  j["metrics"] = metrics_json(v);
  emit(cfg, out, j.dump());
  return 0;
}

int design_cmd(const RunConfig& cfg, std::ostream& out, std::ostream& err, bool seed_given) {
  const auto registry = load_registry(cfg, err);
  const TargetFile target = read_target(cfg.target);
  inverse::PipelineOptions options;
  options.topology = !cfg.topology.empty() ? cfg.topology : target.topology.value_or("auto");
  options.seed = seed_given || !target.seed ? cfg.seed : *target.seed;
  const auto model = forward_model::ForwardModel::load(cfg.model);
  classifier::Classifier clf;
  if (options.topology == "auto") clf = classifier::Classifier::load(cfg.model);
  const auto result = inverse::end_to_end_design(target.metrics, clf, model, registry, options);
  err << "[invdes] design finished in " << result.seconds << " s after " << result.restarts << " restarts\n";
  // Wall time is logged, not reported, so the result is a pure function of the inputs.
  ordered_json j = ordered_json::parse(result.to_json(cfg.trace));
  j.erase("seconds");
  emit(cfg, out, j.dump());
  return 0;
}

int layout_report_cmd(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::optional<circuit_ir::TopologyRegistry> registry;
  const auto graph = graph_from_flags(cfg, err, registry);
  std::map<std::string, double> params;
  if (!cfg.params.empty()) params = read_params(cfg.params);
  const auto bound = circuit_ir::bind_parameters(graph, circuit_ir::ParameterVector::from_map(params));
  emit(cfg, out, layout::estimate_layout(bound).to_json());
  return 0;
}

int export_graph_cmd(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::optional<circuit_ir::TopologyRegistry> registry;
  const auto graph = graph_from_flags(cfg, err, registry);
  ordered_json j;
  j["name"] = graph.name;
  j["topology_id"] = graph.topology_id;
  j["nodes"] = graph.nodes;
  j["edges"] = ordered_json::array();
  for (const auto& e : graph.edges) {
    ordered_json je;
    je["label"] = e.label;
    je["etype"] = e.etype;
    je["u"] = e.u;
    je["v"] = e.v;
    je["numeric"] = e.numeric;
    je["parametric"] = e.parametric;
    je["computed"] = e.computed;
    if (circuit_ir::is_source(e.kind)) je["source"] = std::string(circuit_ir::to_string(e.source));
    j["edges"].push_back(std::move(je));
  }
  j["dot"] = circuit_ir::export_dot(graph);
  emit(cfg, out, j.dump());
  return 0;
}

int eval_cmd(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Dataset data = load_jsonl(cfg.data);
  ordered_json j;
  j["count"] = data.size();
  bool any = false;
  if (has_file(cfg.model, "classifier.json")) {
    const auto clf = classifier::Classifier::load(cfg.model);
    j["classifier"] = ordered_json::parse(classifier::evaluate(clf, data).to_json());
    any = true;
  }
  if (has_file(cfg.model, "forward.json")) {
    const auto registry = load_registry(cfg, err);
    const auto model = forward_model::ForwardModel::load(cfg.model);
    j["forward"] = ordered_json::parse(forward_model::evaluate_forward(model, registry, data).to_json());
    any = true;
  }
  if (!any) throw Error("'" + cfg.model + "' holds neither a classifier nor a forward model");
  emit(cfg, out, j.dump());
  return 0;
}

std::string error_json(const std::exception& e) {
  ordered_json j;
  j["error"] = e.what();
  if (const auto* p = dynamic_cast<const circuit_ir::ParseError*>(&e)) {
    j["kind"] = "parse";
    j["line"] = p->line();
    j["column"] = p->column();
  } else if (dynamic_cast<const circuit_ir::BindError*>(&e) != nullptr) {
    j["kind"] = "bind";
  } else if (dynamic_cast<const ShapeError*>(&e) != nullptr) {
    j["kind"] = "shape";
  } else if (dynamic_cast<const DomainError*>(&e) != nullptr) {
    j["kind"] = "domain";
  } else {
    j["kind"] = "runtime";
  }
  return j.dump();
}

}  // namespace

std::string resolve_registry(const RunConfig& config) {
  if (!config.registry.empty()) return config.registry;
  if (const char* env = std::getenv("FALCON_REGISTRY"); env != nullptr && *env != '\0') return env;
  return (fs::path(INVDES_DATA_DIR) / "registry" / "oracle").string();
}

std::unique_ptr<CLI::App> make_app(RunConfig& c) {
  auto app = std::make_unique<CLI::App>("Analog circuit inverse design: topology selection, GNN performance "
                                        "prediction and layout-aware sizing.",
                                        "invdes");
  app->require_subcommand(1);
  app->fallthrough(false);

  auto seed = [&c](CLI::App* s) { s->add_option("--seed", c.seed, "Random seed")->capture_default_str(); };
  auto hyper = [&c](CLI::App* s) {
    s->add_option("--epochs", c.epochs, "Maximum training epochs");
    s->add_option("--batch", c.batch, "Minibatch size")->check(CLI::PositiveNumber);
    s->add_option("--lr", c.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  };
  auto registry = [&c](CLI::App* s) {
    s->add_option("--registry", c.registry, "Topology registry directory (overrides $FALCON_REGISTRY)")
        ->check(CLI::ExistingDirectory);
  };
  auto data = [&c](CLI::App* s) {
    s->add_option("--data", c.data, "Dataset (JSON lines)")->required()->check(CLI::ExistingFile);
  };
  auto model = [&c](CLI::App* s) {
    s->add_option("--model", c.model, "Model directory")->required()->check(CLI::ExistingDirectory);
  };
  auto circuit = [&c](CLI::App* s) {
    s->add_option("--netlist", c.netlist, "Netlist file")->check(CLI::ExistingFile);
    s->add_option("--topology", c.topology, "Topology code or id from the registry");
    s->add_option("--params", c.params, "Parameter values, JSON {name: SI value}")->check(CLI::ExistingFile);
  };
  auto result_out = [&c](CLI::App* s) { s->add_option("--out", c.out, "Write the JSON result to this file"); };

  auto* gen = app->add_subcommand("gen-data", "Generate a labeled oracle dataset");
  gen->add_option("--n", c.n, "Samples per family")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--families", c.families, "Oracle families (default: all)");
  gen->add_option("--out", c.out, "Output file (JSON lines); stdout when omitted");
  seed(gen);

  auto* tcls = app->add_subcommand("train-classifier", "Train the topology classifier");
  data(tcls);
  tcls->add_option("--out", c.out, "Output model directory")->required();
  seed(tcls);
  hyper(tcls);

  auto* tgnn = app->add_subcommand("train-gnn", "Train the GNN forward model");
  data(tgnn);
  tgnn->add_option("--out", c.out, "Output model directory")->required();
  seed(tgnn);
  hyper(tgnn);
  registry(tgnn);

  auto* ft = app->add_subcommand("finetune", "Retrain only the forward model's output head");
  model(ft);
  data(ft);
  ft->add_option("--out", c.out, "Output model directory")->required();
  seed(ft);
  hyper(ft);
  registry(ft);

  auto* pred = app->add_subcommand("predict", "Predict the metrics of a sized circuit");
  model(pred);
  circuit(pred);
  registry(pred);
  result_out(pred);

  auto* des = app->add_subcommand("design", "Inverse design from a target metric vector");
  model(des);
  des->add_option("--target", c.target, "Target JSON {metrics: {name: value}, topology, seed}")
      ->required()
      ->check(CLI::ExistingFile);
  des->add_option("--topology", c.topology, "Topology code or id, or 'auto' for the classifier");
  seed(des);
  des->add_flag("--trace", c.trace, "Include the loss trace in the result");
  registry(des);
  result_out(des);

  auto* lay = app->add_subcommand("layout-report", "Passive layout area and DRC report");
  circuit(lay);
  registry(lay);
  result_out(lay);

  auto* exp = app->add_subcommand("export-graph", "Export a circuit graph as JSON with Graphviz text");
  exp->add_option("--netlist", c.netlist, "Netlist file")->check(CLI::ExistingFile);
  exp->add_option("--topology", c.topology, "Topology code or id from the registry");
  registry(exp);
  result_out(exp);

  auto* ev = app->add_subcommand("eval", "Evaluate saved models on a dataset");
  model(ev);
  data(ev);
  registry(ev);
  result_out(ev);

  return app;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  auto app = make_app(cfg);
  try {
    app->parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app->exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  cfg.subcommand = app->get_subcommands().front()->get_name();
  try {
    const auto* seed_opt = app->get_subcommand(cfg.subcommand)->get_option_no_throw("--seed");
    const bool seed_given = seed_opt != nullptr && seed_opt->count() > 0;
    if (cfg.subcommand == "gen-data") return gen_data(cfg, out, err);
    if (cfg.subcommand == "train-classifier") return train_classifier_cmd(cfg, out, err);
    if (cfg.subcommand == "train-gnn") return train_gnn_cmd(cfg, out, err);
    if (cfg.subcommand == "finetune") return finetune_cmd(cfg, out, err);
    if (cfg.subcommand == "predict") return predict_cmd(cfg, out, err);
    if (cfg.subcommand == "design") return design_cmd(cfg, out, err, seed_given);
    if (cfg.subcommand == "layout-report") return layout_report_cmd(cfg, out, err);
    if (cfg.subcommand == "export-graph") return export_graph_cmd(cfg, out, err);
    if (cfg.subcommand == "eval") return eval_cmd(cfg, out, err);
    throw Error("unknown subcommand '" + cfg.subcommand + "'");
  } catch (const CLI::ValidationError& e) {
    err << app->get_subcommand(cfg.subcommand)->get_name() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << error_json(e) << "\n";
    return 1;
  }
}

}  // namespace invdes::cli
