#include "invdes/inverse/design.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include "invdes/diffnum/init.hpp"
#include "invdes/diffnum/ops.hpp"
#include "invdes/diffnum/optim.hpp"
#include "invdes/error.hpp"
#include "invdes/forward_model/train.hpp"
#include "json.hpp"

namespace invdes::inverse {

using diffnum::Tensor;
using nlohmann::ordered_json;

double gate(double l_perf, double tau, double gamma) {
  // 1 - sigmoid(t) == sigmoid(-t)
  const double t = gamma * (l_perf - tau);
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

Tensor gate(const Tensor& l_perf, double tau, double gamma) {
  return diffnum::sigmoid(diffnum::mul_scalar(diffnum::add_scalar(l_perf, -tau), -gamma));
}

Tensor total_loss(const Tensor& l_perf, const Tensor& l_layout, double lambda_area, double tau, double gamma) {
  if (lambda_area == 0.0) return l_perf;
  return diffnum::add(l_perf, diffnum::mul_scalar(diffnum::mul(l_layout, gate(l_perf, tau, gamma)), lambda_area));
}

circuit_ir::ParameterVector init_params(const std::vector<circuit_ir::ParamSpec>& params, std::uint64_t seed) {
  diffnum::Rng rng(seed);
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto& p : params) {
    if (p.lower > p.upper) throw Error("parameter '" + p.name + "' has lower > upper");
    const double u = rng.uniform();
    names.push_back(p.name);
    if (p.lower == p.upper) {
      values.push_back(p.lower);
    } else if (p.lower > 0.0) {
      const double v = std::exp(std::log(p.lower) + u * (std::log(p.upper) - std::log(p.lower)));
      values.push_back(std::clamp(v, p.lower, p.upper));
    } else {
      values.push_back(p.lower + u * (p.upper - p.lower));
    }
  }
  return {std::move(names), std::move(values)};
}

double mean_relative_error(const PerformanceVector& predicted, const PerformanceVector& target, MetricMask mask) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (!mask.test(i) || target.values[i] == 0.0) continue;
    total += std::abs(predicted.values[i] - target.values[i]) / std::abs(target.values[i]);
    ++n;
  }
  if (n == 0) throw DomainError("no masked metric with a nonzero target");
  return total / static_cast<double>(n);
}

GraphSurrogate::GraphSurrogate(const forward_model::ForwardModel& model, const circuit_ir::CircuitGraph& graph,
                               const std::vector<circuit_ir::ParamSpec>& params)
    : model_(model), template_(forward_model::GraphTemplate::compile(graph, params)) {
  for (const auto& g : template_.groups()) {
    if (!model_.has_etype(g.etype)) {
      throw Error("forward model has no encoder for etype '" + g.etype + "' used by '" + graph.name + "'");
    }
  }
}

Tensor GraphSurrogate::predict(const Tensor& x_scaled) const { return model_.predict(template_, x_scaled); }

double GraphSurrogate::encode(std::size_t metric, double raw) const { return model_.codec().encode(metric, raw); }

double GraphSurrogate::decode(std::size_t metric, double z) const { return model_.codec().decode(metric, z); }

DesignProblem DesignProblem::for_topology(const circuit_ir::TopologySpec& spec, const circuit_ir::CircuitGraph& graph,
                                          const PerformanceVector& target) {
  DesignProblem p;
  p.target = target;
  p.target.mask = MetricMask(static_cast<std::uint16_t>(target.mask.bits() & spec.metric_mask.bits()));
  if (p.target.mask.empty()) {
    throw Error("target shares no metric with topology '" + spec.code + "'");
  }
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (!p.target.mask.test(i)) p.target.values[i] = 0.0;
  }
  p.params = spec.parameters;
  std::vector<std::string> names;
  std::vector<double> scales;
  for (const auto& q : spec.parameters) {
    names.push_back(q.name);
    scales.push_back(q.scale);
  }
  p.passives = layout::passive_terms(graph, names, scales);
  p.area_budget_mm2 = spec.area_budget_mm2;
  p.topology_id = spec.id;
  p.topology_code = spec.code;
  return p;
}

namespace {

ordered_json metrics_json(const PerformanceVector& v) {
  ordered_json j = ordered_json::object();
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (v.mask.test(i)) j[std::string(kMetricNames[i])] = v.values[i];
  }
  return j;
}

struct Outcome {
  std::vector<double> x;  ///< scaled
  double loss = std::numeric_limits<double>::infinity();
  double perf_loss = 0.0;
  double area_mm2 = 0.0;
  PerformanceVector predicted;
  double rel_err = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::size_t steps = 0;
  std::vector<double> trace;
};

struct Objective {
  const DesignProblem& problem;
  const Surrogate& surrogate;
  const DesignConfig& config;
  Tensor target;
  Tensor mask;

  struct Parts {
    Tensor total;
    Tensor perf;
    Tensor area;
    Tensor z;
  };

  Parts evaluate(const Tensor& x) const {
    Tensor z = surrogate.predict(x);
    Tensor perf = forward_model::masked_mse(z, target, mask);
    Tensor area = layout::layout_loss(problem.passives, x);
    return {total_loss(perf, area, config.lambda_area, config.tau, config.gamma), perf, area, z};
  }

  [[nodiscard]] PerformanceVector decode(const Tensor& z) const {
    PerformanceVector v;
    v.mask = problem.target.mask;
    for (std::size_t i = 0; i < kNumMetrics; ++i) {
      if (v.mask.test(i)) v.values[i] = surrogate.decode(i, z.data()[i]);
    }
    return v;
  }

  [[nodiscard]] bool converged(const Parts& parts) const {
    return parts.area.item() < problem.area_budget_mm2 &&
           mean_relative_error(decode(parts.z), problem.target, problem.target.mask) < config.converge_rel_err;
  }
};

Outcome run_attempt(const Objective& obj, std::vector<double> x0, const std::vector<double>& lo,
                    const std::vector<double>& hi, double lr) {
  const DesignConfig& cfg = obj.config;
  const std::size_t n = x0.size();
  Tensor x({n}, std::move(x0), true);
  diffnum::Adam adam({x}, {lr});
  diffnum::PlateauScheduler scheduler(lr, cfg.scheduler_factor, cfg.scheduler_patience, cfg.min_lr,
                                      cfg.min_rel_improvement);
  Outcome out;
  double window_ref = std::numeric_limits<double>::infinity();
  std::size_t last_improve = 0;
  std::optional<std::size_t> converged_at;
  for (std::size_t step = 0; step < cfg.max_steps; ++step) {
    auto parts = obj.evaluate(x);
    const double v = parts.total.item();
    if (!std::isfinite(v)) break;
    ++out.steps;
    if (v < out.loss) {
      out.loss = v;
      out.x = x.data();
      if (!converged_at && obj.converged(parts)) converged_at = step;
    }
    if (v < window_ref * (1.0 - cfg.min_rel_improvement) || !std::isfinite(window_ref)) {
      window_ref = v;
      last_improve = step;
    }
    out.trace.push_back(out.loss);
    if (step - last_improve >= cfg.window) break;
    if (converged_at && step - *converged_at >= cfg.polish_steps) break;

    adam.zero_grad();
    parts.total.backward();
    adam.step();
    adam.set_lr(scheduler.step(v));
    auto& data = x.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::clamp(data[i], lo[i], hi[i]);
    if (cfg.on_step) cfg.on_step(data);
  }
  if (out.x.empty()) throw Error("design objective is not finite at the initial point");

  const Tensor xb({out.x.size()}, out.x);
  const auto parts = obj.evaluate(xb);
  out.perf_loss = parts.perf.item();
  out.area_mm2 = parts.area.item();
  out.predicted = obj.decode(parts.z);
  out.rel_err = mean_relative_error(out.predicted, obj.problem.target, obj.problem.target.mask);
  out.converged = out.rel_err < cfg.converge_rel_err && out.area_mm2 < obj.problem.area_budget_mm2;
  return out;
}

bool better(const Outcome& a, const Outcome& b) {
  if (a.converged != b.converged) return a.converged;
  if (a.loss != b.loss) return a.loss < b.loss;
  return a.area_mm2 < b.area_mm2;
}

}  // namespace

DesignResult optimize(const DesignProblem& problem, const Surrogate& surrogate, std::uint64_t seed,
                      const DesignConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  if (problem.target.mask.empty()) throw Error("design target has no metrics");
  if (surrogate.num_params() != problem.params.size()) {
    throw ShapeError("surrogate expects " + std::to_string(surrogate.num_params()) + " parameters, problem has " +
                     std::to_string(problem.params.size()));
  }
  if (!(config.lr > 0.0) || !(config.gamma > 0.0) || !(config.tau > 0.0) || config.lambda_area < 0.0) {
    throw Error("design hyperparameters must be positive");
  }

  std::vector<double> z(kNumMetrics, 0.0), m(kNumMetrics, 0.0);
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (!problem.target.mask.test(i)) continue;
    z[i] = surrogate.encode(i, problem.target.values[i]);
    m[i] = 1.0;
  }
  const Objective obj{problem, surrogate, config, Tensor({kNumMetrics}, z), Tensor({kNumMetrics}, m)};
  std::vector<double> lo, hi;
  for (const auto& p : problem.params) {
    lo.push_back(p.lower / p.scale);
    hi.push_back(p.upper / p.scale);
  }

  DesignResult result;
  std::vector<Outcome> outcomes;
  double lr = config.lr;
  for (std::size_t k = 0; k <= config.max_restarts; ++k) {
    const std::uint64_t attempt_seed = diffnum::derive_seed(seed, k);
    const auto x0 = init_params(problem.params, attempt_seed);
    std::vector<double> xs(x0.size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = std::clamp(x0.values()[i] / problem.params[i].scale, lo[i], hi[i]);
    outcomes.push_back(run_attempt(obj, std::move(xs), lo, hi, lr));
    const Outcome& o = outcomes.back();
    result.attempts.push_back({lr, attempt_seed, o.steps, o.loss, o.converged});
    if (o.converged) break;
    lr = std::min(lr * config.restart_lr_factor, config.max_lr);
  }

  std::size_t pick = 0;
  for (std::size_t k = 1; k < outcomes.size(); ++k) {
    if (better(outcomes[k], outcomes[pick])) pick = k;
  }
  Outcome& best = outcomes[pick];
  std::vector<std::string> names;
  std::vector<double> si;
  for (std::size_t i = 0; i < problem.params.size(); ++i) {
    names.push_back(problem.params[i].name);
    si.push_back(std::clamp(best.x[i] * problem.params[i].scale, problem.params[i].lower, problem.params[i].upper));
  }
  result.topology_id = problem.topology_id;
  result.topology_code = problem.topology_code;
  result.x = circuit_ir::ParameterVector(std::move(names), std::move(si));
  result.target = problem.target;
  result.predicted = best.predicted;
  result.predicted_rel_err = best.rel_err;
  result.perf_loss = best.perf_loss;
  result.loss = best.loss;
  result.area_mm2 = best.area_mm2;
  result.area_budget_mm2 = problem.area_budget_mm2;
  result.converged = best.converged;
  result.trace = std::move(best.trace);
  result.restarts = outcomes.size() - 1;
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

OracleValidation validate_with_oracle(DesignResult& result, const oracle::OracleFamily& family,
                                      double success_rel_err) {
  if (result.topology_id >= 0 && result.topology_id != family.topology_id) {
    throw Error("no oracle for topology " + std::to_string(result.topology_id) + " (oracle '" + family.name +
                "' covers topology " + std::to_string(family.topology_id) + ")");
  }
  OracleValidation v;
  v.metrics = oracle::eval_oracle(family, result.x);
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (!result.target.mask.test(i) || !v.metrics.mask.test(i) || result.target.values[i] == 0.0) continue;
    const double e = std::abs(v.metrics.values[i] - result.target.values[i]) / std::abs(result.target.values[i]);
    v.rel_err[i] = e;
    total += e;
    ++n;
  }
  if (n == 0) throw DomainError("oracle '" + family.name + "' shares no metric with the target");
  v.mean_rel_err = total / static_cast<double>(n);
  v.success = v.mean_rel_err < success_rel_err;
  result.oracle_metrics = v.metrics;
  result.oracle_rel_err = v.mean_rel_err;
  result.success = v.success;
  return v;
}

DesignResult end_to_end_design(const PerformanceVector& target, const classifier::Classifier& classifier,
                               const forward_model::ForwardModel& model,
                               const circuit_ir::TopologyRegistry& registry, const PipelineOptions& options) {
  if (target.mask.empty()) throw Error("design target has no metrics");
  const circuit_ir::TopologySpec* spec = nullptr;
  if (options.topology == "auto") {
    const int id = static_cast<int>(classifier.predict(target).topology);
    if (!registry.contains(id)) {
      throw Error("classifier chose topology " + std::to_string(id) + ", which the registry does not contain");
    }
    spec = &registry.by_id(id);
  } else {
    spec = &registry.resolve(options.topology);
  }
  const auto& graph = registry.graph(spec->id);
  const DesignProblem problem = DesignProblem::for_topology(*spec, graph, target);
  const GraphSurrogate surrogate(model, graph, spec->parameters);
  DesignResult result = optimize(problem, surrogate, options.seed, options.config);
  if (const auto* family = oracle::family_for_topology(spec->id)) {
    validate_with_oracle(result, *family, options.config.success_rel_err);
  }
  return result;
}

std::string DesignResult::to_json(bool include_trace) const {
  ordered_json j;
  j["topology_id"] = topology_id;
  j["topology"] = topology_code;
  j["params"] = ordered_json::object();
  for (std::size_t i = 0; i < x.size(); ++i) j["params"][x.names()[i]] = x.values()[i];
  j["target"] = metrics_json(target);
  j["predicted"] = metrics_json(predicted);
  j["predicted_rel_err"] = predicted_rel_err;
  j["perf_loss"] = perf_loss;
  j["loss"] = loss;
  j["area_mm2"] = area_mm2;
  j["area_budget_mm2"] = area_budget_mm2;
  j["converged"] = converged;
  j["oracle_rel_err"] = oracle_rel_err ? ordered_json(*oracle_rel_err) : ordered_json(nullptr);
  j["oracle_metrics"] = oracle_metrics ? metrics_json(*oracle_metrics) : ordered_json(nullptr);
  j["success"] = success;
  j["restarts"] = restarts;
  j["attempts"] = ordered_json::array();
  for (const auto& a : attempts) {
    j["attempts"].push_back({{"lr", a.lr}, {"seed", a.seed}, {"steps", a.steps}, {"loss", a.loss}, {"converged", a.converged}});
  }
  j["seconds"] = seconds;
  if (include_trace) j["trace"] = trace;
  return j.dump();
}

}  // namespace invdes::inverse
