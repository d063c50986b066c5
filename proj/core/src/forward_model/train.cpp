#include "invdes/forward_model/train.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "invdes/diffnum/init.hpp"
#include "invdes/diffnum/ops.hpp"
#include "invdes/diffnum/optim.hpp"
#include "invdes/error.hpp"
#include "json.hpp"

namespace invdes::forward_model {

using diffnum::Tensor;

Tensor masked_mse(const Tensor& pred, const Tensor& target, const Tensor& mask) {
  if (pred.shape() != target.shape() || pred.shape() != mask.shape()) {
    throw ShapeError("masked_mse: prediction, target and mask shapes differ");
  }
  if (pred.dim() != 1 && pred.dim() != 2) throw ShapeError("masked_mse expects a vector or a matrix");
  const std::size_t rows = pred.dim() == 1 ? 1 : pred.rows();
  const std::size_t cols = pred.numel() / std::max<std::size_t>(rows, 1);
  if (rows == 0) throw ShapeError("masked_mse: empty batch");
  const auto& m = mask.data();
  std::vector<double> w(m.size());
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += m[r * cols + c];
    if (total <= 0.0) throw DomainError("masked_mse: sample " + std::to_string(r) + " has an all-zero mask");
    for (std::size_t c = 0; c < cols; ++c) w[r * cols + c] = m[r * cols + c] / (total * static_cast<double>(rows));
  }
  return diffnum::sum(diffnum::mul(Tensor(pred.shape(), std::move(w)), diffnum::square(diffnum::sub(pred, target))));
}

RegressionReport compute_regression_report(const std::vector<PerformanceVector>& predicted,
                                           const std::vector<PerformanceVector>& truth) {
  if (predicted.size() != truth.size()) throw ShapeError("prediction and truth counts differ");
  RegressionReport report;
  report.count = truth.size();
  std::size_t with_rel = 0;
  double rel_total = 0.0;
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    std::vector<double> y, p;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      if (!truth[k].mask.test(i)) continue;
      y.push_back(truth[k].values[i]);
      p.push_back(predicted[k].values[i]);
    }
    if (y.empty()) continue;
    MetricStats s;
    s.count = y.size();
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0, abs_sum = 0.0, rel_sum = 0.0;
    std::size_t rel_n = 0;
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double d = p[k] - y[k];
      ss_res += d * d;
      ss_tot += (y[k] - mean) * (y[k] - mean);
      abs_sum += std::abs(d);
      if (y[k] != 0.0) {
        rel_sum += std::abs(d) / std::abs(y[k]);
        ++rel_n;
      }
    }
    const double n = static_cast<double>(y.size());
    if (ss_tot > 0.0) s.r2 = 1.0 - ss_res / ss_tot;
    s.rmse = std::sqrt(ss_res / n);
    s.mae = abs_sum / n;
    if (rel_n > 0) {
      s.mean_rel_err = rel_sum / static_cast<double>(rel_n);
      rel_total += s.mean_rel_err;
      ++with_rel;
    }
    report.metrics[i] = s;
  }
  report.mean_rel_err = with_rel == 0 ? 0.0 : rel_total / static_cast<double>(with_rel);
  return report;
}

std::string RegressionReport::to_json() const {
  nlohmann::ordered_json j;
  j["count"] = count;
  j["metrics"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (!metrics[i]) continue;
    const auto& s = *metrics[i];
    nlohmann::ordered_json m;
    m["count"] = s.count;
    if (s.r2) {
      m["r2"] = *s.r2;
    } else {
      m["r2"] = "NA";
    }
    m["rmse"] = s.rmse;
    m["mae"] = s.mae;
    m["mean_rel_err"] = s.mean_rel_err;
    j["metrics"][std::string(kMetricNames[i])] = m;
  }
  j["mean_rel_err"] = mean_rel_err;
  return j.dump();
}

namespace {

/// Compiled inputs of a dataset: one template pointer and scaled parameter vector per sample.
struct Prepared {
  std::vector<const GraphTemplate*> graphs;
  std::vector<std::vector<double>> x;
  std::vector<double> y;  ///< encoded targets, row-major {n, 16}
  std::vector<double> m;
  [[nodiscard]] std::size_t size() const { return graphs.size(); }
};

class TemplateCache {
 public:
  explicit TemplateCache(const circuit_ir::TopologyRegistry& registry) : registry_(registry) {}

  const GraphTemplate& get(int topology_id) {
    auto it = cache_.find(topology_id);
    if (it != cache_.end()) return it->second;
    const auto& spec = registry_.by_id(topology_id);
    return cache_.emplace(topology_id, GraphTemplate::compile(registry_.graph(topology_id), spec.parameters))
        .first->second;
  }

 private:
  const circuit_ir::TopologyRegistry& registry_;
  std::map<int, GraphTemplate> cache_;
};

Prepared prepare(const Dataset& data, TemplateCache& cache, const TargetCodec* codec) {
  Prepared p;
  p.graphs.reserve(data.size());
  p.x.reserve(data.size());
  for (const auto& s : data) {
    const GraphTemplate& t = cache.get(s.topology_id);
    p.graphs.push_back(&t);
    p.x.push_back(t.scale(s.params));
    if (codec == nullptr) continue;
    const PerformanceVector z = codec->encode(s.metrics);
    for (std::size_t i = 0; i < kNumMetrics; ++i) {
      p.y.push_back(z.values[i]);
      p.m.push_back(s.metrics.mask.test(i) ? 1.0 : 0.0);
    }
  }
  return p;
}

Tensor batch_loss(const ForwardModel& model, const Prepared& data, const std::vector<std::size_t>& idx) {
  std::vector<const GraphTemplate*> graphs;
  std::vector<std::vector<double>> xs;
  std::vector<double> y, m;
  graphs.reserve(idx.size());
  xs.reserve(idx.size());
  for (std::size_t i : idx) {
    graphs.push_back(data.graphs[i]);
    xs.push_back(data.x[i]);
    y.insert(y.end(), data.y.begin() + static_cast<std::ptrdiff_t>(i * kNumMetrics),
             data.y.begin() + static_cast<std::ptrdiff_t>((i + 1) * kNumMetrics));
    m.insert(m.end(), data.m.begin() + static_cast<std::ptrdiff_t>(i * kNumMetrics),
             data.m.begin() + static_cast<std::ptrdiff_t>((i + 1) * kNumMetrics));
  }
  const diffnum::Shape shape{idx.size(), kNumMetrics};
  return masked_mse(model.forward(make_batch(graphs, xs)), Tensor(shape, std::move(y)), Tensor(shape, std::move(m)));
}

double dataset_loss(const ForwardModel& model, const Prepared& data, std::size_t batch) {
  double total = 0.0;
  for (std::size_t start = 0; start < data.size(); start += batch) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(data.size(), start + batch); ++i) idx.push_back(i);
    total += batch_loss(model, data, idx).item() * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(data.size());
}

struct LoopResult {
  std::size_t epochs = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
};

/// Mini-batch Adam over `trainable`, early stopping on validation loss and
/// restoring the best weights. Leaves every model tensor without gradient tracking.
LoopResult fit(ForwardModel& model, const std::vector<diffnum::NamedTensor>& trainable, const Prepared& train,
               const Prepared& val, const ForwardTrainConfig& cfg) {
  if (train.size() == 0) throw Error("training split is empty");
  if (cfg.batch == 0) throw Error("batch size must be positive");
  std::vector<Tensor> tensors;
  for (const auto& p : trainable) tensors.push_back(p.tensor);
  diffnum::set_requires_grad(model.named_parameters(), false);
  diffnum::set_requires_grad(trainable, true);
  diffnum::Adam adam(tensors, {cfg.lr});
  diffnum::PlateauScheduler scheduler(cfg.lr, cfg.scheduler_factor, cfg.scheduler_patience);

  LoopResult result;
  std::vector<std::vector<double>> best;
  for (const auto& t : tensors) best.push_back(t.data());
  std::size_t bad_epochs = 0;
  diffnum::Rng rng(diffnum::derive_seed(cfg.seed, 7));
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double train_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + cfg.batch)));
      Tensor loss = batch_loss(model, train, idx);
      if (!std::isfinite(loss.item())) {
        throw Error("forward-model training diverged: non-finite loss at epoch " + std::to_string(epoch));
      }
      adam.zero_grad();
      loss.backward();
      if (cfg.grad_clip > 0.0) diffnum::clip_grad_norm(tensors, cfg.grad_clip);
      adam.step();
      train_loss += loss.item() * static_cast<double>(idx.size());
    }
    train_loss /= static_cast<double>(order.size());
    ++result.epochs;

    diffnum::set_requires_grad(trainable, false);
    const double val_loss = val.size() == 0 ? train_loss : dataset_loss(model, val, cfg.batch);
    diffnum::set_requires_grad(trainable, true);
    if (!std::isfinite(val_loss)) {
      throw Error("forward-model training diverged: non-finite validation loss at epoch " + std::to_string(epoch));
    }
    adam.set_lr(scheduler.step(val_loss));
    if (cfg.on_epoch) cfg.on_epoch(epoch, train_loss, val_loss, adam.lr());
    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      bad_epochs = 0;
      for (std::size_t k = 0; k < tensors.size(); ++k) best[k] = tensors[k].data();
    } else if (++bad_epochs >= cfg.patience) {
      break;
    }
  }
  for (std::size_t k = 0; k < tensors.size(); ++k) tensors[k].mutable_data() = best[k];
  adam.zero_grad();
  diffnum::set_requires_grad(trainable, false);
  return result;
}

}  // namespace

ForwardTrainResult train_forward(const circuit_ir::TopologyRegistry& registry, const Split& split,
                                 const ForwardTrainConfig& config) {
  std::vector<PerformanceVector> ys;
  ys.reserve(split.train.size());
  for (const auto& s : split.train) ys.push_back(s.metrics);
  ForwardTrainResult result{ForwardModel(config.model), {}, 0, 0.0};
  result.model.set_codec(TargetCodec::fit(ys));

  TemplateCache cache(registry);
  const Prepared train = prepare(split.train, cache, &result.model.codec());
  const Prepared val = prepare(split.val, cache, &result.model.codec());
  const LoopResult loop = fit(result.model, result.model.named_parameters(), train, val, config);
  result.epochs = loop.epochs;
  result.best_val_loss = loop.best_val_loss;
  if (!split.test.empty()) result.test = evaluate_forward(result.model, registry, split.test);
  return result;
}

ForwardTrainResult finetune_head(const ForwardModel& base, const circuit_ir::TopologyRegistry& registry,
                                 const Split& split, const ForwardTrainConfig& config) {
  ForwardTrainResult result{base.clone(), {}, 0, 0.0};
  TemplateCache cache(registry);
  const Prepared train = prepare(split.train, cache, &result.model.codec());
  const Prepared val = prepare(split.val, cache, &result.model.codec());
  const LoopResult loop = fit(result.model, result.model.head_parameters(), train, val, config);
  result.epochs = loop.epochs;
  result.best_val_loss = loop.best_val_loss;
  if (!split.test.empty()) result.test = evaluate_forward(result.model, registry, split.test);
  return result;
}

std::vector<PerformanceVector> predict_raw(const ForwardModel& model, const circuit_ir::TopologyRegistry& registry,
                                           const Dataset& data) {
  TemplateCache cache(registry);
  const Prepared p = prepare(data, cache, nullptr);
  std::vector<PerformanceVector> out;
  out.reserve(data.size());
  constexpr std::size_t kChunk = 512;
  for (std::size_t start = 0; start < p.size(); start += kChunk) {
    const std::size_t end = std::min(p.size(), start + kChunk);
    std::vector<const GraphTemplate*> graphs(p.graphs.begin() + static_cast<std::ptrdiff_t>(start),
                                             p.graphs.begin() + static_cast<std::ptrdiff_t>(end));
    std::vector<std::vector<double>> xs(p.x.begin() + static_cast<std::ptrdiff_t>(start),
                                        p.x.begin() + static_cast<std::ptrdiff_t>(end));
    const Tensor z = model.forward(make_batch(graphs, xs));
    for (std::size_t r = 0; r < end - start; ++r) {
      const Sample& s = data[start + r];
      PerformanceVector v;
      v.mask = s.metrics.mask.empty() ? registry.by_id(s.topology_id).metric_mask : s.metrics.mask;
      for (std::size_t i = 0; i < kNumMetrics; ++i) {
        if (v.mask.test(i)) v.values[i] = model.codec().decode(i, z.data()[r * kNumMetrics + i]);
      }
      out.push_back(v);
    }
  }
  return out;
}

RegressionReport evaluate_forward(const ForwardModel& model, const circuit_ir::TopologyRegistry& registry,
                                  const Dataset& data) {
  std::vector<PerformanceVector> truth;
  truth.reserve(data.size());
  for (const auto& s : data) truth.push_back(s.metrics);
  return compute_regression_report(predict_raw(model, registry, data), truth);
}

}  // namespace invdes::forward_model
