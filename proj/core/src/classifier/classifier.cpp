#include "invdes/classifier/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "invdes/diffnum/init.hpp"
#include "invdes/diffnum/ops.hpp"
#include "invdes/diffnum/optim.hpp"
#include "invdes/diffnum/weights.hpp"
#include "invdes/error.hpp"
#include "json.hpp"

namespace invdes::classifier {

using diffnum::Tensor;
using nlohmann::ordered_json;

namespace {

constexpr std::size_t kHidden = 256;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Tensor one_hot(const std::vector<std::size_t>& labels) {
  std::vector<double> data(labels.size() * kNumClasses, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) data[i * kNumClasses + labels[i]] = 1.0;
  return {{labels.size(), kNumClasses}, std::move(data)};
}

Tensor cross_entropy(const Tensor& logits, const Tensor& targets) {
  const double n = static_cast<double>(logits.rows());
  return diffnum::mul_scalar(diffnum::sum(diffnum::mul(diffnum::log_softmax(logits), targets)), -1.0 / n);
}

std::vector<std::size_t> labels_of(const Dataset& data) {
  std::vector<std::size_t> out;
  out.reserve(data.size());
  for (const auto& s : data) {
    if (s.topology_id < 0 || static_cast<std::size_t>(s.topology_id) >= kNumClasses) {
      throw Error("topology id " + std::to_string(s.topology_id) + " outside the class range");
    }
    out.push_back(static_cast<std::size_t>(s.topology_id));
  }
  return out;
}

double dataset_loss(const Classifier& model, const Tensor& x, const std::vector<std::size_t>& y) {
  if (y.empty()) return 0.0;
  return cross_entropy(model.logits(x), one_hot(y)).item();
}

}  // namespace

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ShapeError("argmax of an empty range");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Report compute_report(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& predicted,
                      std::size_t num_classes) {
  if (truth.size() != predicted.size()) throw ShapeError("truth and prediction lengths differ");
  Report r;
  r.count = truth.size();
  r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= num_classes || predicted[i] >= num_classes) throw Error("class index out of range");
    ++r.confusion[truth[i]][predicted[i]];
    if (truth[i] == predicted[i]) ++correct;
  }
  if (r.count == 0) return r;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.count);
  r.micro_f1 = r.accuracy;

  std::size_t in_truth = 0;
  std::size_t in_either = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t tp = r.confusion[c][c];
    std::size_t support = 0;
    std::size_t predicted_c = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      support += r.confusion[c][k];
      predicted_c += r.confusion[k][c];
    }
    if (support == 0 && predicted_c == 0) continue;
    ++in_either;
    const double recall = support ? static_cast<double>(tp) / static_cast<double>(support) : 0.0;
    const double precision = predicted_c ? static_cast<double>(tp) / static_cast<double>(predicted_c) : 0.0;
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    r.macro_precision += precision;
    r.macro_recall += recall;
    r.macro_f1 += f1;
    if (support) {
      ++in_truth;
      r.balanced_accuracy += recall;
    }
  }
  r.macro_precision /= static_cast<double>(in_either);
  r.macro_recall /= static_cast<double>(in_either);
  r.macro_f1 /= static_cast<double>(in_either);
  r.balanced_accuracy /= static_cast<double>(in_truth);
  return r;
}

std::string Report::to_json() const {
  ordered_json j;
  j["count"] = count;
  j["accuracy"] = accuracy;
  j["balanced_accuracy"] = balanced_accuracy;
  j["macro_precision"] = macro_precision;
  j["macro_recall"] = macro_recall;
  j["macro_f1"] = macro_f1;
  j["micro_f1"] = micro_f1;
  j["confusion"] = confusion;
  return j.dump();
}

Classifier::Classifier(std::uint64_t seed)
    : mlp_({kNumMetrics, kHidden, kHidden, kHidden, kHidden, kNumClasses}, seed) {}

Tensor Classifier::logits(const Tensor& x) const {
  if (x.dim() != 2 || x.cols() != kNumMetrics) {
    throw ShapeError("classifier input must be {n, 16}, got " + diffnum::to_string(x.shape()));
  }
  return mlp_.forward(x);
}

Prediction Classifier::predict_normalized(const PerformanceVector& normalized) const {
  std::vector<double> row(kNumMetrics, 0.0);
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    if (normalized.mask.test(i)) row[i] = normalized.values[i];
  }
  Tensor p = diffnum::softmax(logits(Tensor({1, kNumMetrics}, std::move(row))));
  Prediction out;
  std::copy(p.data().begin(), p.data().end(), out.probabilities.begin());
  out.topology = argmax(out.probabilities);
  return out;
}

Prediction Classifier::predict(const PerformanceVector& raw) const {
  if (raw.mask.empty()) throw Error("target specifies no metrics");
  return predict_normalized(stats_.normalize(raw));
}

std::vector<diffnum::NamedTensor> Classifier::named_parameters() const {
  std::vector<diffnum::NamedTensor> out;
  mlp_.append_parameters("mlp", out);
  return out;
}

void Classifier::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  diffnum::save_weights_file(named_parameters(), dir / "classifier.weights.json");
  ordered_json side;
  side["format_version"] = 1;
  side["input_dim"] = kNumMetrics;
  side["hidden"] = std::vector<std::size_t>(4, kHidden);
  side["num_classes"] = kNumClasses;
  side["stats"] = ordered_json::parse(stats_.to_json());
  std::ofstream out(dir / "classifier.json");
  if (!out) throw Error("cannot write '" + (dir / "classifier.json").string() + "'");
  out << side.dump(2) << '\n';
}

Classifier Classifier::load(const std::filesystem::path& dir) {
  Classifier c;
  try {
    auto side = ordered_json::parse(read_file(dir / "classifier.json"));
    if (side.at("num_classes").get<std::size_t>() != kNumClasses ||
        side.at("input_dim").get<std::size_t>() != kNumMetrics) {
      throw Error("classifier sidecar describes an incompatible architecture");
    }
    c.stats_ = NormStats::from_json(side.at("stats").dump());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed classifier sidecar: ") + e.what());
  }
  diffnum::load_weights_file(c.named_parameters(), dir / "classifier.weights.json");
  return c;
}

Tensor input_matrix(const Dataset& data, const NormStats& stats) {
  std::vector<double> x(data.size() * kNumMetrics, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto z = stats.normalize(data[i].metrics);
    for (std::size_t j = 0; j < kNumMetrics; ++j) {
      if (z.mask.test(j)) x[i * kNumMetrics + j] = z.values[j];
    }
  }
  return {{data.size(), kNumMetrics}, std::move(x)};
}

Report evaluate(const Classifier& model, const Dataset& data) {
  auto truth = labels_of(data);
  std::vector<std::size_t> pred;
  pred.reserve(data.size());
  if (!data.empty()) {
    Tensor logits = model.logits(input_matrix(data, model.stats()));
    const auto& v = logits.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      pred.push_back(argmax(std::span<const double>(v.data() + i * kNumClasses, kNumClasses)));
    }
  }
  return compute_report(truth, pred);
}

TrainResult train_classifier(const Split& split, const TrainConfig& config) {
  if (split.train.empty()) throw Error("training split is empty");
  if (config.batch == 0) throw Error("batch size must be positive");
  const auto y_train = labels_of(split.train);
  const auto y_val = labels_of(split.val);
  std::set<std::size_t> seen(y_train.begin(), y_train.end());
  const auto y_test = labels_of(split.test);
  for (const auto* part : {&y_val, &y_test}) {
    for (auto c : *part) {
      if (!seen.count(c)) throw Error("class " + std::to_string(c) + " has no training samples");
    }
  }

  std::vector<PerformanceVector> ys;
  ys.reserve(split.train.size());
  for (const auto& s : split.train) ys.push_back(s.metrics);

  TrainResult result{Classifier(config.seed), {}, 0, std::numeric_limits<double>::infinity()};
  Classifier& model = result.model;
  model.set_stats(NormStats::fit(ys));

  const Tensor x_train = input_matrix(split.train, model.stats());
  const Tensor x_val = input_matrix(split.val, model.stats());
  auto params = model.named_parameters();
  std::vector<Tensor> tensors;
  for (auto& p : params) tensors.push_back(p.tensor);
  diffnum::set_requires_grad(params, true);
  diffnum::Adam adam(tensors, {config.lr});

  std::vector<std::vector<double>> best;
  for (auto& t : tensors) best.push_back(t.data());
  std::size_t bad_epochs = 0;
  diffnum::Rng rng(diffnum::derive_seed(config.seed, 1));
  std::vector<std::size_t> order(split.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double train_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t end = std::min(order.size(), start + config.batch);
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<std::size_t> yb;
      for (auto i : idx) yb.push_back(y_train[i]);
      Tensor loss = cross_entropy(model.logits(diffnum::index_select(x_train, idx)), one_hot(yb));
      adam.zero_grad();
      loss.backward();
      adam.step();
      train_loss += loss.item() * static_cast<double>(idx.size());
    }
    train_loss /= static_cast<double>(order.size());
    ++result.epochs;

    const double val_loss = y_val.empty() ? train_loss : dataset_loss(model, x_val, y_val);
    if (!std::isfinite(val_loss)) throw Error("classifier training diverged (non-finite loss)");
    if (config.on_epoch) config.on_epoch(epoch, train_loss, val_loss);
    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      bad_epochs = 0;
      for (std::size_t k = 0; k < tensors.size(); ++k) best[k] = tensors[k].data();
    } else if (++bad_epochs >= config.patience) {
      break;
    }
  }

  for (std::size_t k = 0; k < tensors.size(); ++k) tensors[k].mutable_data() = best[k];
  adam.zero_grad();
  diffnum::set_requires_grad(params, false);
  result.test = evaluate(model, split.test);
  return result;
}

}  // namespace invdes::classifier
