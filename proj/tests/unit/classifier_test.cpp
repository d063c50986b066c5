#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "invdes/classifier/classifier.hpp"
#include "invdes/classifier/dataset.hpp"
#include "invdes/classifier/performance.hpp"
#include "invdes/diffnum/init.hpp"
#include "invdes/diffnum/ops.hpp"
#include "invdes/error.hpp"

namespace cl = invdes::classifier;
using invdes::Dataset;
using invdes::NormStats;
using invdes::PerformanceVector;
using invdes::Sample;

namespace {

PerformanceVector pv(std::initializer_list<std::pair<std::size_t, double>> entries) {
  PerformanceVector v;
  for (auto [i, x] : entries) {
    v.values[i] = x;
    v.mask.set(i);
  }
  return v;
}

/// n samples per class; class k sits at (3k, -2k) in (DCP, VGain) plus uniform noise of half-width `spread`.
Dataset blobs(std::size_t classes, std::size_t n, std::uint64_t seed, double spread = 0.3) {
  invdes::diffnum::Rng rng(seed);
  Dataset data;
  for (std::size_t k = 0; k < classes; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      Sample s;
      s.topology_id = static_cast<int>(k);
      s.metrics = pv({{0, 3.0 * k + spread * rng.uniform(-1, 1)}, {1, -2.0 * k + spread * rng.uniform(-1, 1)}});
      data.push_back(s);
    }
  }
  return data;
}

void zero_all(const cl::Classifier& c) {
  for (const auto& p : c.named_parameters()) {
    auto t = p.tensor;
    std::fill(t.mutable_data().begin(), t.mutable_data().end(), 0.0);
  }
}

}  // namespace

TEST(Normalize, ZScore) {
  NormStats stats;
  stats.mean[0] = 3.0;
  stats.std[0] = 2.0;
  stats.fitted.set(0);
  EXPECT_DOUBLE_EQ(stats.normalize(0, 5.0), 1.0);
  EXPECT_DOUBLE_EQ(stats.normalize(0, 3.0), 0.0);
  EXPECT_DOUBLE_EQ(stats.denormalize(0, 1.0), 5.0);
}

TEST(Normalize, AbsentMetricImputedAsZero) {
  const NormStats stats = NormStats::fit({pv({{0, 1.0}, {1, 2.0}}), pv({{0, 3.0}, {1, 6.0}})});
  const auto z = stats.normalize(pv({{0, 2.0}, {1, 4.0}}));
  EXPECT_FALSE(z.mask.test(8));  // OscF on an amplifier
  EXPECT_EQ(z.values[8], 0.0);
  EXPECT_DOUBLE_EQ(z.values[0], 0.0);
}

TEST(Normalize, ZeroStdThrows) {
  const NormStats stats = NormStats::fit({pv({{0, 1.0}}), pv({{0, 1.0}})});
  EXPECT_THROW((void)stats.normalize(pv({{0, 1.0}})), invdes::DomainError);
  EXPECT_THROW((void)stats.normalize(pv({{4, 1.0}})), invdes::DomainError);
}

TEST(Normalize, RefitOnNormalizedIsStandard) {
  invdes::diffnum::Rng rng(4);
  std::vector<PerformanceVector> raw;
  for (int i = 0; i < 300; ++i) {
    auto v = pv({{0, rng.uniform(0, 50)}, {7, rng.uniform(1e6, 1e9)}});
    if (i % 3 == 0) v = pv({{0, rng.uniform(0, 50)}, {8, rng.uniform(1e9, 5e9)}});
    raw.push_back(v);
  }
  const NormStats stats = NormStats::fit(raw);
  std::vector<PerformanceVector> z;
  for (const auto& v : raw) z.push_back(stats.normalize(v));
  const NormStats again = NormStats::fit(z);
  for (std::size_t m : {0, 7, 8}) {
    EXPECT_LT(std::abs(again.mean[m]), 1e-9) << m;
    EXPECT_LT(std::abs(again.std[m] - 1.0), 1e-9) << m;
  }
}

TEST(Normalize, StatsJsonRoundTrip) {
  const NormStats stats = NormStats::fit({pv({{0, 1.0}, {3, 2.0}}), pv({{0, 4.0}, {3, 7.5}})});
  const NormStats back = NormStats::from_json(stats.to_json());
  EXPECT_EQ(back.mean, stats.mean);
  EXPECT_EQ(back.std, stats.std);
  EXPECT_EQ(back.fitted, stats.fitted);
}

TEST(Predict, EqualLogitsPickClassZero) {
  cl::Classifier c(1);
  zero_all(c);
  const auto p = c.predict_normalized(pv({{0, 0.3}}));
  EXPECT_EQ(p.topology, 0U);
  for (double q : p.probabilities) EXPECT_NEAR(q, 1.0 / 20.0, 1e-15);
}

TEST(Predict, DominantLogitWins) {
  cl::Classifier c(1);
  zero_all(c);
  auto params = c.named_parameters();
  auto bias = params.back().tensor;
  ASSERT_EQ(bias.numel(), 20U);
  bias.mutable_data()[17] = 5.0;
  const auto p = c.predict_normalized(pv({{0, 0.3}}));
  EXPECT_EQ(p.topology, 17U);
  EXPECT_GT(p.probabilities[17], 1.0 / 20.0);
}

TEST(Predict, ProbabilitiesSumToOne) {
  const cl::Classifier c(9);
  invdes::diffnum::Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    PerformanceVector v;
    for (std::size_t i = 0; i < 16; ++i) {
      if (rng.uniform() < 0.5) {
        v.values[i] = rng.uniform(-3, 3);
        v.mask.set(i);
      }
    }
    const auto p = c.predict_normalized(v);
    EXPECT_NEAR(std::accumulate(p.probabilities.begin(), p.probabilities.end(), 0.0), 1.0, 1e-12);
    EXPECT_EQ(p.topology, cl::argmax(p.probabilities));
  }
}

TEST(Predict, ArgmaxTieBreak) {
  const std::vector<double> v = {0.1, 0.4, 0.4, 0.1};
  EXPECT_EQ(cl::argmax(v), 1U);
}

TEST(Predict, ImputedSlotReceivesNoGradientFromRawValue) {
  // The normalized input for an absent metric is the constant 0, whatever the raw slot held.
  NormStats stats = NormStats::fit({pv({{0, 1.0}, {1, 0.0}}), pv({{0, 2.0}, {1, 1.0}})});
  PerformanceVector a = pv({{0, 1.5}});
  PerformanceVector b = a;
  b.values[1] = 123.0;  // garbage in an unmasked slot
  const auto za = stats.normalize(a);
  const auto zb = stats.normalize(b);
  EXPECT_EQ(za.values, zb.values);
}

TEST(Split, ExactProportionsPerClass) {
  const Dataset data = blobs(3, 100, 1);
  const auto split = invdes::stratified_split(data, {0.8, 0.1, 0.1}, 7);
  for (int k = 0; k < 3; ++k) {
    auto count = [k](const Dataset& d) {
      return std::count_if(d.begin(), d.end(), [k](const Sample& s) { return s.topology_id == k; });
    };
    EXPECT_EQ(count(split.train), 80);
    EXPECT_EQ(count(split.val), 10);
    EXPECT_EQ(count(split.test), 10);
  }
}

TEST(Split, ProportionsWithinOneSample) {
  const Dataset data = blobs(4, 37, 1);
  const auto split = invdes::stratified_split(data, {0.7, 0.2, 0.1}, 3);
  for (int k = 0; k < 4; ++k) {
    const auto n = std::count_if(split.train.begin(), split.train.end(),
                                 [k](const Sample& s) { return s.topology_id == k; });
    EXPECT_LE(std::abs(static_cast<double>(n) - 0.7 * 37), 1.0);
  }
  EXPECT_EQ(split.train.size() + split.val.size() + split.test.size(), data.size());
}

TEST(Split, DeterministicAndSeedSensitive) {
  const Dataset data = blobs(2, 50, 1);
  const auto a = invdes::stratified_split(data, {0.8, 0.1, 0.1}, 5);
  const auto b = invdes::stratified_split(data, {0.8, 0.1, 0.1}, 5);
  const auto c = invdes::stratified_split(data, {0.8, 0.1, 0.1}, 6);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.train, c.train);
}

TEST(Split, Errors) {
  const Dataset data = blobs(2, 50, 1);
  EXPECT_THROW((void)invdes::stratified_split(data, {0.8, 0.1, 0.2}, 1), invdes::Error);
  EXPECT_THROW((void)invdes::stratified_split(blobs(2, 9, 1), {0.8, 0.1, 0.1}, 1), invdes::Error);
}

TEST(Dataset, JsonlRoundTrip) {
  Dataset data = blobs(2, 3, 1);
  data[0].params = {{"R", 1000.0}, {"W", 2e-6}};
  const Dataset back = invdes::parse_jsonl(invdes::to_jsonl(data));
  EXPECT_EQ(back, data);
}

TEST(Dataset, MalformedLineReportsLineNumber) {
  try {
    (void)invdes::parse_jsonl("{\"topology_id\":0,\"params\":{},\"metrics\":{}}\n{oops\n");
    FAIL() << "expected throw";
  } catch (const invdes::Error& e) {
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos) << e.what();
  }
}

TEST(Report, BalancedAccuracyIsMeanRecall) {
  const std::vector<std::size_t> truth = {0, 0, 0, 0, 1, 1, 2, 2, 2, 2, 2, 2};
  const std::vector<std::size_t> pred = {0, 0, 1, 0, 1, 2, 2, 2, 2, 0, 2, 2};
  const auto r = cl::compute_report(truth, pred, 3);
  const double recall0 = 3.0 / 4.0, recall1 = 1.0 / 2.0, recall2 = 5.0 / 6.0;
  EXPECT_NEAR(r.balanced_accuracy, (recall0 + recall1 + recall2) / 3.0, 1e-15);
  EXPECT_NEAR(r.accuracy, 9.0 / 12.0, 1e-15);
  EXPECT_NEAR(r.micro_f1, r.accuracy, 1e-15);
  const double p0 = 3.0 / 4.0, p1 = 1.0 / 2.0, p2 = 5.0 / 6.0;
  EXPECT_NEAR(r.macro_precision, (p0 + p1 + p2) / 3.0, 1e-15);
  auto f1 = [](double p, double q) { return 2 * p * q / (p + q); };
  EXPECT_NEAR(r.macro_f1, (f1(p0, recall0) + f1(p1, recall1) + f1(p2, recall2)) / 3.0, 1e-15);
  EXPECT_EQ(r.confusion[2][0], 1U);
}

TEST(Train, SeparableBlobsReachFullAccuracy) {
  const auto split = invdes::stratified_split(blobs(2, 100, 11), {0.8, 0.1, 0.1}, 1);
  cl::TrainConfig cfg;
  cfg.max_epochs = 50;
  cfg.batch = 32;
  const auto result = cl::train_classifier(split, cfg);
  EXPECT_EQ(result.test.accuracy, 1.0);
  EXPECT_LE(result.epochs, 50U);
}

TEST(Train, PermutedLabelsStayNearChance) {
  Dataset data = blobs(20, 60, 3, 20.0);
  invdes::diffnum::Rng rng(17);
  // Shuffling labels keeps every class at 60 samples.
  for (std::size_t i = data.size(); i > 1; --i) {
    std::swap(data[i - 1].topology_id, data[rng.below(i)].topology_id);
  }
  const auto split = invdes::stratified_split(data, {0.5, 0.1, 0.4}, 2);
  cl::TrainConfig cfg;
  cfg.max_epochs = 15;
  const auto result = cl::train_classifier(split, cfg);
  EXPECT_NEAR(result.test.accuracy, 1.0 / 20.0, 0.05);
}

TEST(Train, MissingTrainingClassThrows) {
  auto split = invdes::stratified_split(blobs(3, 20, 1), {0.8, 0.1, 0.1}, 1);
  std::erase_if(split.train, [](const Sample& s) { return s.topology_id == 2; });
  EXPECT_THROW((void)cl::train_classifier(split, {}), invdes::Error);
}

TEST(Train, SaveLoadPreservesPredictions) {
  const auto split = invdes::stratified_split(blobs(3, 30, 2), {0.8, 0.1, 0.1}, 1);
  cl::TrainConfig cfg;
  cfg.max_epochs = 3;
  const auto result = cl::train_classifier(split, cfg);
  const auto dir = std::filesystem::temp_directory_path() / "invdes_classifier_test";
  std::filesystem::create_directories(dir);
  result.model.save(dir);
  const auto back = cl::Classifier::load(dir);
  for (const auto& s : split.test) {
    const auto a = result.model.predict(s.metrics);
    const auto b = back.predict(s.metrics);
    EXPECT_EQ(a.topology, b.topology);
    EXPECT_EQ(a.probabilities, b.probabilities);
  }
  std::filesystem::remove_all(dir);
}
