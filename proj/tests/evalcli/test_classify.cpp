#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "loongx/evalcli/classify.h"
#include "loongx/numerics/errors.h"
#include "test_util.h"

using namespace loongx;
using namespace loongx::evalcli;

namespace {

/// Brute force: for each recall level, the best precision over every score
/// threshold whose recall reaches it.
double ap_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  const double pos = double(std::count(y.begin(), y.end(), 1));
  double total = 0.0;
  for (int k = 0; k <= 100; ++k) {
    double best = 0.0;
    for (double tau : s) {
      double tp = 0, taken = 0;
      for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] >= tau) taken += 1, tp += y[i];
      if (tp / pos >= k / 100.0 - 1e-12) best = std::max(best, tp / taken);
    }
    total += best;
  }
  return total / 101.0;
}

// 20 samples x 3 labels, chosen so every label has ties and mixed ranks.
const std::vector<std::vector<double>> kScores = {
    {0.95, 0.10, 0.40}, {0.85, 0.20, 0.40}, {0.80, 0.90, 0.10}, {0.70, 0.30, 0.55}, {0.70, 0.60, 0.20},
    {0.65, 0.05, 0.75}, {0.60, 0.50, 0.50}, {0.55, 0.45, 0.45}, {0.50, 0.80, 0.35}, {0.45, 0.15, 0.90},
    {0.40, 0.70, 0.05}, {0.35, 0.25, 0.65}, {0.30, 0.35, 0.60}, {0.25, 0.55, 0.30}, {0.20, 0.65, 0.85},
    {0.15, 0.40, 0.15}, {0.10, 0.75, 0.25}, {0.05, 0.20, 0.70}, {0.02, 0.85, 0.95}, {0.01, 0.00, 0.50}};
const std::vector<std::vector<int>> kLabels = {
    {1, 0, 0}, {1, 0, 1}, {0, 1, 0}, {1, 0, 1}, {0, 1, 0}, {1, 0, 1}, {0, 0, 1}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1},
    {0, 1, 0}, {1, 0, 0}, {0, 0, 1}, {0, 1, 0}, {0, 0, 1}, {0, 0, 0}, {0, 1, 0}, {1, 0, 1}, {0, 1, 1}, {0, 0, 0}};

Tensor fixture_probs() {
  Tensor p({20, 3});
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t k = 0; k < 3; ++k) p.at(i, k) = kScores[i][k];
  return p;
}

std::filesystem::path classify_corpus() {
  const auto root = std::filesystem::temp_directory_path() / "loongx_corpus_classify1200";
  if (!std::filesystem::exists(root / "manifest.tsv")) {
    datasynth::CorpusConfig cc;
    cc.n = 1200;
    cc.seed = 3;
    cc.split_ratio = 0.5;
    datasynth::build_corpus(root, cc);
  }
  return root;
}

}  // namespace

TEST(AveragePrecision, HandWorkedCases) {
  // PR points (0.5, 1), (0.5, 0.5), (1, 2/3), (1, 0.5): 51 levels at 1, 50 at 2/3.
  EXPECT_NEAR(average_precision_101({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 0}), (51.0 + 50.0 * 2.0 / 3.0) / 101.0, 1e-15);
  EXPECT_NEAR(average_precision_101({0.5, 0.5}, {1, 0}), 0.5, 1e-15);
  EXPECT_NEAR(average_precision_101({0.1, 0.9}, {1, 1}), 1.0, 1e-15);
  EXPECT_THROW(average_precision_101({0.1, 0.2}, {0, 0}), DataError);
}

TEST(AveragePrecision, MatchesBruteForceOnFixture) {
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t i = 0; i < 20; ++i) s.push_back(kScores[i][k]), y.push_back(kLabels[i][k]);
    EXPECT_NEAR(average_precision_101(s, y), ap_oracle(s, y), 1e-12) << "label " << k;
  }
}

TEST(MultiLabel, MicroCountsOnFixture) {
  const ClassMetrics m = multilabel_metrics(fixture_probs(), kLabels);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t k = 0; k < 3; ++k) {
      const bool p = kScores[i][k] >= 0.5, y = kLabels[i][k] == 1;
      tp += p && y, fp += p && !y, fn += !p && y;
    }
  // Hand count: tp 20, fp 8, fn 4.
  EXPECT_EQ(tp, 20u);
  EXPECT_EQ(fp, 8u);
  EXPECT_EQ(fn, 4u);
  EXPECT_NEAR(m.precision, 20.0 / 28.0, 1e-15);
  EXPECT_NEAR(m.recall, 20.0 / 24.0, 1e-15);
  EXPECT_NEAR(m.f1, 2.0 * 20.0 / (2.0 * 20.0 + 8.0 + 4.0), 1e-15);
  EXPECT_EQ(m.labels_scored, 3u);
  double ap = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t i = 0; i < 20; ++i) s.push_back(kScores[i][k]), y.push_back(kLabels[i][k]);
    ap += ap_oracle(s, y);
  }
  EXPECT_NEAR(m.mAP, ap / 3.0, 1e-12);
}

TEST(MultiLabel, LabelsWithoutPositivesAreSkipped) {
  Tensor p({2, 2}, {0.9, 0.1, 0.2, 0.3});
  const ClassMetrics m = multilabel_metrics(p, {{1, 0}, {0, 0}});
  EXPECT_EQ(m.labels_scored, 1u);
  EXPECT_EQ(m.mAP, 1.0);
  EXPECT_THROW(multilabel_metrics(p, {{0, 0}, {0, 0}}), DataError);
}

TEST(ClassifierConfig, ParsingAndValidation) {
  for (const char* s : {"noise", "text", "eeg", "fnirs", "ppg", "motion", "fused", "text+fused"})
    EXPECT_EQ(source_name(parse_source(s)), s);
  EXPECT_THROW(parse_source("speech"), InvalidConfig);
  ClassifierConfig c;
  c.source = InputSource::TextFused;
  c.channels = {"Oz", "Pz"};
  ClassifierConfig d;
  d.apply_kv(c.to_kv("classify"), "classify");
  EXPECT_EQ(format_kv(d.to_kv("")), format_kv(c.to_kv("")));
  d.hidden1 = 0;
  EXPECT_THROW(d.validate(), InvalidConfig);
  ClassifierConfig e;
  e.channels = {"Cz"};
  EXPECT_THROW(e.validate(), InvalidConfig);
}

TEST(ClassifierInputs, LayoutPerSource) {
  const auto s = datasynth::make_sample("x", 11, 0.0);
  ClassifierConfig c;
  c.unified_len = 1024;
  std::size_t dim = 0;
  c.source = InputSource::EEG;
  auto row = sample_input(s, c, &dim);
  EXPECT_EQ(dim, 4u * 1024u);
  ASSERT_EQ(row.runs.size(), 4u);
  EXPECT_EQ(row.runs[1].first, 1024u);
  EXPECT_EQ(row.runs[1].second.size(), 500u);  // native length, rest is padding

  const auto all = row;
  c.channels = {"Oz"};
  row = sample_input(s, c, &dim);
  EXPECT_EQ(dim, 1024u);
  EXPECT_EQ(row.runs[0].second, all.runs[3].second);

  c.channels.clear();
  c.source = InputSource::Fused;
  sample_input(s, c, &dim);
  EXPECT_EQ(dim, (4u + 6u + 2u + 6u) * 1024u);
  c.source = InputSource::TextFused;
  sample_input(s, c, &dim);
  EXPECT_EQ(dim, 256u + 18u * 1024u);
  c.source = InputSource::Noise;
  const auto n1 = sample_input(s, c, &dim);
  EXPECT_EQ(dim, 256u);
  EXPECT_EQ(n1.runs[0].second, sample_input(s, c).runs[0].second);

  c.unified_len = 100;  // truncation
  c.source = InputSource::EEG;
  row = sample_input(s, c, &dim);
  EXPECT_EQ(row.runs[0].second.size(), 100u);
}

TEST(ClassifierInputs, DensifyPlacesRuns) {
  LabeledInputs in;
  in.dim = 5;
  in.rows = {SparseRow{{{1, {2.0, 3.0}}}}, SparseRow{{{4, {7.0}}}}};
  const Tensor x = densify(in, {1, 0});
  EXPECT_EQ(x.vec(), (std::vector<double>{0, 0, 0, 0, 7, 0, 2, 3, 0, 0}));
}

TEST(Classifier, SingleClassCorpusRejected) {
  LabeledInputs in;
  in.dim = 2;
  in.rows = {SparseRow{{{0, {1.0, 2.0}}}}, SparseRow{{{0, {3.0, 4.0}}}}};
  in.labels = {{1, 0}, {1, 0}};
  EXPECT_THROW(train_classifier(in, in, ClassifierConfig{}), DataError);
}

TEST(Classifier, NoiseInputScoresNearPrevalence) {
  ClassifierConfig c;
  c.source = InputSource::Noise;
  c.epochs = 10;
  const auto corpus = classify_corpus();
  const auto test = build_inputs(corpus, "test", c);
  const auto r = train_classifier(build_inputs(corpus, "train", c), test, c);
  EXPECT_NEAR(r.metrics.mAP, prevalence_baseline(test.labels), 0.05);
}

TEST(Classifier, EegBeatsNoise) {
  ClassifierConfig c;
  c.epochs = 10;
  c.unified_len = 512;
  const auto corpus = classify_corpus();
  const double eeg = classify_edit_types(corpus, c).metrics.mAP;
  c.source = InputSource::Noise;
  const double noise = classify_edit_types(corpus, c).metrics.mAP;
  EXPECT_GE(eeg, noise + 0.07);
}

TEST(Classifier, DeterministicForSeed) {
  ClassifierConfig c;
  c.epochs = 2;
  c.unified_len = 256;
  const auto corpus = classify_corpus();
  const auto a = classify_edit_types(corpus, c).metrics, b = classify_edit_types(corpus, c).metrics;
  EXPECT_EQ(a.mAP, b.mAP);
  EXPECT_EQ(a.f1, b.f1);
}

TEST(LengthSweep, RowsAndWallTime) {
  ClassifierConfig c;
  c.epochs = 3;
  const std::vector<std::size_t> lengths = {2048, 4096, 8192};
  const auto rows = length_sweep(classify_corpus(), lengths, c);
  ASSERT_EQ(rows.size(), lengths.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].length, lengths[i]);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GE(rows[i].wall_seconds, rows[i - 1].wall_seconds);
  const std::string tsv = sweep_tsv(rows);
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 4);
  EXPECT_EQ(tsv.rfind("length\tprecision\trecall\tf1\tmAP\n", 0), 0u);
  const std::string timing = sweep_timing_tsv(rows);
  EXPECT_EQ(std::count(timing.begin(), timing.end(), '\n'), 4);
}
