#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "loongx/datasynth/corpus.h"
#include "loongx/numerics/tape.h"

namespace loongx::evalcli {

enum class InputSource { Noise, Text, EEG, fNIRS, PPG, Motion, Fused, TextFused };
InputSource parse_source(const std::string& s);
std::string source_name(InputSource s);

struct ClassifierConfig {
  std::size_t hidden1 = 32, hidden2 = 32;
  InputSource source = InputSource::EEG;
  /// Every signal is truncated or zero-padded to this length.
  std::size_t unified_len = 8192;
  /// EEG channel subset by name (Pz, Fp2, Fpz, Oz); empty keeps all.
  std::vector<std::string> channels;
  std::size_t noise_dim = 256;
  std::size_t epochs = 30;
  std::size_t batch = 32;
  double lr = 1e-3;
  double weight_decay = 0.01;
  std::uint64_t seed = 1;

  void validate() const;
  void apply_kv(const KeyValues& kv, const std::string& prefix);
  KeyValues to_kv(const std::string& prefix) const;
};

/// Input row stored as dense runs of a mostly zero vector.
struct SparseRow {
  std::vector<std::pair<std::size_t, std::vector<double>>> runs;  // (offset, values)
};

struct LabeledInputs {
  std::size_t dim = 0;
  std::vector<SparseRow> rows;
  std::vector<std::vector<int>> labels;  // multi-hot over the 8 edit types
};

/// Feature row for one sample: prepared signals laid out channel-major at
/// `unified_len` per channel, the text embedding, or seeded noise.
SparseRow sample_input(const datasynth::EditSample& s, const ClassifierConfig& cfg, std::size_t* dim = nullptr);

/// Reads the corpus split and builds inputs for cfg.source.
LabeledInputs build_inputs(const std::filesystem::path& corpus, const std::string& split,
                           const ClassifierConfig& cfg);

/// Dense [rows x dim] matrix of the selected rows.
Tensor densify(const LabeledInputs& in, const std::vector<std::size_t>& rows);

struct ClassMetrics {
  double precision = 0.0, recall = 0.0, f1 = 0.0;  // micro, threshold 0.5
  double mAP = 0.0;                                 // macro, 101-point interpolated
  std::size_t labels_scored = 0;                    // labels with >= 1 positive
};

/// 101-point interpolated average precision of one label. Tied scores enter
/// the curve together. Throws DataError when there is no positive.
double average_precision_101(const std::vector<double>& scores, const std::vector<int>& labels);

/// probs and labels are [n x K].
ClassMetrics multilabel_metrics(const Tensor& probs, const std::vector<std::vector<int>>& labels);

/// Three linear layers: ReLU, ReLU, sigmoid.
class MLPClassifier {
 public:
  MLPClassifier(std::size_t in, std::size_t h1, std::size_t h2, std::size_t out, Rng& rng);
  Var logits(Tape& tape, const Tensor& x);
  ParamList params();

 private:
  Parameter w1_, b1_, w2_, b2_, w3_, b3_;
};

struct ClassifyResult {
  ClassMetrics metrics;
  double train_seconds = 0.0;
  std::size_t input_dim = 0;
};

/// Trains on `train` with binary cross-entropy, scores `test`. Throws
/// DataError when the training labels hold a single class.
ClassifyResult train_classifier(const LabeledInputs& train, const LabeledInputs& test, const ClassifierConfig& cfg);
ClassifyResult classify_edit_types(const std::filesystem::path& corpus, const ClassifierConfig& cfg);

/// Mean label prevalence of `labels`: the mAP of an uninformative ranking.
double prevalence_baseline(const std::vector<std::vector<int>>& labels);

struct SweepRow {
  std::size_t length = 0;
  ClassMetrics metrics;
  double wall_seconds = 0.0;
};

std::vector<SweepRow> length_sweep(const std::filesystem::path& corpus, const std::vector<std::size_t>& lengths,
                                   ClassifierConfig cfg);
/// length, precision, recall, f1, mAP.
std::string sweep_tsv(const std::vector<SweepRow>& rows);
/// length, wall_seconds.
std::string sweep_timing_tsv(const std::vector<SweepRow>& rows);

}  // namespace loongx::evalcli
