#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "loongx/train/model.h"

namespace loongx::train {

/// Finetuning loss stayed above divergence_factor x the first-step loss for
/// divergence_patience consecutive checks.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tracks mean losses of successive check windows against the first loss.
class DivergenceMonitor {
 public:
  DivergenceMonitor(double factor, std::size_t patience) : factor_(factor), patience_(patience) {}
  /// Throws DivergenceError on the `patience`-th consecutive window mean
  /// above factor x initial.
  void check(double window_mean, double initial, const std::string& where);
  std::size_t strikes() const { return strikes_; }
  void set_strikes(std::size_t n) { strikes_ = n; }

 private:
  double factor_;
  std::size_t patience_;
  std::size_t strikes_ = 0;
};

struct CurveRow {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::string split;        // "train" or "test"
  double loss = 0.0;        // NaN on test rows
  double metric = 0.0;      // top-1 retrieval (pretrain) or held-out L1 (finetune)
};

/// Appends rows as "step,epoch,split,loss,metric" with a header line.
void write_curve(const std::filesystem::path& path, const std::vector<CurveRow>& rows, const std::string& metric);

struct PretrainResult {
  std::vector<CurveRow> curve;  // one train row per epoch: mean loss and top-1
  std::uint64_t text_hash_before = 0, text_hash_after = 0;
};

/// NT-Xent alignment of both encoder groups to the frozen text embeddings,
/// using in-batch negatives. Only encoder parameters move. When `out_dir` is
/// nonempty, writes pretrain_curve.csv and pretrain.ckpt there. Throws
/// DataError for an empty corpus and NonFiniteError for a non-finite loss.
PretrainResult pretrain(LoongXModel& model, const std::vector<Record>& data, const std::filesystem::path& out_dir);

struct FinetuneResult {
  std::vector<CurveRow> curve;  // per-step train rows plus per-epoch test rows
  double initial_loss = 0.0;
  double heldout_l1 = 0.0;      // last evaluation
  std::size_t steps = 0;
};

/// Joint velocity-loss training of encoders, fusion and denoiser. Signals in
/// `train` and `test` are used as given (see replace_with_noise for the noise
/// control). Checkpoints after every epoch to out_dir/epoch<k>.ckpt and
/// out_dir/last.ckpt unless out_dir is empty; `resume` continues from such a
/// checkpoint.
FinetuneResult finetune(LoongXModel& model, const std::vector<Record>& train, const std::vector<Record>& test,
                        const std::filesystem::path& out_dir,
                        const std::optional<std::filesystem::path>& resume = std::nullopt);

/// Mean L1 between sampled edits and targets over the first `limit` records
/// (all when 0). Record i samples with a generator seeded from (seed, i).
double heldout_l1(LoongXModel& model, const std::vector<Record>& test, std::size_t limit, std::uint64_t seed);

}  // namespace loongx::train
