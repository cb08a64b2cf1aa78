#pragma once

#include <map>
#include <optional>

#include "loongx/train/data.h"

namespace loongx::train {

/// Contrastive encoder groups.
enum class Group { A, B };  // A: EEG + PPG, B: fNIRS + Motion
std::vector<Modality> group_members(Group g);

/// Encoders, fusion tree, denoiser and the frozen text embedder.
class LoongXModel {
 public:
  explicit LoongXModel(const TrainConfig& cfg);

  const TrainConfig& config() const { return cfg_; }

  std::map<Modality, Var> encode(Tape& tape, const Record& r, bool train, Rng& rng);
  /// Mean over feature rows of each member embedding, averaged over the
  /// group's members: [1 x D].
  static Var group_embedding(const std::map<Modality, Var>& enc, Group g);
  /// Fused latent [2C x L] conditioning the denoiser.
  Var condition(Tape& tape, const Record& r, bool train, Rng& rng);
  /// Evaluation-mode condition value; absent when the mode is None.
  std::optional<Tensor> condition_value(const Record& r);
  /// Samples an edited image for the record's source.
  Tensor edit(const Record& r, const diffusion::SamplerConfig& sampler, Rng& rng);

  ParamList encoder_params();
  ParamList params();
  /// Re-applies encoder parameter constraints after an update.
  void project();

  diffusion::Denoiser& denoiser() { return denoiser_; }
  TextEmbedder& text() { return text_; }
  const diffusion::Schedule& schedule() const { return sched_; }

  void save(Checkpoint& ck);
  /// Throws DataError when a parameter is missing or has the wrong shape.
  void load(const Checkpoint& ck);

 private:
  TrainConfig cfg_;
  diffusion::Schedule sched_;
  TextEmbedder text_;
  std::map<Modality, cs3::CS3Encoder> encoders_;
  dgf::FusionNet fusion_;
  diffusion::Denoiser denoiser_;
};

}  // namespace loongx::train
