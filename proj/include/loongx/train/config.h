#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "loongx/cs3/encoder.h"
#include "loongx/dgf/fusion.h"
#include "loongx/diffusion/sampler.h"
#include "loongx/train/text.h"

namespace loongx::train {

using sigproc::Modality;

/// What the denoiser is conditioned on: the fused neural latent, nothing
/// (null token), or the fused latent of random-noise signals.
enum class ConditionMode { Signals, None, Noise };
ConditionMode parse_condition(const std::string& s);
std::string condition_name(ConditionMode m);

struct PhaseConfig {
  std::size_t epochs = 1;
  std::size_t batch = 8;
  double lr = 3e-4;
  double weight_decay = 0.01;
};

/// Every tunable constant of pretraining and finetuning. Read from a
/// key=value file; `to_kv` writes the complete resolved set.
struct TrainConfig {
  std::uint64_t seed = 1;
  std::map<Modality, cs3::CS3Config> encoders;
  dgf::FusionConfig fusion;
  diffusion::DenoiserConfig denoiser;
  diffusion::ScheduleKind schedule = diffusion::ScheduleKind::VParamCosine;
  TextEmbedderConfig text;
  bool use_text = false;
  ConditionMode condition = ConditionMode::Signals;
  double tau = 0.07;
  PhaseConfig pretrain{30, 32, 3e-4, 0.01};
  PhaseConfig finetune{10, 8, 1e-4, 0.01};
  diffusion::LossOptions loss;
  diffusion::SamplerConfig sampler;
  /// Held-out samples scored at each periodic evaluation; 0 scores all.
  std::size_t eval_samples = 32;
  /// Steps between divergence checks; 0 checks once per epoch.
  std::size_t eval_every = 0;
  double divergence_factor = 10.0;
  std::size_t divergence_patience = 3;

  TrainConfig();
  void validate() const;
  void apply_kv(const KeyValues& kv);
  KeyValues to_kv() const;
  std::uint64_t hash() const;
};

TrainConfig load_train_config(const std::filesystem::path& path);

}  // namespace loongx::train
