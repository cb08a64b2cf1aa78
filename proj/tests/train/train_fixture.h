#pragma once

#include <filesystem>

#include "loongx/datasynth/corpus.h"
#include "loongx/train/loop.h"
#include "test_util.h"

namespace loongx::testing {

/// Small encoders, fusion and denoiser so a full step takes milliseconds.
inline train::TrainConfig tiny_config() {
  train::TrainConfig c;
  c.text.dim = 16;
  c.text.buckets = 64;
  for (auto& [m, e] : c.encoders) {
    e.N = 1;
    e.d = 4;
    e.d_m = 8;
    e.d_p = 4;
    e.d_prime = 16;
    e.C_prime = 2;
    e.state_dim = 2;
    e.dropout = 0.0;
  }
  c.encoders[sigproc::Modality::EEG].L = 64;
  c.encoders[sigproc::Modality::fNIRS].L = 32;
  c.encoders[sigproc::Modality::PPG].L = 32;
  c.encoders[sigproc::Modality::Motion].L = 32;
  c.fusion.channels = 2;
  c.fusion.length = 4;
  c.fusion.block.gate_hidden = 2;
  c.fusion.block.psi_hidden = 4;
  c.denoiser.hidden = 8;
  c.denoiser.embed = 8;
  c.denoiser.time_freqs = 2;
  c.denoiser.pos_freqs = 1;
  c.denoiser.patch = 1;
  c.schedule = diffusion::ScheduleKind::RectifiedFlow;
  c.sampler.steps = 2;
  c.sampler.guidance = 1.0;
  c.pretrain = {10, 8, 3e-3, 0.01};
  c.finetune = {2, 4, 1e-3, 0.01};
  c.eval_samples = 2;
  return c;
}

/// Corpus of `n` samples under the system temp dir, built once per tag.
inline std::filesystem::path tiny_corpus(const std::string& tag, std::size_t n) {
  const auto root = std::filesystem::temp_directory_path() / ("loongx_corpus_" + tag);
  if (!std::filesystem::exists(root / "manifest.tsv")) {
    datasynth::CorpusConfig cc;
    cc.n = n;
    cc.seed = 5;
    datasynth::build_corpus(root, cc);
  }
  return root;
}

}  // namespace loongx::testing
