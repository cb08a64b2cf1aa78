#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>

#include "loongx/dgf/dgf.h"
#include "loongx/sigproc/recording.h"

namespace loongx::dgf {

struct FusionConfig {
  std::size_t channels = 8;  // common C
  std::size_t length = 32;   // common L
  DGFConfig block;

  void validate() const;
  void apply_kv(const KeyValues& kv, const std::string& prefix);
};

/// Linear map [R x K] -> [C x L]: W_c . X . W_l.
class Projection {
 public:
  Projection() = default;
  Projection(const Shape& in, std::size_t channels, std::size_t length, const std::string& prefix, Rng& rng);
  Var forward(Tape& tape, Var x);
  ParamList params();

 private:
  Parameter wc_, wl_;
};

/// Encoder outputs for one sample. Invalid Vars mark absent modalities and
/// enter the tree as zeros. `prompt` is a token matrix [n x D].
struct FusionInputs {
  std::map<sigproc::Modality, Var> embeddings;
  std::optional<Var> prompt;
};

/// Pairwise fusion tree: (EEG, PPG) and (fNIRS, Motion) fuse first; the
/// first result then fuses with the full-length prompt and the second with
/// the pooled prompt broadcast over rows. The two final latents are stacked.
class FusionNet {
 public:
  static constexpr std::size_t kStages = 4;

  struct Output {
    Var latent;                 // [2C x L]
    std::vector<int> mask;      // 2C entries
    std::array<FusedLatent, kStages> stages;
  };

  FusionNet() = default;
  /// `shapes` gives the embedding shape of each modality; embeddings of equal
  /// shape share one projection.
  FusionNet(const FusionConfig& cfg, const std::map<sigproc::Modality, Shape>& shapes, std::size_t prompt_dim,
            const std::string& prefix, Rng& rng);

  Output forward(Tape& tape, const FusionInputs& in);
  ParamList params();

  const FusionConfig& config() const { return cfg_; }
  Shape latent_shape() const { return {2 * cfg_.channels, cfg_.length}; }
  DGFBlock& stage(std::size_t i) { return blocks_.at(i); }

 private:
  Var project(Tape& tape, sigproc::Modality m, const FusionInputs& in);

  FusionConfig cfg_;
  std::map<sigproc::Modality, Shape> shapes_;
  std::map<Shape, Projection> proj_;
  Parameter prompt_w_;
  std::array<DGFBlock, kStages> blocks_;
};

}  // namespace loongx::dgf
