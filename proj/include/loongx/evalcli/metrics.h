#pragma once

#include <string>
#include <utility>
#include <vector>

#include "loongx/numerics/tensor.h"
#include "loongx/train/text.h"

namespace loongx::evalcli {

/// (mean |pred - gt|, mean (pred - gt)^2). Throws ShapeError on mismatch.
std::pair<double, double> metric_l1_l2(const Tensor& pred, const Tensor& gt);

/// Cosine similarity of two equal-length vectors; 0 when either is zero.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

struct ProxyScores {
  double clip_i = 0.0;  // semantic proxy
  double dino = 0.0;    // structural proxy
  double clip_t = 0.0;  // text-image proxy
};

/// Fixed seeded stand-ins for the pretrained image and text embedders. Scores
/// are meaningful for relative comparisons only.
class ProxyEmbedders {
 public:
  static constexpr std::uint64_t kSemanticSeed = 0x5e01;
  static constexpr std::uint64_t kStructuralSeed = 0x5e02;
  static constexpr std::uint64_t kJointSeed = 0x5e03;
  static constexpr std::size_t kPool = 8;   // semantic grid side
  static constexpr std::size_t kPatch = 4;  // structural patch side

  /// Images are [3 x 32 x 32].
  ProxyEmbedders();

  /// Linear: 8x8 average pool then a Gaussian projection to 512 dims.
  std::vector<double> semantic(const Tensor& img) const;
  /// Per 4x4 patch: remove the per-channel patch mean, shared projection to
  /// 8 dims, tanh; concatenated over patches.
  std::vector<double> structural(const Tensor& img) const;
  /// Pooled image projected into the text embedder's space.
  std::vector<double> joint_image(const Tensor& img) const;
  std::vector<double> joint_text(const std::vector<std::string>& tokens) const;

  ProxyScores score(const Tensor& pred, const Tensor& gt, const std::vector<std::string>& tokens) const;

 private:
  Tensor semantic_w_, patch_w_, joint_w_;
  train::TextEmbedder text_;
};

/// [3 x H x W] -> 3 * side * side block means, channel-major.
std::vector<double> pool_image(const Tensor& img, std::size_t side);

}  // namespace loongx::evalcli
