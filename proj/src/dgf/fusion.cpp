#include "loongx/dgf/fusion.h"

#include <cmath>

#include "loongx/numerics/errors.h"
#include "loongx/numerics/ops.h"

namespace loongx::dgf {

using sigproc::Modality;

void FusionConfig::validate() const {
  if (channels == 0 || length == 0) throw InvalidConfig("fusion config: channels and length must be >= 1");
  block.validate();
  keep_count(channels, block.rho);
}

void FusionConfig::apply_kv(const KeyValues& kv, const std::string& prefix) {
  kv_read(kv, prefix + ".channels", channels);
  kv_read(kv, prefix + ".length", length);
  block.apply_kv(kv, prefix);
}

Projection::Projection(const Shape& in, std::size_t channels, std::size_t length, const std::string& prefix,
                       Rng& rng) {
  if (in.size() != 2) throw ShapeError("projection: input must be rank 2, got " + shape_str(in));
  wc_ = Parameter(prefix + "wc", Tensor::randn({channels, in[0]}, rng, 1.0 / std::sqrt(double(in[0]))));
  wl_ = Parameter(prefix + "wl", Tensor::randn({in[1], length}, rng, 1.0 / std::sqrt(double(in[1]))));
}

Var Projection::forward(Tape& tape, Var x) { return matmul(matmul(tape.param(wc_), x), tape.param(wl_)); }

ParamList Projection::params() { return {&wc_, &wl_}; }

FusionNet::FusionNet(const FusionConfig& cfg, const std::map<Modality, Shape>& shapes, std::size_t prompt_dim,
                     const std::string& prefix, Rng& rng)
    : cfg_(cfg), shapes_(shapes) {
  cfg_.validate();
  for (auto m : sigproc::kModalities) {
    if (!shapes_.count(m)) throw InvalidConfig("fusion: no embedding shape for " + sigproc::modality_name(m));
  }
  for (const auto& [m, s] : shapes_) {
    if (proj_.count(s)) continue;
    proj_.emplace(s, Projection(s, cfg_.channels, cfg_.length, prefix + "proj." + shape_str(s) + ".", rng));
  }
  prompt_w_ = Parameter(prefix + "prompt.w",
                        Tensor::randn({prompt_dim, cfg_.length}, rng, 1.0 / std::sqrt(double(prompt_dim))));
  for (std::size_t i = 0; i < kStages; ++i) {
    blocks_[i] = DGFBlock(cfg_.channels, cfg_.block, prefix + "dgf" + std::to_string(i + 1) + ".", rng);
  }
}

Var FusionNet::project(Tape& tape, Modality m, const FusionInputs& in) {
  const auto it = in.embeddings.find(m);
  if (it == in.embeddings.end() || !it->second.valid()) {
    return tape.constant(Tensor::zeros({cfg_.channels, cfg_.length}));
  }
  const Shape& expect = shapes_.at(m);
  if (it->second.shape() != expect) {
    throw ShapeError("fusion: " + sigproc::modality_name(m) + " embedding is " + shape_str(it->second.shape()) +
                     ", expected " + shape_str(expect));
  }
  return proj_.at(expect).forward(tape, it->second);
}

FusionNet::Output FusionNet::forward(Tape& tape, const FusionInputs& in) {
  const std::size_t C = cfg_.channels, L = cfg_.length;
  Var eeg = project(tape, Modality::EEG, in), ppg = project(tape, Modality::PPG, in);
  Var fnirs = project(tape, Modality::fNIRS, in), motion = project(tape, Modality::Motion, in);

  Var full_prompt, pooled_prompt;
  if (in.prompt) {
    Var tokens = *in.prompt;
    if (tokens.shape().size() != 2 || tokens.dim(1) != prompt_w_.value.dim(0)) {
      throw ShapeError("fusion: prompt must be [n x " + std::to_string(prompt_w_.value.dim(0)) + "], got " +
                       shape_str(tokens.shape()));
    }
    Var w = tape.param(prompt_w_);
    // Token axis pooled to C rows, then each row mapped D -> L.
    Var rows = transpose(adaptive_avg_pool(transpose(tokens), C));
    full_prompt = matmul(rows, w);
    Var pooled = matmul(mean_axis(tokens, 0), w);
    pooled_prompt = mul(tape.constant(Tensor({C, 1}, 1.0)), pooled);
  } else {
    full_prompt = pooled_prompt = tape.constant(Tensor::zeros({C, L}));
  }
  std::optional<Var> residual_full, residual_pooled;
  if (in.prompt) {
    residual_full = full_prompt;
    residual_pooled = pooled_prompt;
  }

  Output out;
  out.stages[0] = blocks_[0].forward(tape, eeg, ppg);
  out.stages[1] = blocks_[1].forward(tape, fnirs, motion);
  out.stages[2] = blocks_[2].forward(tape, out.stages[0].output, full_prompt, residual_full);
  out.stages[3] = blocks_[3].forward(tape, out.stages[1].output, pooled_prompt, residual_pooled);
  out.latent = concat({out.stages[2].output, out.stages[3].output}, 0);
  out.mask = out.stages[2].mask;
  out.mask.insert(out.mask.end(), out.stages[3].mask.begin(), out.stages[3].mask.end());
  return out;
}

ParamList FusionNet::params() {
  ParamList p;
  for (auto& [s, proj] : proj_) {
    for (auto* q : proj.params()) p.push_back(q);
  }
  p.push_back(&prompt_w_);
  for (auto& b : blocks_) {
    for (auto* q : b.params()) p.push_back(q);
  }
  return p;
}

}  // namespace loongx::dgf
