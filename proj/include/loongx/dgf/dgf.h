#pragma once

#include <optional>
#include <string>
#include <vector>

#include "loongx/numerics/io.h"
#include "loongx/numerics/tape.h"

namespace loongx::dgf {

constexpr double kStatEps = 1e-3;

/// Per-channel and whole-tensor statistics of a C x L tensor, each [C x 1].
struct FusionStats {
  Var mu_inst, sigma_inst, mu_layer, sigma_layer;
};

FusionStats compute_stats(Var x, double eps = kStatEps);

struct DGFConfig {
  std::size_t gate_hidden = 8;
  std::size_t gate_kernel = 3;
  std::size_t psi_hidden = 32;
  double rho = 0.7;

  void validate() const;
  void apply_kv(const KeyValues& kv, const std::string& prefix);
};

/// Conv-ReLU-Conv-sigmoid over the channel axis. Input is the condition's
/// per-channel summary [2 x C] (mean row, std row); output g is [C x 1].
class GateNetwork {
 public:
  GateNetwork() = default;
  GateNetwork(const DGFConfig& cfg, const std::string& prefix, Rng& rng);
  Var forward(Tape& tape, Var cond);
  ParamList params();

 private:
  Parameter w1_, b1_, w2_, b2_;
};

/// mu = g*mu_inst + (1-g)*mu_layer, sigma likewise.
struct MixResult {
  Var x_hat;  // (x - mu) / sigma
  Var gate, mu, sigma;
  FusionStats stats;
};

MixResult gated_mix(Var x, Var gate);
MixResult gated_mix(Var x, Var cond, GateNetwork& gate);

/// MLP on the per-channel mean of the condition: [1 x C] -> hidden -> [1 x 2C],
/// split into gamma and beta. The last layer starts at zero.
class AffineNetwork {
 public:
  AffineNetwork() = default;
  AffineNetwork(std::size_t channels, const DGFConfig& cfg, const std::string& prefix, Rng& rng);
  /// Returns (gamma, beta), each [C x 1].
  std::pair<Var, Var> forward(Tape& tape, Var cond);
  ParamList params();
  Parameter& last_weight() { return w2_; }
  Parameter& last_bias() { return b2_; }

 private:
  std::size_t channels_ = 0;
  Parameter w1_, b1_, w2_, b2_;
};

/// H = (1 + gamma) * x_hat + beta, coefficients broadcast over length.
Var modulate(Var x_hat, Var gamma, Var beta);

/// Number of kept channels floor(rho * C). Throws InvalidConfig when it is 0
/// or when rho lies outside (0, 1].
std::size_t keep_count(std::size_t channels, double rho);

/// Scores s_c = mean_t |cond[c, t]|; returns the kept channel indices of the
/// top floor(rho * C) scores, ties going to the lower index, in ascending order.
std::vector<std::size_t> top_channels(const Tensor& cond, double rho);

struct FusedLatent {
  Var values;                // masked H, [C x L]; dropped rows are exactly zero
  Var output;                // values plus the residual prompt, when one is given
  std::vector<int> mask;     // 1 = kept
  Var gamma, beta;           // [C x 1]
  Var gate;                  // [C x 1]
};

/// Zeroes the rows of h outside top_channels(cond, rho).
FusedLatent dynamic_mask(Var h, const Tensor& cond, double rho);

/// One gated fusion of a content and a condition tensor of the same C x L
/// shape, followed by the optional residual prompt add.
class DGFBlock {
 public:
  DGFBlock() = default;
  DGFBlock(std::size_t channels, const DGFConfig& cfg, const std::string& prefix, Rng& rng);

  /// `output` is masked H plus `prompt` (broadcast over rows or full) when given.
  FusedLatent forward(Tape& tape, Var content, Var condition, std::optional<Var> prompt = std::nullopt);
  ParamList params();

  GateNetwork& gate() { return gate_; }
  AffineNetwork& affine() { return psi_; }
  const DGFConfig& config() const { return cfg_; }

 private:
  DGFConfig cfg_;
  GateNetwork gate_;
  AffineNetwork psi_;
};

}  // namespace loongx::dgf
