#pragma once

#include <map>
#include <string>
#include <vector>

#include "loongx/cs3/s3m.h"
#include "loongx/sigproc/recording.h"

namespace loongx::cs3 {

struct CS3Config {
  std::size_t C = 4;          // input channels
  std::size_t N = 5;          // pyramid depth
  std::size_t d = 64;         // base scale; level i pools to d * 2^i
  std::size_t L = 8192;       // unified input length
  std::size_t d_m = 128;      // temporal stream pooled length
  std::size_t d_p = 64;       // channel stream pooled length
  std::size_t d_prime = 256;  // feature width
  std::size_t C_prime = 16;   // feature rows
  std::size_t state_dim = 16;
  double dropout = 0.1;

  std::vector<std::size_t> pyramid_scales() const;
  /// Sum of pyramid scales.
  std::size_t pyramid_width() const;
  /// L' = d_m + d_p + pyramid_width().
  std::size_t aggregate_width() const;
  /// Throws InvalidConfig on zero dims. Returns warnings, e.g. when the largest
  /// pyramid scale exceeds L and pooling falls back to replication.
  std::vector<std::string> validate() const;

  /// Reads "<prefix>.<field>" keys, leaving absent fields unchanged.
  void apply_kv(const std::map<std::string, std::string>& kv, const std::string& prefix);
};

/// Defaults per modality before any config override.
CS3Config default_config(sigproc::Modality m);

/// P = concat_i adaptive_avg_pool(S, d * 2^i), i = 1..N, along length.
Var pyramid_encode(Var s, const CS3Config& cfg);
Tensor pyramid_encode(const Tensor& s, const CS3Config& cfg);

struct CrossStreams {
  Var z1;  // [C x d_m]
  Var z2;  // [C x d_p]
};

/// Output of the encoder, tagged with the modality it came from.
struct FeatureEmbedding {
  sigproc::Modality modality;
  Var values;  // [C' x d']
};

/// Cross-scale state-space encoder for one modality.
class CS3Encoder {
 public:
  CS3Encoder() = default;
  CS3Encoder(const CS3Config& cfg, const std::string& prefix, Rng& rng);

  const CS3Config& config() const { return cfg_; }

  /// Z1 = pool(S3M1(S), d_m) over time. Z2: S3M2 scans the permuted L x C
  /// matrix along the channel axis with one parameter row shared by every
  /// time position; the result is permuted back to C x L and pooled to d_p.
  CrossStreams cross_encode(Tape& tape, Var s);

  /// ANP: X [C x L'] -> linear over length to d' -> LayerNorm(affine) -> ReLU
  /// -> dropout -> linear over channels to C' rows.
  Var aggregate(Tape& tape, Var z1, Var p, Var z2, bool train, Rng& rng);

  /// Full encoder on a prepared C x L signal.
  Var forward(Tape& tape, const Tensor& s, bool train, Rng& rng);

  ParamList params();
  /// Re-clamp step sizes after an optimizer update.
  void project();

  S3MBlock& temporal() { return s1_; }
  S3MBlock& channel() { return s2_; }

 private:
  CS3Config cfg_;
  S3MBlock s1_, s2_;
  Parameter w1_, b1_, ln_g_, ln_b_, w2_, b2_;
};

}  // namespace loongx::cs3
