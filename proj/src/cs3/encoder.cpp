#include "loongx/cs3/encoder.h"

#include <cmath>

#include "loongx/numerics/errors.h"
#include "loongx/numerics/io.h"
#include "loongx/numerics/ops.h"

namespace loongx::cs3 {

std::vector<std::size_t> CS3Config::pyramid_scales() const {
  std::vector<std::size_t> s;
  for (std::size_t i = 1; i <= N; ++i) s.push_back(d << i);
  return s;
}

std::size_t CS3Config::pyramid_width() const {
  std::size_t w = 0;
  for (auto s : pyramid_scales()) w += s;
  return w;
}

std::size_t CS3Config::aggregate_width() const { return d_m + d_p + pyramid_width(); }

std::vector<std::string> CS3Config::validate() const {
  for (auto [name, v] : {std::pair{"C", C}, {"N", N}, {"d", d}, {"L", L}, {"d_m", d_m}, {"d_p", d_p},
                         {"d_prime", d_prime}, {"C_prime", C_prime}, {"state_dim", state_dim}}) {
    if (v == 0) throw InvalidConfig(std::string("cs3 config: ") + name + " must be >= 1");
  }
  if (N > 20) throw InvalidConfig("cs3 config: N too large");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidConfig("cs3 config: dropout must lie in [0, 1)");
  std::vector<std::string> warnings;
  if ((d << N) > L) {
    warnings.push_back("largest pyramid scale " + std::to_string(d << N) + " exceeds L = " +
                       std::to_string(L) + "; pooling replicates samples");
  }
  if (d_m > L || d_p > L) warnings.push_back("stream pooled length exceeds L; pooling replicates samples");
  return warnings;
}

void CS3Config::apply_kv(const std::map<std::string, std::string>& kv, const std::string& prefix) {
  const std::string p = prefix + ".";
  kv_read(kv, p + "C", C);
  kv_read(kv, p + "N", N);
  kv_read(kv, p + "d", d);
  kv_read(kv, p + "L", L);
  kv_read(kv, p + "d_m", d_m);
  kv_read(kv, p + "d_p", d_p);
  kv_read(kv, p + "d_prime", d_prime);
  kv_read(kv, p + "C_prime", C_prime);
  kv_read(kv, p + "state_dim", state_dim);
  kv_read(kv, p + "dropout", dropout);
}

CS3Config default_config(sigproc::Modality m) {
  CS3Config c;
  switch (m) {
    case sigproc::Modality::EEG: c.C = 4; c.N = 5; c.d = 64; c.L = 8192; break;
    case sigproc::Modality::fNIRS: c.C = 6; c.N = 4; c.d = 32; c.L = 512; break;
    case sigproc::Modality::PPG: c.C = 2; c.N = 3; c.d = 32; c.L = 256; break;
    case sigproc::Modality::Motion: c.C = 6; c.N = 3; c.d = 16; c.L = 128; break;
  }
  return c;
}

Var pyramid_encode(Var s, const CS3Config& cfg) {
  std::vector<Var> levels;
  for (auto sc : cfg.pyramid_scales()) levels.push_back(adaptive_avg_pool(s, sc));
  return concat(levels, 1);
}

Tensor pyramid_encode(const Tensor& s, const CS3Config& cfg) {
  Tape t(false);
  return pyramid_encode(t.constant(s), cfg).value();
}

CS3Encoder::CS3Encoder(const CS3Config& cfg, const std::string& prefix, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  s1_ = S3MBlock(prefix + "s3m1.", cfg.C, cfg.state_dim, rng);
  s2_ = S3MBlock(prefix + "s3m2.", 1, cfg.state_dim, rng);
  const std::size_t lp = cfg.aggregate_width();
  w1_ = Parameter(prefix + "anp.w1", Tensor::randn({lp, cfg.d_prime}, rng, 1.0 / std::sqrt(static_cast<double>(lp))));
  b1_ = Parameter(prefix + "anp.b1", Tensor::zeros({1, cfg.d_prime}));
  ln_g_ = Parameter(prefix + "anp.ln_gamma", Tensor::ones({1, cfg.d_prime}));
  ln_b_ = Parameter(prefix + "anp.ln_beta", Tensor::zeros({1, cfg.d_prime}));
  w2_ = Parameter(prefix + "anp.w2", Tensor::randn({cfg.C_prime, cfg.C}, rng, 1.0 / std::sqrt(static_cast<double>(cfg.C))));
  b2_ = Parameter(prefix + "anp.b2", Tensor::zeros({cfg.C_prime, 1}));
}

CrossStreams CS3Encoder::cross_encode(Tape& tape, Var s) {
  if (s.value().rank() != 2 || s.dim(0) != cfg_.C) {
    throw ShapeError("cs3: expected " + std::to_string(cfg_.C) + " x L input, got " + shape_str(s.shape()));
  }
  Var z1 = adaptive_avg_pool(s1_.scan(tape, s), cfg_.d_m);
  Var s_pm = transpose(s);                 // L x C: each time step is a row
  Var z2 = transpose(s2_.scan(tape, s_pm));  // scan over channels, back to C x L
  return {z1, adaptive_avg_pool(z2, cfg_.d_p)};
}

Var CS3Encoder::aggregate(Tape& tape, Var z1, Var p, Var z2, bool train, Rng& rng) {
  if (z1.dim(0) != p.dim(0) || z2.dim(0) != p.dim(0)) throw ShapeError("cs3 aggregate: channel counts differ");
  Var x = concat({z1, p, z2}, 1);
  if (x.dim(1) != cfg_.aggregate_width()) throw ShapeError("cs3 aggregate: width mismatch");
  Var h = linear(x, tape.param(w1_), tape.param(b1_));
  h = add(mul(layer_norm(h), tape.param(ln_g_)), tape.param(ln_b_));
  h = dropout(relu(h), cfg_.dropout, train, rng);
  return add(matmul(tape.param(w2_), h), tape.param(b2_));
}

Var CS3Encoder::forward(Tape& tape, const Tensor& s, bool train, Rng& rng) {
  Var sv = tape.constant(s);
  const auto streams = cross_encode(tape, sv);
  return aggregate(tape, streams.z1, pyramid_encode(sv, cfg_), streams.z2, train, rng);
}

ParamList CS3Encoder::params() {
  ParamList out = s1_.params();
  for (auto* p : s2_.params()) out.push_back(p);
  for (auto* p : {&w1_, &b1_, &ln_g_, &ln_b_, &w2_, &b2_}) out.push_back(p);
  return out;
}

void CS3Encoder::project() {
  s1_.project();
  s2_.project();
}

}  // namespace loongx::cs3
