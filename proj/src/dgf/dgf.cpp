#include "loongx/dgf/dgf.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "loongx/numerics/errors.h"
#include "loongx/numerics/ops.h"

namespace loongx::dgf {

namespace {

void require_matrix(const Var& x, const char* what) {
  if (x.shape().size() != 2) throw ShapeError(std::string(what) + ": expected a C x L matrix, got " + shape_str(x.shape()));
}

Var ones_column(Tape& tape, std::size_t c) { return tape.constant(Tensor({c, 1}, 1.0)); }

}  // namespace

FusionStats compute_stats(Var x, double eps) {
  require_matrix(x, "compute_stats");
  Tape& t = x.tape();
  const std::size_t C = x.dim(0), L = x.dim(1);
  FusionStats s;
  s.mu_inst = mean_axis(x, 1);
  s.sigma_inst = sqrt(add_scalar(var_axis(x, 1), eps));
  Var flat = reshape(x, {1, C * L});
  s.mu_layer = mul(ones_column(t, C), mean_axis(flat, 1));
  s.sigma_layer = mul(ones_column(t, C), sqrt(add_scalar(var_axis(flat, 1), eps)));
  return s;
}

void DGFConfig::validate() const {
  if (gate_hidden == 0 || psi_hidden == 0) throw InvalidConfig("dgf config: hidden widths must be >= 1");
  if (gate_kernel % 2 == 0) throw InvalidConfig("dgf config: gate_kernel must be odd");
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidConfig("dgf config: rho must lie in (0, 1]");
}

void DGFConfig::apply_kv(const KeyValues& kv, const std::string& prefix) {
  const std::string p = prefix + ".";
  kv_read(kv, p + "gate_hidden", gate_hidden);
  kv_read(kv, p + "gate_kernel", gate_kernel);
  kv_read(kv, p + "psi_hidden", psi_hidden);
  kv_read(kv, p + "rho", rho);
}

GateNetwork::GateNetwork(const DGFConfig& cfg, const std::string& prefix, Rng& rng) {
  const std::size_t h = cfg.gate_hidden, k = cfg.gate_kernel;
  w1_ = Parameter(prefix + "gate.w1", Tensor::randn({h, 2, k}, rng, 1.0 / std::sqrt(2.0 * k)));
  b1_ = Parameter(prefix + "gate.b1", Tensor::zeros({h}));
  w2_ = Parameter(prefix + "gate.w2", Tensor::randn({1, h, k}, rng, 1.0 / std::sqrt(double(h * k))));
  b2_ = Parameter(prefix + "gate.b2", Tensor::zeros({1}));
}

Var GateNetwork::forward(Tape& tape, Var cond) {
  require_matrix(cond, "gate");
  const std::size_t C = cond.dim(0);
  // Summary rows: per-channel mean and population std, as a 2-channel sequence over C.
  Var mean_row = reshape(mean_axis(cond, 1), {1, C});
  Var std_row = reshape(sqrt(add_scalar(var_axis(cond, 1), kStatEps)), {1, C});
  Var summary = concat({mean_row, std_row}, 0);
  Var h = relu(conv1d(summary, tape.param(w1_), tape.param(b1_)));
  Var g = sigmoid(conv1d(h, tape.param(w2_), tape.param(b2_)));
  return reshape(g, {C, 1});
}

ParamList GateNetwork::params() { return {&w1_, &b1_, &w2_, &b2_}; }

MixResult gated_mix(Var x, Var gate) {
  require_matrix(x, "gated_mix");
  if (gate.shape() != Shape{x.dim(0), 1}) {
    throw ShapeError("gated_mix: gate must be [C x 1], got " + shape_str(gate.shape()));
  }
  MixResult r;
  r.stats = compute_stats(x);
  r.gate = gate;
  Var one_minus = add_scalar(neg(gate), 1.0);
  r.mu = add(mul(gate, r.stats.mu_inst), mul(one_minus, r.stats.mu_layer));
  r.sigma = add(mul(gate, r.stats.sigma_inst), mul(one_minus, r.stats.sigma_layer));
  r.x_hat = div(sub(x, r.mu), r.sigma);
  return r;
}

MixResult gated_mix(Var x, Var cond, GateNetwork& gate) {
  if (x.shape() != cond.shape()) {
    throw ShapeError("gated_mix: content " + shape_str(x.shape()) + " vs condition " + shape_str(cond.shape()));
  }
  return gated_mix(x, gate.forward(x.tape(), cond));
}

AffineNetwork::AffineNetwork(std::size_t channels, const DGFConfig& cfg, const std::string& prefix, Rng& rng)
    : channels_(channels) {
  const std::size_t h = cfg.psi_hidden;
  w1_ = Parameter(prefix + "psi.w1", Tensor::randn({channels, h}, rng, 1.0 / std::sqrt(double(channels))));
  b1_ = Parameter(prefix + "psi.b1", Tensor::zeros({1, h}));
  w2_ = Parameter(prefix + "psi.w2", Tensor::zeros({h, 2 * channels}));
  b2_ = Parameter(prefix + "psi.b2", Tensor::zeros({1, 2 * channels}));
}

std::pair<Var, Var> AffineNetwork::forward(Tape& tape, Var cond) {
  require_matrix(cond, "affine");
  const std::size_t C = channels_;
  if (cond.dim(0) != C) throw ShapeError("affine: expected " + std::to_string(C) + " channels, got " + shape_str(cond.shape()));
  Var ybar = reshape(mean_axis(cond, 1), {1, C});
  Var h = relu(linear(ybar, tape.param(w1_), tape.param(b1_)));
  Var out = linear(h, tape.param(w2_), tape.param(b2_));
  Var gamma = reshape(slice(out, 1, 0, C), {C, 1});
  Var beta = reshape(slice(out, 1, C, C), {C, 1});
  return {gamma, beta};
}

ParamList AffineNetwork::params() { return {&w1_, &b1_, &w2_, &b2_}; }

Var modulate(Var x_hat, Var gamma, Var beta) { return add(mul(add_scalar(gamma, 1.0), x_hat), beta); }

std::size_t keep_count(std::size_t channels, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidConfig("dynamic mask: rho must lie in (0, 1]");
  // The small slack keeps products like 0.7 * 10 from rounding down to 6.
  const auto k = static_cast<std::size_t>(std::floor(rho * double(channels) + 1e-9));
  if (k == 0) {
    throw InvalidConfig("dynamic mask: rho = " + fmt_double(rho) + " keeps no channels out of " +
                        std::to_string(channels));
  }
  return k;
}

std::vector<std::size_t> top_channels(const Tensor& cond, double rho) {
  if (cond.rank() != 2) throw ShapeError("top_channels: expected a C x L matrix");
  const std::size_t C = cond.dim(0), L = cond.dim(1);
  const std::size_t k = keep_count(C, rho);
  std::vector<double> score(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < L; ++t) score[c] += std::abs(cond.at(c, t));
    score[c] /= double(L);
  }
  std::vector<std::size_t> idx(C);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

FusedLatent dynamic_mask(Var h, const Tensor& cond, double rho) {
  require_matrix(h, "dynamic_mask");
  if (cond.shape() != h.shape()) {
    throw ShapeError("dynamic_mask: values " + shape_str(h.shape()) + " vs condition " + shape_str(cond.shape()));
  }
  const std::size_t C = h.dim(0);
  FusedLatent out;
  out.mask.assign(C, 0);
  for (auto c : top_channels(cond, rho)) out.mask[c] = 1;
  if (std::all_of(out.mask.begin(), out.mask.end(), [](int m) { return m == 1; })) {
    out.values = out.output = h;
    return out;
  }
  Tensor m({C, 1});
  for (std::size_t c = 0; c < C; ++c) m[c] = out.mask[c];
  out.values = out.output = mul(h, h.tape().constant(std::move(m)));
  return out;
}

DGFBlock::DGFBlock(std::size_t channels, const DGFConfig& cfg, const std::string& prefix, Rng& rng)
    : cfg_(cfg), gate_(cfg, prefix, rng), psi_(channels, cfg, prefix, rng) {
  cfg_.validate();
}

FusedLatent DGFBlock::forward(Tape& tape, Var content, Var condition, std::optional<Var> prompt) {
  MixResult mix = gated_mix(content, condition, gate_);
  auto [gamma, beta] = psi_.forward(tape, condition);
  FusedLatent out = dynamic_mask(modulate(mix.x_hat, gamma, beta), condition.value(), cfg_.rho);
  out.gamma = gamma;
  out.beta = beta;
  out.gate = mix.gate;
  out.output = prompt ? add(out.values, *prompt) : out.values;
  return out;
}

ParamList DGFBlock::params() {
  ParamList p = gate_.params();
  for (auto* q : psi_.params()) p.push_back(q);
  return p;
}

}  // namespace loongx::dgf
