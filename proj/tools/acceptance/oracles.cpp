#include <algorithm>
#include <cmath>
#include <numbers>

#include "acceptance.h"
#include "loongx/cs3/s3m.h"
#include "loongx/datasynth/corpus.h"
#include "loongx/dgf/dgf.h"
#include "loongx/diffusion/sampler.h"
#include "loongx/numerics/io.h"
#include "loongx/numerics/ops.h"
#include "loongx/sigproc/filter.h"
#include "loongx/sigproc/hemo.h"
#include "loongx/train/loop.h"
#include "loongx/train/ntxent.h"

namespace loongx::acceptance {

namespace {

constexpr double kPi = std::numbers::pi;

// ---- S3M ----

Tensor naive_scan(const Tensor& x, const cs3::DiscreteS3M& p) {
  const std::size_t C = x.dim(0), L = x.dim(1), N = p.abar.dim(1);
  Tensor z({C, L});
  for (std::size_t ch = 0; ch < C; ++ch) {
    const std::size_t r = p.abar.dim(0) == 1 ? 0 : ch;
    std::vector<double> e(N, 0.0);
    for (std::size_t k = 0; k < L; ++k) {
      double out = p.d[r] * x.at(ch, k);
      for (std::size_t n = 0; n < N; ++n) {
        e[n] = p.abar.at(r, n) * e[n] + p.bbar.at(r, n) * x.at(ch, k);
        out += p.c.at(r, n) * e[n];
      }
      z.at(ch, k) = out;
    }
  }
  return z;
}

cs3::DiscreteS3M random_system(std::size_t rows, std::size_t n, Rng& rng) {
  return {Tensor::uniform({rows, n}, rng, -0.95, 0.95), Tensor::uniform({rows, n}, rng, -1, 1),
          Tensor::uniform({rows, n}, rng, -1, 1), Tensor::uniform({rows}, rng, -1, 1)};
}

double seconds_per_scan(const Tensor& x, const cs3::DiscreteS3M& p) {
  const Stopwatch sw;
  int reps = 0;
  double sink = 0.0;
  do {
    sink += discrete_scan(x, p)[0];
    ++reps;
  } while (sw.seconds() < 0.05);
  if (!std::isfinite(sink)) throw NonFiniteError("scan timing produced a non-finite value");
  return sw.seconds() / reps;
}

// ---- signals ----

sigproc::RawRecording tone(double f, double fs, double seconds, double amp, double offset) {
  const auto n = static_cast<std::size_t>(std::lround(fs * seconds));
  sigproc::RawRecording r;
  r.modality = sigproc::Modality::EEG;
  r.rate_hz = fs;
  r.samples = Tensor({1, n});
  for (std::size_t i = 0; i < n; ++i) r.samples[i] = offset + amp * std::sin(2.0 * kPi * f * double(i) / fs);
  return r;
}

// Magnitude of DFT bin k, scaled to the sinusoid amplitude.
double dft_bin_amplitude(const Tensor& x, double f, double fs) {
  const std::size_t n = x.numel();
  const double k = f * double(n) / fs;
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 2.0 * kPi * k * double(i) / double(n);
    re += x[i] * std::cos(a);
    im -= x[i] * std::sin(a);
  }
  return 2.0 * std::hypot(re, im) / double(n);
}

// ---- DGF ----

struct LoopStats {
  std::vector<double> mu, sigma;
  double mu_layer = 0.0, sigma_layer = 0.0;
};

LoopStats loop_stats(const Tensor& x) {
  const std::size_t C = x.dim(0), L = x.dim(1);
  LoopStats s;
  double total = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    double m = 0.0, v = 0.0;
    for (std::size_t t = 0; t < L; ++t) m += x.at(c, t);
    m /= double(L);
    for (std::size_t t = 0; t < L; ++t) v += (x.at(c, t) - m) * (x.at(c, t) - m);
    s.mu.push_back(m);
    s.sigma.push_back(std::sqrt(v / double(L) + dgf::kStatEps));
    total += m * double(L);
  }
  s.mu_layer = total / double(C * L);
  double v = 0.0;
  for (double e : x.data()) v += (e - s.mu_layer) * (e - s.mu_layer);
  s.sigma_layer = std::sqrt(v / double(C * L) + dgf::kStatEps);
  return s;
}

// ---- sampler ----

class StraightPathOracle : public diffusion::VelocityModel {
 public:
  StraightPathOracle(Tensor i0, Tensor eps) : v_(i0.shape()) {
    for (std::size_t i = 0; i < v_.numel(); ++i) v_[i] = eps[i] - i0[i];
  }
  Var velocity(Tape& tape, Var, const Tensor&, double, std::optional<Var>) override { return tape.constant(v_); }

 private:
  Tensor v_;
};

Tensor float_normal(const Shape& s, Rng& rng) {
  Tensor t(s);
  for (auto& v : t.data()) v = double(float(draw_normal(rng)));
  return t;
}

}  // namespace

Outcome s3m_oracle(const Context&) {
  constexpr double kTol = 1e-10, kLo = 1.6, kHi = 2.6;
  Rng rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t C = 1 + rng() % 4, L = 1 + rng() % 256, N = 1 + rng() % 8;
    const auto p = random_system(trial % 5 == 0 ? 1 : C, N, rng);
    const Tensor x = Tensor::uniform({C, L}, rng, -1, 1);
    worst = std::max(worst, max_abs_diff(discrete_scan(x, p), naive_scan(x, p)));
  }
  const auto p = random_system(4, 16, rng);
  bool ratios_ok = true;
  std::string ratios;
  for (std::size_t L = 4096; L <= 16384; L *= 2) {
    const Tensor a = Tensor::uniform({4, L}, rng, -1, 1), b = Tensor::uniform({4, 2 * L}, rng, -1, 1);
    std::vector<double> r;
    for (int run = 0; run < 5; ++run) r.push_back(seconds_per_scan(b, p) / seconds_per_scan(a, p));
    std::nth_element(r.begin(), r.begin() + 2, r.end());
    ratios_ok = ratios_ok && r[2] >= kLo && r[2] <= kHi;
    ratios += (ratios.empty() ? "" : ", ") + fixed(r[2], 2);
  }
  return {worst < kTol && ratios_ok, "50 instances max |scan - naive| " + sci(worst) +
                                         " < 1e-10; time(2L)/time(L) for L = 4096, 8192, 16384: " + ratios + " in [1.6, 2.6]"};
}

Outcome signal_contracts(const Context&) {
  const Stopwatch sw;
  // Notch: 10 s tones land exactly on DFT bins.
  const double fs = 250.0;
  const auto x50 = tone(50, fs, 10, 1.0, 0.0), x10 = tone(10, fs, 10, 1.0, 0.0);
  const double att50 = -20.0 * std::log10(dft_bin_amplitude(sigproc::notch(x50).samples, 50, fs) /
                                           dft_bin_amplitude(x50.samples, 50, fs));
  const double loss10 = -20.0 * std::log10(dft_bin_amplitude(sigproc::notch(x10).samples, 10, fs) /
                                            dft_bin_amplitude(x10.samples, 10, fs));
  // Band-pass on a pure offset.
  const double offset = 3.0;
  const auto dc = sigproc::bandpass(tone(10, fs, 4, 0.0, offset), 1, 80);
  double mean = 0.0;
  for (double v : dc.samples.data()) mean += v;
  mean /= double(dc.samples.numel());
  const double dc_residual = std::abs(mean) / offset;
  // MBLL round trip against the forward extinction map.
  Rng rng(6);
  double mbll_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    sigproc::Optics o;
    for (auto& row : o.extinction)
      for (auto& v : row) v = draw_uniform(rng, 0.1, 2.0);
    if (std::abs(o.extinction[0][0] * o.extinction[1][1] - o.extinction[0][1] * o.extinction[1][0]) < 0.05) continue;
    o.dpf = draw_uniform(rng, 3.0, 7.0);
    o.pathlength_mm = draw_uniform(rng, 10.0, 40.0);
    const Tensor a1 = Tensor::uniform({3, 16}, rng, -1, 1), a2 = Tensor::uniform({3, 16}, rng, -1, 1);
    const auto h = sigproc::mbll(a1, a2, o);
    const auto [b1, b2] = sigproc::forward_extinction(h.hbo, h.hbr, o);
    mbll_err = std::max({mbll_err, max_abs_diff(a1, b1), max_abs_diff(a2, b2)});
    for (std::size_t i = 0; i < h.hbt.numel(); ++i)
      mbll_err = std::max(mbll_err, std::abs(h.hbt[i] - h.hbo[i] - h.hbr[i]));
  }
  const double secs = sw.seconds();
  const bool pass = att50 >= 30.0 && loss10 <= 1.0 && dc_residual < 1e-3 && mbll_err < 1e-9 && secs < 60.0;
  return {pass, "notch 50 Hz -" + fixed(att50, 1) + " dB (>= 30), 10 Hz loss " + fixed(std::max(loss10, 0.0), 4) +
                    " dB (<= 1); band-pass DC residual " + sci(dc_residual) + " (< 1e-3); MBLL round trip " +
                    sci(mbll_err) + " (< 1e-9)"};
}

Outcome dgf_limits(const Context&) {
  constexpr double kTol = 1e-12;
  double inst = 0.0, layer = 0.0;
  bool identity = true, no_mask = true, oracle = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor x = uniform_tensor({5, 24}, seed, -4, 4);
    const auto o = loop_stats(x);
    Tape t(false);
    const Tensor g1 = dgf::gated_mix(t.constant(x), t.constant(Tensor({5, 1}, 1.0))).x_hat.value();
    const Tensor g0 = dgf::gated_mix(t.constant(x), t.constant(Tensor::zeros({5, 1}))).x_hat.value();
    for (std::size_t c = 0; c < 5; ++c)
      for (std::size_t k = 0; k < 24; ++k) {
        inst = std::max(inst, std::abs(g1.at(c, k) - (x.at(c, k) - o.mu[c]) / o.sigma[c]));
        layer = std::max(layer, std::abs(g0.at(c, k) - (x.at(c, k) - o.mu_layer) / o.sigma_layer));
      }
    // Zero-initialised last layer gives gamma = beta = 0.
    Rng rng(seed);
    dgf::DGFConfig cfg;
    cfg.gate_hidden = 4;
    cfg.psi_hidden = 6;
    dgf::AffineNetwork psi(5, cfg, "p.", rng);
    auto [gamma, beta] = psi.forward(t, t.constant(uniform_tensor({5, 24}, 50 + seed)));
    identity = identity && gamma.value().max_abs() == 0.0 && beta.value().max_abs() == 0.0 &&
               dgf::modulate(t.constant(g1), gamma, beta).value().vec() == g1.vec();
    const Var h = t.constant(x);
    const auto f = dgf::dynamic_mask(h, uniform_tensor({5, 24}, 80 + seed), 1.0);
    no_mask = no_mask && f.values.value().vec() == x.vec() && f.mask == std::vector<int>(5, 1);
  }
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t C = 2 + rng() % 14, L = 1 + rng() % 5;
    Tensor cond({C, L});
    for (auto& v : cond.data()) v = double(int(rng() % 3)) * (rng() % 2 ? 1 : -1);
    const std::size_t k = std::size_t(std::floor(0.7 * double(C) + 1e-9));
    if (k == 0) continue;
    std::vector<double> score(C, 0.0);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t j = 0; j < L; ++j) score[c] += std::abs(cond.at(c, j));
    for (auto& v : score) v /= double(L);
    std::vector<std::size_t> order(C);
    for (std::size_t c = 0; c < C; ++c) order[c] = c;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    std::vector<std::size_t> expect(order.begin(), order.begin() + std::ptrdiff_t(k));
    std::sort(expect.begin(), expect.end());
    oracle = oracle && dgf::top_channels(cond, 0.7) == expect && dgf::keep_count(C, 0.7) == k;
  }
  const bool pass = inst < kTol && layer < kTol && identity && no_mask && oracle;
  return {pass, "gate=1 vs instance norm " + sci(inst) + ", gate=0 vs layer stats " + sci(layer) +
                    " (< 1e-12); psi=0 identity " + (identity ? "exact" : "broken") + "; rho=1 " +
                    (no_mask ? "no-mask exact" : "masks") + "; floor(0.7 C) top-k vs stable-sort oracle " +
                    (oracle ? "200/200" : "mismatch")};
}

Outcome contrastive(const Context& ctx) {
  Tensor eye({4, 4});
  for (std::size_t i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0;
  const double want = -std::log(std::exp(1.0) / (std::exp(1.0) + 3.0));
  const double err_eye = std::abs(train::ntxent_loss(eye, eye, 1.0) - want);
  double err_logm = 0.0;
  for (std::size_t M : {2u, 4u, 8u, 32u}) {
    const Tensor z({M, 6}, 0.4);
    err_logm = std::max(err_logm, std::abs(train::ntxent_loss(z, z, 0.07) - std::log(double(M))));
  }
  const auto root = ctx.work / "corpus24";
  if (!std::filesystem::exists(root / "manifest.tsv")) {
    datasynth::CorpusConfig cc;
    cc.n = 24;
    cc.seed = 5;
    datasynth::build_corpus(root, cc);
  }
  train::TrainConfig cfg;
  cfg.apply_kv(load_kv(ctx.source_dir / "configs/tiny.cfg"));
  cfg.validate();
  train::LoongXModel model(cfg);
  const auto fresh = train::TextEmbedder(cfg.text).hash();
  const auto res = train::pretrain(model, train::load_records(root, train::unified_lengths(cfg), "train"), "");
  const bool frozen = res.text_hash_before == res.text_hash_after && model.text().hash() == fresh;
  const bool pass = err_eye <= 1e-9 && err_logm <= 1e-9 && frozen;
  return {pass, "identity 4x4 tau=1 |loss - 0.743668| " + sci(err_eye) + " (<= 1e-9); identical rows |loss - log M| " +
                    sci(err_logm) + "; text table hash " + hex64(res.text_hash_after) +
                    (frozen ? " unchanged" : " CHANGED") + " after pretraining"};
}

Outcome sampler_exactness(const Context&) {
  std::size_t exact = 0, total = 0;
  for (std::size_t T : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 10u, 16u, 25u, 33u, 64u}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng data(100 + seed);
      const Tensor i0 = float_normal({3, 8, 8}, data), src = float_normal({3, 8, 8}, data);
      Rng rng(seed), peek(seed);
      const Tensor eps = float_normal(i0.shape(), peek);
      StraightPathOracle oracle(i0, eps);
      for (double w : {1.0, 4.0}) {
        Rng r = rng;
        exact += diffusion::sample(oracle, src, Tensor::zeros({2, 2}), {T, w}, diffusion::Schedule(), r).vec() == i0.vec();
        ++total;
      }
    }
  }
  Rng rng(6);
  double inv = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor i0 = Tensor::randn({3, 4, 4}, rng), eps = Tensor::randn({3, 4, 4}, rng);
    const double ab = draw_uniform(rng);
    const auto [r0, re] =
        diffusion::vparam_recover(diffusion::vparam_noisify(i0, eps, ab), diffusion::vparam_velocity(i0, eps, ab), ab);
    inv = std::max({inv, max_abs_diff(r0, i0), max_abs_diff(re, eps)});
  }
  return {exact == total && inv <= 1e-12, "rectified flow + oracle velocity: " + std::to_string(exact) + "/" +
                                              std::to_string(total) + " runs bit-exact (T = 1..64); v-param inversion max err " +
                                              sci(inv) + " (<= 1e-12)"};
}

}  // namespace loongx::acceptance
