#include "loongx/datasynth/signals.h"

#include <cmath>
#include <numbers>

#include "loongx/numerics/errors.h"
#include "loongx/sigproc/hemo.h"

namespace loongx::datasynth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t epoch_len(double rate) { return std::size_t(std::lround(kEpochSeconds * rate)); }

double mean_square(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.data()) acc += v * v;
  return acc / double(t.numel());
}

/// Noise standard deviation giving the requested SNR against `signal_power`.
double noise_scale(double signal_power, double snr_db) {
  if (std::isinf(snr_db)) return 0.0;
  return std::sqrt(signal_power / std::pow(10.0, snr_db / 10.0));
}

// Paul Kellet's economy pink filter, rescaled to unit variance per row.
std::vector<double> pink_noise(std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  double b0 = 0, b1 = 0, b2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = draw_normal(rng);
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    out[i] = b0 + b1 + b2 + w * 0.1848;
  }
  double mu = 0.0, var = 0.0;
  for (double v : out) mu += v;
  mu /= double(n);
  for (double v : out) var += (v - mu) * (v - mu);
  const double sd = std::sqrt(var / double(n));
  for (auto& v : out) v = (v - mu) / sd;
  return out;
}

void round_to_float(Tensor& t) {
  for (auto& v : t.data()) v = double(float(v));
}

RawRecording gen_eeg(const IntentCode& in, double snr_db, Rng& rng) {
  const std::size_t n = epoch_len(kEegRate);
  Tensor x({4, n});
  for (auto e : in.edits) {
    const std::size_t ch = label_index(e) % 4;
    const double f = tone_hz(e), phase = draw_uniform(rng, 0.0, kTwoPi);
    for (std::size_t t = 0; t < n; ++t) x[ch * n + t] += std::sin(kTwoPi * f * double(t) / kEegRate + phase);
  }
  const double sd = noise_scale(mean_square(x), snr_db);
  for (std::size_t r = 0; r < 4; ++r) {
    const auto noise = pink_noise(n, rng);
    for (std::size_t t = 0; t < n; ++t) x[r * n + t] += sd * noise[t];
  }
  round_to_float(x);
  return {Modality::EEG, kEegRate, std::move(x), std::nullopt};
}

RawRecording gen_fnirs(const IntentCode& in, double snr_db, Rng& rng) {
  const std::size_t n = epoch_len(kFnirsRate), optodes = 6;
  const double slope = 0.5 + in.magnitude;
  auto sign = [&](unsigned bit) { return (in.cell >> bit) & 1U ? 1.0 : -1.0; };
  Tensor hbo({optodes, n}), hbr({optodes, n});
  for (std::size_t r = 0; r < optodes; ++r) {
    const unsigned side = r < 3 ? 0U : 1U;
    for (std::size_t t = 0; t < n; ++t) {
      const double ramp = slope * double(t) / double(n - 1);
      hbo[r * n + t] = sign(side) * ramp;
      hbr[r * n + t] = sign(2U + side) * ramp;
    }
  }
  const double sd = noise_scale(0.5 * (mean_square(hbo) + mean_square(hbr)), snr_db);
  for (Tensor* h : {&hbo, &hbr})
    for (auto& v : h->data()) v += sd * draw_normal(rng);
  const auto optics = synth_optics(Modality::fNIRS);
  const auto [a1, a2] = sigproc::forward_extinction(hbo, hbr, optics);
  Tensor x({2 * optodes, n});
  for (std::size_t r = 0; r < optodes; ++r) {
    for (std::size_t t = 0; t < n; ++t) {
      x[r * n + t] = optics.baseline[r] * std::exp(-a1[r * n + t]);
      x[(optodes + r) * n + t] = optics.baseline[optodes + r] * std::exp(-a2[r * n + t]);
    }
  }
  round_to_float(x);
  return {Modality::fNIRS, kFnirsRate, std::move(x), optics};
}

RawRecording gen_ppg(const IntentCode& in, double snr_db, Rng& rng) {
  const std::size_t n = epoch_len(kPpgRate);
  const double amp = 0.02 * (0.5 + in.magnitude);
  const double phase = draw_uniform(rng, 0.0, kTwoPi);
  Tensor od({4, n});
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t t = 0; t < n; ++t) {
      const double s = double(t) / kPpgRate;
      od[r * n + t] = amp * std::sin(kTwoPi * 1.1 * s + phase) + 0.01 * std::sin(kTwoPi * 2.2 * s + 2.0 * phase);
    }
  }
  const double sd = noise_scale(mean_square(od), snr_db);
  for (auto& v : od.data()) v += sd * draw_normal(rng);
  const auto optics = synth_optics(Modality::PPG);
  Tensor x({4, n});
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t t = 0; t < n; ++t) x[r * n + t] = optics.baseline[r] * std::exp(-od[r * n + t]);
  round_to_float(x);
  return {Modality::PPG, kPpgRate, std::move(x), optics};
}

RawRecording gen_motion(Rng& rng) {
  const std::size_t n = epoch_len(kMotionRate), axes = 6, burst = 5;
  Tensor x({axes, n});
  for (auto& v : x.data()) v = 0.01 * draw_normal(rng);
  if (draw_uniform(rng) < 0.1) {
    const std::size_t start = std::uniform_int_distribution<std::size_t>(0, n - burst)(rng);
    for (std::size_t r = 0; r < axes; ++r)
      for (std::size_t t = start; t < start + burst; ++t) x[r * n + t] += 0.5 * draw_normal(rng);
  }
  round_to_float(x);
  return {Modality::Motion, kMotionRate, std::move(x), std::nullopt};
}

}  // namespace

double tone_hz(EditType e) { return 6.0 + 2.0 * double(label_index(e)); }

sigproc::Optics synth_optics(Modality m) {
  sigproc::Optics o;
  const std::size_t rows = m == Modality::fNIRS ? 12 : 4;
  o.baseline = Tensor({rows});
  for (std::size_t r = 0; r < rows; ++r) o.baseline[r] = 0.75 + 0.05 * double(r % 6);
  return o;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) { return splitmix64(splitmix64(seed) ^ stream); }

SignalSet gen_signals(const IntentCode& intent, std::uint64_t seed, double snr_db) {
  intent.validate();
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
    throw InvalidConfig("snr_db must be finite or +inf");
  }
  SignalSet out;
  Rng eeg(sub_seed(seed, 1)), fnirs(sub_seed(seed, 2)), ppg(sub_seed(seed, 3)), motion(sub_seed(seed, 4));
  out[Modality::EEG] = gen_eeg(intent, snr_db, eeg);
  out[Modality::fNIRS] = gen_fnirs(intent, snr_db, fnirs);
  out[Modality::PPG] = gen_ppg(intent, snr_db, ppg);
  out[Modality::Motion] = gen_motion(motion);
  return out;
}

}  // namespace loongx::datasynth
