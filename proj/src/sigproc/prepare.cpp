#include "loongx/sigproc/prepare.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "loongx/numerics/errors.h"
#include "loongx/sigproc/filter.h"
#include "loongx/sigproc/hemo.h"

namespace loongx::sigproc {

PreparedSignal prepare(const RawRecording& x, std::size_t unified_len) {
  if (unified_len == 0) throw InvalidConfig("unified length must be >= 1");
  const std::size_t c = x.channels(), n = x.length();
  const std::size_t keep = std::min(n, unified_len);
  PreparedSignal out;
  out.modality = x.modality;
  out.rate_hz = x.rate_hz;
  out.valid_len = keep;
  out.samples = Tensor({c, unified_len});
  double peak = 0.0;
  for (std::size_t r = 0; r < c; ++r)
    for (std::size_t t = 0; t < keep; ++t) peak = std::max(peak, std::abs(x.samples[r * n + t]));
  const double denom = std::max(peak, 1e-8);
  for (std::size_t r = 0; r < c; ++r)
    for (std::size_t t = 0; t < keep; ++t) out.samples[r * unified_len + t] = x.samples[r * n + t] / denom;
  return out;
}

double periodogram_bin(const double* x, std::size_t n, std::size_t k, double fs) {
  double re = 0.0, im = 0.0, wsum2 = 0.0;
  const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(step * static_cast<double>(i));
    wsum2 += w * w;
    const double ang = step * static_cast<double>((k * i) % n);
    re += w * x[i] * std::cos(ang);
    im -= w * x[i] * std::sin(ang);
  }
  double p = (re * re + im * im) / (fs * wsum2);
  if (k != 0 && 2 * k != n) p *= 2.0;
  return p;
}

double band_power(const double* x, std::size_t n, double fs, double lo_hz, double hi_hz) {
  const double df = fs / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t k = 0; 2 * k <= n; ++k) {
    const double f = static_cast<double>(k) * df;
    if (f >= lo_hz && f < hi_hz) acc += periodogram_bin(x, n, k, fs) * df;
  }
  return acc;
}

double band_power(const RawRecording& x, double lo_hz, double hi_hz) {
  const std::size_t c = x.channels(), n = x.length();
  double acc = 0.0;
  for (std::size_t r = 0; r < c; ++r) acc += band_power(x.samples.data().data() + r * n, n, x.rate_hz, lo_hz, hi_hz);
  return acc / static_cast<double>(c);
}

double attention_score(const RawRecording& eeg) {
  if (eeg.modality != Modality::EEG) throw InvalidConfig("attention_score expects an EEG recording");
  if (static_cast<double>(eeg.length()) < 2.0 * eeg.rate_hz) {
    throw DataError("attention_score needs at least 2 s of signal");
  }
  const double alpha = band_power(eeg, 8.0, 12.0);
  const double theta = band_power(eeg, 4.0, 8.0);
  return alpha / std::max(theta, 1e-12);
}

std::vector<std::vector<std::size_t>> fnirs_hemispheres() { return {{0, 1, 2}, {3, 4, 5}}; }
std::vector<std::vector<std::size_t>> ppg_hemispheres() { return {{0, 1}, {2, 3}}; }

namespace {

RawRecording with_samples(const RawRecording& like, Tensor samples) {
  RawRecording r = like;
  r.samples = std::move(samples);
  return r;
}

Tensor rows(const Tensor& x, std::size_t start, std::size_t count) {
  const std::size_t n = x.dim(1);
  return Tensor({count, n}, std::vector<double>(x.data().begin() + static_cast<std::ptrdiff_t>(start * n),
                                                x.data().begin() + static_cast<std::ptrdiff_t>((start + count) * n)));
}

Tensor stack_rows(const std::vector<Tensor>& parts) {
  std::vector<double> all;
  std::size_t c = 0;
  for (const auto& p : parts) {
    all.insert(all.end(), p.data().begin(), p.data().end());
    c += p.dim(0);
  }
  return Tensor({c, parts.front().dim(1)}, std::move(all));
}

}  // namespace

RawRecording condition(const RawRecording& raw) {
  raw.validate();
  switch (raw.modality) {
    case Modality::EEG:
      return notch(bandpass(raw, 1.0, 80.0), 48.0, 52.0);
    case Modality::fNIRS: {
      const auto& o = *raw.optics;
      const std::size_t c = raw.channels();
      if (c % 2 != 0) throw DataError("fNIRS rows must hold two wavelengths per optode");
      const std::size_t k = c / 2;
      if (o.baseline.numel() != c) throw DataError("fNIRS baseline must have one entry per row");
      const Tensor od = optical_density(raw.samples, o.baseline);
      const auto h = mbll(rows(od, 0, k), rows(od, k, k), o);
      std::vector<Tensor> parts;
      for (const Tensor* t : {&h.hbo, &h.hbr, &h.hbt}) {
        RawRecording r = bandpass(with_samples(raw, *t), 0.01, 0.5);
        parts.push_back(hemisphere_average(r, fnirs_hemispheres()).samples);
      }
      return with_samples(raw, stack_rows(parts));
    }
    case Modality::PPG: {
      const auto& o = *raw.optics;
      if (o.baseline.numel() != raw.channels()) throw DataError("PPG baseline must have one entry per channel");
      RawRecording od = with_samples(raw, optical_density(raw.samples, o.baseline));
      return bandpass(hemisphere_average(od, ppg_hemispheres()), 0.5, 4.0);
    }
    case Modality::Motion:
      return raw;
  }
  throw InvalidConfig("unknown modality");
}

}  // namespace loongx::sigproc
