#include "loongx/sigproc/filter.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace loongx::sigproc {

using cd = std::complex<double>;

namespace {

struct Zpk {
  std::vector<cd> z, p;
};

double prewarp(double f, double fs) { return 2.0 * fs * std::tan(std::numbers::pi * f / fs); }

cd bilinear_point(cd s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

// Pairs roots into conjugate pairs (upper half plane first); real roots pair
// with each other.
std::vector<std::pair<cd, cd>> pair_roots(const std::vector<cd>& roots) {
  std::vector<std::pair<cd, cd>> out;
  std::vector<double> reals;
  for (const auto& r : roots) {
    if (std::abs(r.imag()) <= 1e-12 * std::max(1.0, std::abs(r))) {
      reals.push_back(r.real());
    } else if (r.imag() > 0.0) {
      out.emplace_back(r, std::conj(r));
    }
  }
  std::sort(reals.begin(), reals.end());
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) out.emplace_back(reals[i], reals[i + 1]);
  if (reals.size() % 2) out.emplace_back(reals.back(), 0.0);
  return out;
}

}  // namespace

std::complex<double> Sos::response(double f_hz, double fs) const {
  const cd zinv = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs);
  cd h = 1.0;
  for (const auto& s : sections) {
    const cd num = s.b[0] + zinv * (s.b[1] + zinv * s.b[2]);
    const cd den = 1.0 + zinv * (s.a[0] + zinv * s.a[1]);
    h *= num / den;
  }
  return h;
}

Sos butterworth(int order, FilterKind kind, double lo_hz, double hi_hz, double fs) {
  if (order < 1) throw InvalidConfig("filter order must be >= 1");
  if (!(fs > 0.0)) throw InvalidConfig("sample rate must be positive");
  const double nyq = fs / 2.0;
  const bool band = kind == FilterKind::Bandpass || kind == FilterKind::Bandstop;
  if (!(lo_hz > 0.0)) throw InvalidConfig("filter edge must be > 0 Hz");
  if (band && !(lo_hz < hi_hz)) throw InvalidConfig("filter band needs lo < hi");
  if ((band ? hi_hz : lo_hz) >= nyq) throw InvalidConfig("filter edge at or above Nyquist");

  std::vector<cd> proto;
  for (int k = 0; k < order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
    proto.push_back(std::polar(1.0, theta));
  }

  Zpk analog;
  cd ref;  // digital reference point where the gain is normalised to 1
  const double w1 = prewarp(lo_hz, fs);
  switch (kind) {
    case FilterKind::Lowpass:
      for (auto p : proto) analog.p.push_back(p * w1);
      ref = 1.0;
      break;
    case FilterKind::Highpass:
      for (auto p : proto) analog.p.push_back(w1 / p);
      analog.z.assign(static_cast<std::size_t>(order), 0.0);
      ref = -1.0;
      break;
    case FilterKind::Bandpass:
    case FilterKind::Bandstop: {
      const double w2 = prewarp(hi_hz, fs);
      const double bw = w2 - w1;
      const double w0 = std::sqrt(w1 * w2);
      for (auto p : proto) {
        const cd h = kind == FilterKind::Bandpass ? p * bw / 2.0 : bw / 2.0 / p;
        const cd r = std::sqrt(h * h - w0 * w0);
        analog.p.push_back(h + r);
        analog.p.push_back(h - r);
      }
      if (kind == FilterKind::Bandpass) {
        analog.z.assign(static_cast<std::size_t>(order), 0.0);
        ref = std::polar(1.0, 2.0 * std::atan(w0 / (2.0 * fs)));
      } else {
        for (int k = 0; k < order; ++k) {
          analog.z.emplace_back(0.0, w0);
          analog.z.emplace_back(0.0, -w0);
        }
        ref = 1.0;
      }
      break;
    }
  }

  Zpk digital;
  for (auto p : analog.p) digital.p.push_back(bilinear_point(p, fs));
  for (auto z : analog.z) digital.z.push_back(bilinear_point(z, fs));
  while (digital.z.size() < digital.p.size()) digital.z.emplace_back(-1.0, 0.0);

  // Bandpass: give each section one zero at +1 and one at -1.
  std::vector<std::pair<cd, cd>> zpairs;
  if (kind == FilterKind::Bandpass) {
    for (int k = 0; k < order; ++k) zpairs.emplace_back(1.0, -1.0);
  } else {
    zpairs = pair_roots(digital.z);
  }
  const auto ppairs = pair_roots(digital.p);
  if (zpairs.size() != ppairs.size()) throw std::logic_error("butterworth: section pairing failed");

  Sos sos;
  sos.order = order;
  for (std::size_t i = 0; i < ppairs.size(); ++i) {
    Biquad q;
    const auto [z1, z2] = zpairs[i];
    const auto [p1, p2] = ppairs[i];
    q.b = {1.0, -(z1 + z2).real(), (z1 * z2).real()};
    q.a = {-(p1 + p2).real(), (p1 * p2).real()};
    sos.sections.push_back(q);
  }
  // Normalise |H(ref)| = 1, spreading the gain evenly over sections.
  cd h = 1.0;
  for (const auto& s : sos.sections) {
    const cd zinv = 1.0 / ref;
    h *= (s.b[0] + zinv * (s.b[1] + zinv * s.b[2])) / (1.0 + zinv * (s.a[0] + zinv * s.a[1]));
  }
  const double g = std::pow(1.0 / std::abs(h), 1.0 / static_cast<double>(sos.sections.size()));
  for (auto& s : sos.sections)
    for (auto& b : s.b) b *= g;
  return sos;
}

std::vector<double> sos_filter(const Sos& sos, const std::vector<double>& x,
                               std::vector<double>* zi) {
  std::vector<double> y = x;
  std::vector<double> local(2 * sos.sections.size(), 0.0);
  std::vector<double>& state = zi ? *zi : local;
  if (state.size() != 2 * sos.sections.size()) throw ShapeError("sos_filter: bad state size");
  for (std::size_t s = 0; s < sos.sections.size(); ++s) {
    const auto& q = sos.sections[s];
    double z1 = state[2 * s], z2 = state[2 * s + 1];
    for (auto& v : y) {
      const double in = v;
      const double out = q.b[0] * in + z1;
      z1 = q.b[1] * in - q.a[0] * out + z2;
      z2 = q.b[2] * in - q.a[1] * out;
      v = out;
    }
    state[2 * s] = z1;
    state[2 * s + 1] = z2;
  }
  return y;
}

std::vector<double> sos_filter_zi(const Sos& sos) {
  std::vector<double> zi;
  double scale = 1.0;
  for (const auto& q : sos.sections) {
    const double dc = (q.b[0] + q.b[1] + q.b[2]) / (1.0 + q.a[0] + q.a[1]);
    zi.push_back(scale * (dc - q.b[0]));
    zi.push_back(scale * (q.b[2] - q.a[1] * dc));
    scale *= dc;
  }
  return zi;
}

std::vector<double> sos_filtfilt(const Sos& sos, const std::vector<double>& x) {
  const std::size_t n = x.size();
  const std::size_t min_len = 3 * static_cast<std::size_t>(sos.order);
  if (n < min_len) {
    throw PadTooShort("signal of " + std::to_string(n) + " samples is shorter than " +
                      std::to_string(min_len));
  }
  const std::size_t padlen = std::min(3 * (2 * sos.sections.size() + 1), n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = sos_filter_zi(sos);
  std::vector<double> state(zi.size());
  for (std::size_t i = 0; i < zi.size(); ++i) state[i] = zi[i] * ext.front();
  auto y = sos_filter(sos, ext, &state);
  std::reverse(y.begin(), y.end());
  for (std::size_t i = 0; i < zi.size(); ++i) state[i] = zi[i] * y.front();
  y = sos_filter(sos, y, &state);
  std::reverse(y.begin(), y.end());
  return std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(padlen),
                             y.begin() + static_cast<std::ptrdiff_t>(padlen + n));
}

namespace {
RawRecording filter_rows(const RawRecording& x, const Sos& sos) {
  RawRecording out = x;
  const std::size_t c = x.channels(), n = x.length();
  for (std::size_t r = 0; r < c; ++r) {
    std::vector<double> row(x.samples.data().begin() + static_cast<std::ptrdiff_t>(r * n),
                            x.samples.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
    const auto y = sos_filtfilt(sos, row);
    std::copy(y.begin(), y.end(), out.samples.data().begin() + static_cast<std::ptrdiff_t>(r * n));
  }
  return out;
}
}  // namespace

RawRecording bandpass(const RawRecording& x, double lo_hz, double hi_hz) {
  return filter_rows(x, butterworth(kFilterOrder, FilterKind::Bandpass, lo_hz, hi_hz, x.rate_hz));
}

RawRecording notch(const RawRecording& x, double lo_hz, double hi_hz) {
  return filter_rows(x, butterworth(kFilterOrder, FilterKind::Bandstop, lo_hz, hi_hz, x.rate_hz));
}

}  // namespace loongx::sigproc
