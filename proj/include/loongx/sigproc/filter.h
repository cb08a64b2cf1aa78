#pragma once

#include <array>
#include <complex>
#include <vector>

#include "loongx/numerics/errors.h"
#include "loongx/sigproc/recording.h"

namespace loongx::sigproc {

/// Signal too short for forward-backward filtering.
class PadTooShort : public DataError {
 public:
  using DataError::DataError;
};

enum class FilterKind { Lowpass, Highpass, Bandpass, Bandstop };

/// One biquad: b0 b1 b2 / 1 a1 a2.
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 2> a{};
};

struct Sos {
  std::vector<Biquad> sections;
  int order = 4;

  /// Complex gain at frequency f (Hz) for sample rate fs.
  std::complex<double> response(double f_hz, double fs) const;
};

inline constexpr int kFilterOrder = 4;

/// Digital Butterworth of prototype order `order` via the bilinear transform
/// with prewarped edges. Lowpass/Highpass use `lo` as the cutoff.
Sos butterworth(int order, FilterKind kind, double lo_hz, double hi_hz, double fs);

/// Causal cascade, direct form II transposed. `zi` holds 2 states per section.
std::vector<double> sos_filter(const Sos& sos, const std::vector<double>& x,
                               std::vector<double>* zi = nullptr);
/// Step-response steady-state initial conditions, 2 per section.
std::vector<double> sos_filter_zi(const Sos& sos);
/// Zero-phase forward-backward filtering with odd-extension padding.
std::vector<double> sos_filtfilt(const Sos& sos, const std::vector<double>& x);

/// Row-wise zero-phase 4th-order Butterworth band-pass.
RawRecording bandpass(const RawRecording& x, double lo_hz, double hi_hz);
/// Row-wise zero-phase band-stop; defaults reject mains interference.
RawRecording notch(const RawRecording& x, double lo_hz = 48.0, double hi_hz = 52.0);

}  // namespace loongx::sigproc
