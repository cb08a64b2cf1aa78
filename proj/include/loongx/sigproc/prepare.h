#pragma once

#include <vector>

#include "loongx/sigproc/recording.h"

namespace loongx::sigproc {

/// Truncate or right-zero-pad to `unified_len`, then divide by max(|x|, 1e-8).
PreparedSignal prepare(const RawRecording& x, std::size_t unified_len);

struct BandPower {
  double lo_hz, hi_hz;
};

/// Hann-windowed one-sided periodogram value at DFT bin k of a single row.
double periodogram_bin(const double* x, std::size_t n, std::size_t k, double fs);
/// Rectangle-rule power over bins with lo <= f < hi, one row.
double band_power(const double* x, std::size_t n, double fs, double lo_hz, double hi_hz);
/// Band power averaged over channels.
double band_power(const RawRecording& x, double lo_hz, double hi_hz);

/// Alpha (8-12 Hz) over theta (4-8 Hz) power; requires >= 2 s of EEG.
double attention_score(const RawRecording& eeg);

/// Per-modality preprocessing chain used by the pipeline: EEG band-pass
/// 1-80 Hz and notch 48-52 Hz; fNIRS optical density, MBLL, band-pass
/// 0.01-0.5 Hz, hemisphere average of (HbO, HbR, HbT); PPG optical density,
/// hemisphere average, band-pass 0.5-4 Hz; Motion unchanged.
RawRecording condition(const RawRecording& raw);

/// Channel partition of the fNIRS optode set: channels 0-2 left, 3-5 right.
std::vector<std::vector<std::size_t>> fnirs_hemispheres();
/// PPG: channels 0-1 left, 2-3 right.
std::vector<std::vector<std::size_t>> ppg_hemispheres();

}  // namespace loongx::sigproc
