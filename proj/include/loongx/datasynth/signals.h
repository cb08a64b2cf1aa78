#pragma once

#include <cstdint>
#include <map>

#include "loongx/datasynth/intent.h"
#include "loongx/sigproc/recording.h"

namespace loongx::datasynth {

using sigproc::Modality;
using sigproc::RawRecording;
using SignalSet = std::map<Modality, RawRecording>;

/// Epoch shapes: EEG 4 x 500 at 250 Hz, fNIRS 12 x 20 at 10 Hz (6 optodes,
/// wavelength 1 rows first), PPG 4 x 100 at 50 Hz, Motion 6 x 25 at 12.5 Hz.
inline constexpr double kEpochSeconds = 2.0;
inline constexpr double kEegRate = 250.0;
inline constexpr double kFnirsRate = 10.0;
inline constexpr double kPpgRate = 50.0;
inline constexpr double kMotionRate = 12.5;

/// Tone frequency of an edit type on EEG channel label_index(e) % 4.
double tone_hz(EditType e);

/// Optics used for synthetic fNIRS (12 rows) and PPG (4 rows) intensities.
sigproc::Optics synth_optics(Modality m);

/// Signals tied to the intent:
///  EEG    unit tones at tone_hz(e) for every active edit plus pink noise;
///  fNIRS  HbO/HbR ramps whose slope signs spell the 4 bits of the cell
///         (HbO left, HbO right, HbR left, HbR right), slope 0.5 + magnitude;
///  PPG    1.1 Hz pulse of amplitude 0.02 (0.5 + magnitude) with a fixed
///         0.01 harmonic at 2.2 Hz;
///  Motion intent-free noise with rare bursts.
/// Noise power is set per modality against its signal power at `snr_db`;
/// +inf disables noise. Samples are single-precision representable.
/// Throws InvalidConfig for NaN or -inf.
SignalSet gen_signals(const IntentCode& intent, std::uint64_t seed, double snr_db);

/// 64-bit mixing step used to derive independent sub-seeds.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace loongx::datasynth
