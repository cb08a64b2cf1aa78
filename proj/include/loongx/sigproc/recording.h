#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "loongx/numerics/tensor.h"

namespace loongx::sigproc {

enum class Modality : std::uint8_t { EEG = 0, fNIRS = 1, PPG = 2, Motion = 3 };

inline constexpr std::array<Modality, 4> kModalities = {Modality::EEG, Modality::fNIRS,
                                                        Modality::PPG, Modality::Motion};

std::string modality_name(Modality m);
/// Accepts "eeg", "fnirs", "ppg", "motion" (any case).
Modality parse_modality(const std::string& s);

/// EEG montage order.
inline constexpr std::array<const char*, 4> kEegChannels = {"Pz", "Fp2", "Fpz", "Oz"};

/// Optical constants for the two-wavelength chromophore conversion.
/// Extinction rows are wavelengths, columns (HbO, HbR), in 1/(uM*mm) under a
/// natural-log optical density, so concentrations come out in uM.
struct Optics {
  std::array<double, 2> wavelengths_nm{735.0, 850.0};
  Tensor baseline;  // I0 per raw channel, [C]
  double pathlength_mm = 30.0;
  double dpf = 6.0;
  std::array<std::array<double, 2>, 2> extinction{{{9.486e-5, 2.540e-4}, {2.436e-4, 1.592e-4}}};
};

struct RawRecording {
  Modality modality = Modality::EEG;
  double rate_hz = 250.0;
  Tensor samples;  // [C x L0]
  std::optional<Optics> optics;

  std::size_t channels() const { return samples.dim(0); }
  std::size_t length() const { return samples.dim(1); }
  /// Throws DataError on violated invariants.
  void validate() const;
};

struct PreparedSignal {
  Modality modality = Modality::EEG;
  Tensor samples;  // [C x L], values in [-1, 1]
  std::size_t valid_len = 0;
  double rate_hz = 0.0;
};

// "LMSG" file: u8 modality, f32 rate, u32 C, u64 L0, f32 samples row-major.
void save_recording(const std::filesystem::path& path, const RawRecording& rec);
RawRecording load_recording(const std::filesystem::path& path);

/// key=value sidecar: wavelength_1_nm, wavelength_2_nm, pathlength_mm, dpf,
/// eps_hbo_1, eps_hbr_1, eps_hbo_2, eps_hbr_2, baseline (comma separated).
void save_optics(const std::filesystem::path& path, const Optics& o);
Optics load_optics(const std::filesystem::path& path);
/// Overrides defaults with any optics keys present in a config map.
Optics optics_from_kv(const std::map<std::string, std::string>& kv, Optics base = {});

}  // namespace loongx::sigproc
