#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "loongx/numerics/tensor.h"

namespace loongx::datasynth {

/// Listed in canonical application order.
enum class EditType : std::uint8_t {
  BackgroundSwap,
  Remove,
  Replace,
  Add,
  ColorChange,
  Texture,
  TextOverlay,
  GlobalBrightness,
};

inline constexpr std::size_t kNumEditTypes = 8;
inline constexpr std::array<EditType, kNumEditTypes> kEditTypes = {
    EditType::BackgroundSwap, EditType::Remove,  EditType::Replace,     EditType::Add,
    EditType::ColorChange,    EditType::Texture, EditType::TextOverlay, EditType::GlobalBrightness};

/// Label order used by multi-hot vectors: add, remove, replace, color-change,
/// background-swap, global-brightness, texture, text-overlay.
std::size_t label_index(EditType e);
EditType edit_from_label(std::size_t label);
std::string edit_name(EditType e);
/// Throws InvalidConfig on an unknown name.
EditType parse_edit(const std::string& name);

/// Image grid: kGrid x kGrid cells of kCell x kCell pixels.
inline constexpr std::size_t kGrid = 4;
inline constexpr std::size_t kCell = 8;
inline constexpr std::size_t kImageSide = kGrid * kCell;
inline constexpr std::size_t kImageChannels = 3;

struct IntentCode {
  std::vector<EditType> edits;  // 1-3 distinct, canonical order
  std::size_t cell = 0;         // row-major grid cell of local edits
  double magnitude = 0.5;       // in [0, 1]

  std::vector<int> labels() const;
  /// Throws InvalidConfig when edits are empty, repeated or out of order, or
  /// the cell or magnitude is out of range.
  void validate() const;
};

struct IntentConfig {
  /// Probabilities of 1, 2 and 3 active edits.
  std::array<double, 3> count_probs{0.5, 0.3, 0.2};
  double min_magnitude = 0.2;
  double max_magnitude = 1.0;

  /// Expected marginal frequency of each label.
  double label_marginal() const;
};

/// Draws an intent. Object edits (remove, replace, color-change) target a cell
/// listed in `occupied` when it is nonempty.
IntentCode sample_intent(Rng& rng, const std::vector<std::size_t>& occupied, const IntentConfig& cfg = {});

/// Instruction tokens, e.g. {"add", "row2", "col1", "mag3"}.
std::vector<std::string> instruction_tokens(const IntentCode& intent);

}  // namespace loongx::datasynth
