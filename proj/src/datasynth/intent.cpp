#include "loongx/datasynth/intent.h"

#include <algorithm>
#include <cmath>

#include "loongx/numerics/errors.h"
#include "loongx/numerics/io.h"

namespace loongx::datasynth {

namespace {
constexpr std::array<EditType, kNumEditTypes> kLabelOrder = {
    EditType::Add,     EditType::Remove,         EditType::Replace,          EditType::ColorChange,
    EditType::BackgroundSwap, EditType::GlobalBrightness, EditType::Texture, EditType::TextOverlay};
constexpr std::array<const char*, kNumEditTypes> kLabelNames = {
    "add", "remove", "replace", "color-change", "background-swap", "global-brightness", "texture", "text-overlay"};

bool is_object_edit(EditType e) {
  return e == EditType::Remove || e == EditType::Replace || e == EditType::ColorChange;
}
}  // namespace

std::size_t label_index(EditType e) {
  return std::size_t(std::find(kLabelOrder.begin(), kLabelOrder.end(), e) - kLabelOrder.begin());
}

EditType edit_from_label(std::size_t label) {
  if (label >= kNumEditTypes) throw InvalidConfig("edit label out of range: " + std::to_string(label));
  return kLabelOrder[label];
}

std::string edit_name(EditType e) { return kLabelNames[label_index(e)]; }

EditType parse_edit(const std::string& name) {
  for (std::size_t i = 0; i < kNumEditTypes; ++i) {
    if (name == kLabelNames[i]) return kLabelOrder[i];
  }
  throw InvalidConfig("unknown edit type '" + name + "'");
}

std::vector<int> IntentCode::labels() const {
  std::vector<int> l(kNumEditTypes, 0);
  for (auto e : edits) l[label_index(e)] = 1;
  return l;
}

void IntentCode::validate() const {
  if (edits.empty() || edits.size() > 3) throw InvalidConfig("intent: 1-3 edits required");
  for (std::size_t i = 1; i < edits.size(); ++i) {
    if (!(edits[i - 1] < edits[i])) throw InvalidConfig("intent: edits must be distinct and in canonical order");
  }
  if (cell >= kGrid * kGrid) throw InvalidConfig("intent: cell " + std::to_string(cell) + " out of bounds");
  if (!(magnitude >= 0.0 && magnitude <= 1.0)) throw InvalidConfig("intent: magnitude must lie in [0, 1]");
}

double IntentConfig::label_marginal() const {
  const double total = count_probs[0] + count_probs[1] + count_probs[2];
  return (count_probs[0] + 2 * count_probs[1] + 3 * count_probs[2]) / total / double(kNumEditTypes);
}

IntentCode sample_intent(Rng& rng, const std::vector<std::size_t>& occupied, const IntentConfig& cfg) {
  std::discrete_distribution<int> count(cfg.count_probs.begin(), cfg.count_probs.end());
  const std::size_t n = std::size_t(count(rng)) + 1;
  std::array<EditType, kNumEditTypes> pool = kEditTypes;
  std::shuffle(pool.begin(), pool.end(), rng);
  IntentCode in;
  in.edits.assign(pool.begin(), pool.begin() + std::ptrdiff_t(n));
  std::sort(in.edits.begin(), in.edits.end());
  const bool object = std::any_of(in.edits.begin(), in.edits.end(), is_object_edit);
  if (object && !occupied.empty()) {
    in.cell = occupied[std::uniform_int_distribution<std::size_t>(0, occupied.size() - 1)(rng)];
  } else {
    in.cell = std::uniform_int_distribution<std::size_t>(0, kGrid * kGrid - 1)(rng);
  }
  in.magnitude = double(float(draw_uniform(rng, cfg.min_magnitude, cfg.max_magnitude)));
  return in;
}

std::vector<std::string> instruction_tokens(const IntentCode& intent) {
  std::vector<std::string> tok;
  for (auto e : intent.edits) tok.push_back(edit_name(e));
  tok.push_back("row" + std::to_string(intent.cell / kGrid));
  tok.push_back("col" + std::to_string(intent.cell % kGrid));
  tok.push_back("mag" + std::to_string(std::min(4, int(intent.magnitude * 5.0))));
  return tok;
}

}  // namespace loongx::datasynth
