#include <algorithm>

#include "acceptance.h"
#include "loongx/evalcli/classify.h"

namespace loongx::acceptance {

namespace {
constexpr double kNoiseMargin = 0.07;
constexpr double kFusedSlack = 0.02;
constexpr double kLengthSlack = 0.02;
constexpr double kBudgetSeconds = 600.0;
constexpr std::size_t kEpochs = 15;
}  // namespace

Outcome classification(const Context& ctx) {
  const Stopwatch sw;
  const auto root = desk_corpus(ctx);
  evalcli::ClassifierConfig cfg;
  cfg.epochs = kEpochs;
  cfg.unified_len = 8192;

  const auto sweep = evalcli::length_sweep(root, {1024, 2048, 4096, 8192}, cfg);
  double best_len = 0.0, map8192 = 0.0;
  for (const auto& row : sweep) {
    best_len = std::max(best_len, row.metrics.mAP);
    if (row.length == 8192) map8192 = row.metrics.mAP;
  }
  auto run = [&](evalcli::InputSource src) {
    evalcli::ClassifierConfig c = cfg;
    c.source = src;
    return evalcli::classify_edit_types(root, c).metrics.mAP;
  };
  const double noise = run(evalcli::InputSource::Noise);
  double best_single = map8192;
  std::string singles = "eeg " + fixed(map8192, 3);
  for (auto src : {evalcli::InputSource::fNIRS, evalcli::InputSource::PPG, evalcli::InputSource::Motion}) {
    const double m = run(src);
    best_single = std::max(best_single, m);
    singles += ", " + evalcli::source_name(src) + " " + fixed(m, 3);
  }
  const double fused = run(evalcli::InputSource::Fused);
  const double secs = sw.seconds();

  const bool eeg_ok = map8192 >= noise + kNoiseMargin;
  const bool fused_ok = fused >= best_single - kFusedSlack;
  const bool len_ok = map8192 >= best_len - kLengthSlack;
  std::string lens;
  for (const auto& row : sweep) lens += (lens.empty() ? "" : ", ") + std::to_string(row.length) + ":" + fixed(row.metrics.mAP, 3);
  return {eeg_ok && fused_ok && len_ok && secs <= kBudgetSeconds,
          "mAP noise " + fixed(noise, 3) + ", " + singles + "; eeg - noise " + fixed(map8192 - noise, 3) +
              " (>= 0.07); fused " + fixed(fused, 3) + " vs best single " + fixed(best_single, 3) +
              " (>= -0.02); lengths " + lens + ", 8192 within " + fixed(best_len - map8192, 4) + " of best (<= 0.02); " +
              fixed(secs / 60.0, 1) + " min (<= 10)"};
}

}  // namespace loongx::acceptance
