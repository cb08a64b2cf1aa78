#include <algorithm>

#include "acceptance.h"
#include "loongx/evalcli/report.h"
#include "loongx/numerics/io.h"
#include "loongx/train/loop.h"

namespace loongx::acceptance {

namespace {

constexpr double kRatio = 0.8;
constexpr double kBudgetSeconds = 1800.0;
constexpr std::uint64_t kEvalSeed = 1000;

std::string describe(const std::string& name, const evalcli::Stat& s) {
  std::string out = name + " " + fixed(s.mean);
  if (s.ci95) out += " [" + fixed(s.ci95->first) + ", " + fixed(s.ci95->second) + "]";
  return out;
}

}  // namespace

Outcome end_to_end(const Context& ctx) {
  const Stopwatch sw;
  train::TrainConfig base;
  base.apply_kv(load_kv(ctx.source_dir / "configs/desk.cfg"));
  base.validate();
  const auto root = desk_corpus(ctx);
  const auto lengths = train::unified_lengths(base);
  const auto cache = ctx.work / "cache2200";
  const auto train_set = train::load_records(root, lengths, "train", cache);
  const auto test_set = train::load_records(root, lengths, "test", cache);
  auto noise_train = train_set, noise_test = test_set;
  train::replace_with_noise(noise_train);
  train::replace_with_noise(noise_test);

  std::vector<double> signals, none, noise;
  for (std::uint64_t seed = 1; seed <= ctx.seeds; ++seed) {
    train::TrainConfig cfg = base;
    cfg.seed = seed;
    train::LoongXModel model(cfg);
    train::pretrain(model, train_set, "");
    Checkpoint pretrained;
    model.save(pretrained);
    train::finetune(model, train_set, test_set, "");
    signals.push_back(train::heldout_l1(model, test_set, 0, kEvalSeed + seed));

    train::TrainConfig ncfg = cfg;
    ncfg.condition = train::ConditionMode::Noise;
    train::LoongXModel noisy(ncfg);
    noisy.load(pretrained);
    train::finetune(noisy, noise_train, noise_test, "");
    noise.push_back(train::heldout_l1(noisy, noise_test, 0, kEvalSeed + seed));

    train::TrainConfig ucfg = cfg;
    ucfg.condition = train::ConditionMode::None;
    train::LoongXModel uncond(ucfg);
    train::finetune(uncond, train_set, test_set, "");
    none.push_back(train::heldout_l1(uncond, test_set, 0, kEvalSeed + seed));
  }
  const auto s = evalcli::Stat::from_runs(signals), u = evalcli::Stat::from_runs(none),
             n = evalcli::Stat::from_runs(noise);
  const double secs = sw.seconds();
  const bool beats_none = s.mean < kRatio * u.mean;
  const bool beats_noise = s.ci95 && n.ci95 && s.ci95->second < n.ci95->first;
  const bool pass = beats_none && beats_noise && secs <= kBudgetSeconds;
  return {pass, std::to_string(ctx.seeds) + " seeds, " + std::to_string(train_set.size()) + "/" +
                    std::to_string(test_set.size()) + " split, held-out L1 mean [95% CI]: " + describe("signals", s) +
                    ", " + describe("none", u) + ", " + describe("noise", n) + "; signals/none " +
                    fixed(s.mean / u.mean, 3) + " (< 0.8); CIs vs noise " + (beats_noise ? "disjoint" : "overlap") +
                    "; " + fixed(secs / 60.0, 1) + " min (<= 30)"};
}

}  // namespace loongx::acceptance
