#include <gtest/gtest.h>

#include "loongx/numerics/errors.h"
#include "loongx/numerics/gradcheck.h"
#include "loongx/numerics/ops.h"
#include "train_fixture.h"

using namespace loongx;
using namespace loongx::train;
using loongx::testing::tiny_config;
using loongx::testing::tiny_corpus;

namespace {
std::vector<Record> tiny_records(const std::string& split = "") {
  const auto cfg = tiny_config();
  return load_records(tiny_corpus("train24", 24), unified_lengths(cfg), split);
}
}  // namespace

TEST(TrainConfig, KvRoundTripPreservesHash) {
  TrainConfig a = tiny_config();
  a.use_text = true;
  a.condition = ConditionMode::Noise;
  a.sampler.update = diffusion::VParamUpdate::DDIM;
  TrainConfig b;
  b.apply_kv(a.to_kv());
  EXPECT_EQ(b.hash(), a.hash());
  EXPECT_EQ(format_kv(b.to_kv()), format_kv(a.to_kv()));
  EXPECT_NE(TrainConfig().hash(), a.hash());
}

TEST(TrainConfig, RejectsInvalidValues) {
  TrainConfig c;
  EXPECT_THROW(c.apply_kv({{"condition", "telepathy"}}), InvalidConfig);
  EXPECT_THROW(c.apply_kv({{"tau", "abc"}}), InvalidConfig);
  TrainConfig d;
  d.tau = 0.0;
  EXPECT_THROW(d.validate(), InvalidConfig);
  TrainConfig e;
  e.encoders[Modality::PPG].d_prime = 128;
  EXPECT_THROW(e.validate(), InvalidConfig);
  TrainConfig f;
  f.pretrain.batch = 1;
  EXPECT_THROW(f.validate(), InvalidConfig);
  EXPECT_THROW(parse_condition("x"), InvalidConfig);
  for (auto m : {ConditionMode::Signals, ConditionMode::None, ConditionMode::Noise})
    EXPECT_EQ(parse_condition(condition_name(m)), m);
}

TEST(Data, RecordsHavePreparedShapes) {
  const auto recs = tiny_records();
  ASSERT_EQ(recs.size(), 24u);
  EXPECT_EQ(recs[0].signals.at(Modality::EEG).shape(), (Shape{4, 64}));
  EXPECT_EQ(recs[0].signals.at(Modality::fNIRS).shape(), (Shape{6, 32}));
  EXPECT_EQ(recs[0].signals.at(Modality::PPG).shape(), (Shape{2, 32}));
  EXPECT_EQ(recs[0].signals.at(Modality::Motion).shape(), (Shape{6, 32}));
  EXPECT_EQ(tiny_records("train").size(), 22u);
  EXPECT_EQ(tiny_records("test").size(), 2u);
  EXPECT_THROW(load_records(loongx::testing::scratch_dir("empty_corpus"), unified_lengths(tiny_config())),
               DataError);
}

TEST(Data, CacheMatchesDirectPreparation) {
  const auto cfg = tiny_config();
  const auto corpus = tiny_corpus("train24", 24);
  const auto cache = loongx::testing::scratch_dir("prep_cache");
  preprocess_corpus(corpus, unified_lengths(cfg), cache);
  const auto direct = load_records(corpus, unified_lengths(cfg));
  const auto cached = load_records(corpus, unified_lengths(cfg), "", cache);
  ASSERT_EQ(direct.size(), cached.size());
  for (std::size_t i = 0; i < direct.size(); ++i)
    for (const auto& [m, t] : direct[i].signals) EXPECT_EQ(cached[i].signals.at(m).vec(), t.vec());
}

TEST(Data, NoiseReplacementIsSeededAndBounded) {
  auto a = tiny_records(), b = tiny_records();
  const Tensor orig = a[0].signals.at(Modality::EEG);
  replace_with_noise(a);
  replace_with_noise(b);
  EXPECT_EQ(a[0].signals.at(Modality::EEG).vec(), b[0].signals.at(Modality::EEG).vec());
  EXPECT_NE(a[0].signals.at(Modality::EEG).vec(), orig.vec());
  EXPECT_NE(a[0].signals.at(Modality::EEG).vec(), a[1].signals.at(Modality::EEG).vec());
  EXPECT_EQ(a[0].signals.at(Modality::EEG).shape(), orig.shape());
  for (double v : a[3].signals.at(Modality::PPG).data()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Model, ConditionAndEmbeddingShapes) {
  const auto cfg = tiny_config();
  LoongXModel model(cfg);
  const auto recs = tiny_records();
  Tape tape;
  Rng rng(1);
  const auto enc = model.encode(tape, recs[0], false, rng);
  ASSERT_EQ(enc.size(), 4u);
  EXPECT_EQ(enc.at(Modality::EEG).shape(), (Shape{2, 16}));
  EXPECT_EQ(LoongXModel::group_embedding(enc, Group::A).shape(), (Shape{1, 16}));
  EXPECT_EQ(model.condition(tape, recs[0], false, rng).shape(), (Shape{4, 4}));
  EXPECT_EQ(group_members(Group::A), (std::vector<Modality>{Modality::EEG, Modality::PPG}));
  EXPECT_EQ(group_members(Group::B), (std::vector<Modality>{Modality::fNIRS, Modality::Motion}));
}

TEST(Model, GroupEmbeddingIsMeanOfRowMeans) {
  Tape tape;
  std::map<Modality, Var> enc;
  enc[Modality::EEG] = tape.constant(Tensor({2, 2}, {1, 2, 3, 4}));
  enc[Modality::PPG] = tape.constant(Tensor({2, 2}, {0, 0, 2, 8}));
  const Tensor g = LoongXModel::group_embedding(enc, Group::A).value();
  EXPECT_DOUBLE_EQ(g[0], 1.5);
  EXPECT_DOUBLE_EQ(g[1], 3.5);
}

TEST(Model, NoneModeHasNoCondition) {
  auto cfg = tiny_config();
  cfg.condition = ConditionMode::None;
  LoongXModel model(cfg);
  EXPECT_FALSE(model.condition_value(tiny_records()[0]).has_value());
  cfg.condition = ConditionMode::Signals;
  LoongXModel signals(cfg);
  EXPECT_TRUE(signals.condition_value(tiny_records()[0]).has_value());
}

TEST(Model, TextPromptConditionsFusion) {
  auto cfg = tiny_config();
  LoongXModel plain(cfg);
  cfg.use_text = true;
  LoongXModel prompted(cfg);
  const auto recs = tiny_records();
  EXPECT_NE(plain.condition_value(recs[0])->vec(), prompted.condition_value(recs[0])->vec());
}

TEST(Model, CompositeGradientMatchesFiniteDifferences) {
  // Encoders -> fusion -> denoiser velocity loss, one record.
  LoongXModel model(tiny_config());
  const auto recs = tiny_records();
  const Record& r = recs[1];
  auto f = [&](Tape& tape) {
    Rng rng(3);
    Var c = model.condition(tape, r, false, rng);
    std::vector<diffusion::TrainExample> batch{{&r.target, &r.source, c}};
    return diffusion::velocity_loss(tape, model.denoiser(), batch, model.schedule(), {0.0, 0.2}, rng);
  };
  ParamCheckOptions opt;
  opt.step = 1e-6;
  opt.max_coords = 3;
  opt.seed = 4;
  EXPECT_LT(finite_diff_check_params(f, model.params(), opt), 1e-4);
}

TEST(Model, CheckpointRoundTrip) {
  auto cfg = tiny_config();
  LoongXModel a(cfg);
  cfg.seed = 99;
  LoongXModel b(cfg);
  const auto recs = tiny_records();
  EXPECT_NE(a.condition_value(recs[0])->vec(), b.condition_value(recs[0])->vec());
  Checkpoint ck;
  a.save(ck);
  b.load(ck);
  EXPECT_EQ(a.condition_value(recs[0])->vec(), b.condition_value(recs[0])->vec());
  ck.tensors.erase(ck.tensors.begin());
  EXPECT_THROW(b.load(ck), DataError);
}

TEST(Model, LoadRejectsDifferentTextEmbedder) {
  auto cfg = tiny_config();
  LoongXModel a(cfg);
  Checkpoint ck;
  a.save(ck);
  cfg.text.seed = 8;
  LoongXModel b(cfg);
  EXPECT_THROW(b.load(ck), DataError);
}
