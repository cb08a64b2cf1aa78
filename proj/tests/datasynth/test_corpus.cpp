#include <gtest/gtest.h>

#include <cmath>

#include "loongx/datasynth/corpus.h"
#include "loongx/numerics/errors.h"
#include "loongx/numerics/io.h"
#include "test_util.h"

using namespace loongx;
using loongx::testing::values;
using namespace loongx::datasynth;
namespace fs = std::filesystem;

namespace {

CorpusConfig small(std::size_t n) {
  CorpusConfig c;
  c.n = n;
  c.seed = 17;
  return c;
}

std::map<std::string, std::uint64_t> file_hashes(const fs::path& root) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = hash_file(e.path());
  return out;
}

}  // namespace

TEST(Corpus, HundredSamplesGiveHundredDirectoriesAndRows) {
  const auto root = loongx::testing::scratch_dir("corpus100");
  const auto rows = build_corpus(root, small(100));
  std::size_t dirs = 0;
  for (const auto& e : fs::directory_iterator(root / "samples")) dirs += e.is_directory();
  EXPECT_EQ(dirs, 100u);
  const auto back = read_manifest(root);
  ASSERT_EQ(back.size(), 100u);
  const auto train = std::count_if(back.begin(), back.end(), [](const ManifestRow& r) { return r.split == "train"; });
  EXPECT_EQ(train, 91);
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_EQ(back[i].id, rows[i].id);
    EXPECT_EQ(back[i].seed, rows[i].seed);
    EXPECT_EQ(back[i].labels, rows[i].intent.labels());
    EXPECT_EQ(back[i].intent.magnitude, rows[i].intent.magnitude);
  }
  for (const char* f : {"source.nft", "target.nft", "eeg.lmsg", "fnirs.lmsg", "fnirs.optics", "ppg.lmsg", "ppg.optics",
                        "motion.lmsg", "text.txt", "labels.txt"}) {
    EXPECT_TRUE(fs::exists(sample_dir(root, "s00042") / f)) << f;
  }
  fs::remove_all(root);
}

TEST(Corpus, RebuildIsByteIdentical) {
  const auto a = loongx::testing::scratch_dir("corpus_a"), b = loongx::testing::scratch_dir("corpus_b");
  build_corpus(a, small(20));
  build_corpus(b, small(20));
  const auto ha = file_hashes(a), hb = file_hashes(b);
  EXPECT_EQ(ha.size(), 20u * 10u + 2u);
  EXPECT_EQ(ha, hb);
  EXPECT_EQ(corpus_hash(a), corpus_hash(b));
  write_text(a / "samples" / "s00003" / "text.txt", "tampered\n");
  EXPECT_NE(corpus_hash(a), corpus_hash(b));
  EXPECT_THROW(corpus_hash(a / "missing"), DataError);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Corpus, SamplesRoundTripBitExactly) {
  const auto root = loongx::testing::scratch_dir("corpus_rt");
  const auto cfg = small(12);
  const auto rows = build_corpus(root, cfg);
  for (const auto& row : rows) {
    const EditSample want = make_sample(row.id, row.seed, cfg.snr_db);
    const EditSample got = load_sample(sample_dir(root, row.id));
    EXPECT_EQ(got.id, want.id);
    EXPECT_EQ(got.seed, want.seed);
    EXPECT_EQ(got.intent.edits, want.intent.edits);
    EXPECT_EQ(got.intent.cell, want.intent.cell);
    EXPECT_EQ(got.intent.magnitude, want.intent.magnitude);
    EXPECT_EQ(got.labels, want.labels);
    EXPECT_EQ(got.text, want.text);
    EXPECT_EQ(values(got.source), values(want.source));
    EXPECT_EQ(values(got.target), values(want.target));
    EXPECT_EQ(values(apply_edit(got.source, got.intent)), values(got.target));
    for (auto m : sigproc::kModalities) {
      const auto& g = got.signals.at(m);
      const auto& w = want.signals.at(m);
      EXPECT_EQ(g.rate_hz, w.rate_hz);
      EXPECT_EQ(values(g.samples), values(w.samples));
      ASSERT_EQ(g.optics.has_value(), w.optics.has_value());
      if (g.optics) {
        EXPECT_EQ(values(g.optics->baseline), values(w.optics->baseline));
      }
    }
  }
  fs::remove_all(root);
}

TEST(Corpus, RejectsBadConfigsAndMissingSamples) {
  const auto root = loongx::testing::scratch_dir("corpus_bad");
  EXPECT_THROW(build_corpus(root, small(9)), InvalidConfig);
  auto c = small(10);
  c.split_ratio = 0.0;
  EXPECT_THROW(build_corpus(root, c), InvalidConfig);
  EXPECT_THROW(load_sample(root / "samples" / "nope"), DataError);
  fs::remove_all(root);
}

TEST(Corpus, LabelMarginalsNearConfiguredRateAtTwoThousand) {
  const auto root = loongx::testing::scratch_dir("corpus2000");
  auto cfg = small(2000);
  const auto rows = build_corpus(root, cfg);
  std::vector<double> freq(kNumEditTypes, 0.0);
  for (const auto& r : rows)
    for (std::size_t k = 0; k < kNumEditTypes; ++k) freq[k] += r.labels[k] / 2000.0;
  const double want = cfg.intent.label_marginal();
  for (std::size_t k = 0; k < kNumEditTypes; ++k) {
    EXPECT_GT(freq[k], 0.8 * want) << edit_name(edit_from_label(k));
    EXPECT_LT(freq[k], 1.2 * want) << edit_name(edit_from_label(k));
  }
  fs::remove_all(root);
}
