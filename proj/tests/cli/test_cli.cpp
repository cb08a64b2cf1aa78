#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "loongx/evalcli/cli.h"
#include "loongx/evalcli/report.h"
#include "loongx/numerics/errors.h"
#include "loongx/numerics/io.h"
#include "test_util.h"

using namespace loongx;
using namespace loongx::evalcli;
namespace fs = std::filesystem;

namespace {

const std::string kTiny = std::string(LOONGX_SOURCE_DIR) + "/configs/tiny.cfg";

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

Run tiny(std::vector<std::string> args) {
  args.insert(args.begin(), {"--config", kTiny});
  return cli(std::move(args));
}

std::string field(const std::string& text, const std::string& key) {
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);)
    if (line.rfind(key + "\t", 0) == 0) return line.substr(key.size() + 1);
  return {};
}

/// Runs every stage of the tiny pipeline under `root`.
void pipeline(const fs::path& root) {
  const std::string c = (root / "corpus").string();
  ASSERT_EQ(tiny({"synth", "--out", c, "--seed", "3"}).code, 0);
  ASSERT_EQ(tiny({"preprocess", "--corpus", c, "--cache", (root / "cache").string()}).code, 0);
  ASSERT_EQ(tiny({"pretrain", "--corpus", c, "--out", (root / "pre").string()}).code, 0);
  ASSERT_EQ(tiny({"train", "--corpus", c, "--init", (root / "pre/pretrain.ckpt").string(), "--out",
                  (root / "ft").string()})
                .code,
            0);
  ASSERT_EQ(tiny({"eval", "--corpus", c, "--checkpoint", (root / "ft/last.ckpt").string(), "--runs", "2", "--out",
                  (root / "ev").string(), "--png"})
                .code,
            0);
  const fs::path s = root / "corpus/samples/s00039";
  ASSERT_EQ(tiny({"edit", "--checkpoint", (root / "ft/last.ckpt").string(), "--input", (s / "source.nft").string(),
                  "--signals-dir", s.string(), "--out", (root / "edit.nft").string()})
                .code,
            0);
  ASSERT_EQ(tiny({"classify", "--corpus", c, "--out", (root / "cls").string()}).code, 0);
  ASSERT_EQ(tiny({"sweep", "--corpus", c, "--out", (root / "sw").string()}).code, 0);
}

}  // namespace

TEST(Cli, HelpExitsZero) {
  const auto r = cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("synth"), std::string::npos);
}

TEST(Cli, UnknownFlagExitsTwoWithUsage) {
  const auto r = cli({"synth", "--out", "x", "--frobnicate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"teleport"}).code, 2);
  EXPECT_EQ(cli({"synth"}).code, 2);
}

TEST(Cli, ConfigErrorsExitTwo) {
  const auto dir = loongx::testing::scratch_dir("cli_cfg");
  EXPECT_EQ(cli({"--set", "pretrain.epoch=3", "synth", "--out", (dir / "c").string()}).code, 2);
  EXPECT_EQ(cli({"--set", "noequals", "synth", "--out", (dir / "c").string()}).code, 2);
  EXPECT_EQ(cli({"synth", "--out", (dir / "c").string(), "--n", "3"}).code, 2);
  EXPECT_EQ(cli({"--set", "corpus.snr_db=abc", "synth", "--out", (dir / "c").string()}).code, 2);
  EXPECT_EQ(cli({"--config", (dir / "absent.cfg").string(), "synth", "--out", (dir / "c").string()}).code, 2);
  EXPECT_EQ(cli({"classify", "--corpus", "x", "--out", "y", "--input-source", "speech"}).code, 2);
  EXPECT_FALSE(fs::exists(dir / "c"));
}

TEST(Cli, DataErrorsExitThree) {
  const auto dir = loongx::testing::scratch_dir("cli_data");
  const auto r = cli({"preprocess", "--corpus", (dir / "nothing").string(), "--cache", (dir / "cache").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("data error"), std::string::npos);
  write_text(dir / "bad.ckpt", "not a checkpoint");
  write_text(dir / "img.nft", "junk");
  EXPECT_EQ(cli({"edit", "--checkpoint", (dir / "bad.ckpt").string(), "--input", (dir / "img.nft").string(),
                 "--signals-dir", dir.string(), "--out", (dir / "o.nft").string()})
                .code,
            3);
}

TEST(Cli, KnownKeysCoverEveryStage) {
  const auto keys = known_config_keys();
  for (const char* k : {"seed", "cs3.eeg.L", "finetune.lr", "corpus.n", "classify.epochs", "eval.runs", "sweep.lengths"})
    EXPECT_TRUE(keys.count(k)) << k;
  EXPECT_THROW(check_config_keys({{"cs3.eeg.Q", "1"}}), InvalidConfig);
  EXPECT_NO_THROW(check_config_keys(load_kv(kTiny)));
  EXPECT_NO_THROW(check_config_keys(load_kv(std::string(LOONGX_SOURCE_DIR) + "/configs/desk.cfg")));
}

TEST(Cli, SynthTwiceGivesIdenticalCorpusHash) {
  const auto dir = loongx::testing::scratch_dir("cli_synth");
  const auto a = cli({"synth", "--n", "100", "--seed", "7", "--out", (dir / "a").string()});
  const auto b = cli({"synth", "--n", "100", "--seed", "7", "--out", (dir / "b").string()});
  const auto c = cli({"synth", "--n", "100", "--seed", "8", "--out", (dir / "c").string()});
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  ASSERT_EQ(c.code, 0);
  EXPECT_EQ(field(a.out, "corpus_hash").size(), 16u);
  EXPECT_EQ(field(a.out, "corpus_hash"), field(b.out, "corpus_hash"));
  EXPECT_NE(field(a.out, "corpus_hash"), field(c.out, "corpus_hash"));
  EXPECT_EQ(field(a.out, "samples"), "100");
}

TEST(Cli, EvalOnTargetPredictionsGivesZeroL1) {
  const auto dir = loongx::testing::scratch_dir("cli_eval");
  const std::string c = (dir / "corpus").string();
  ASSERT_EQ(tiny({"synth", "--out", c}).code, 0);
  fs::create_directories(dir / "pred");
  for (const auto& e : fs::directory_iterator(dir / "corpus/samples"))
    fs::copy_file(e.path() / "target.nft", dir / "pred" / (e.path().filename().string() + ".nft"));
  const auto r = tiny({"eval", "--corpus", c, "--predictions", (dir / "pred").string(), "--out",
                       (dir / "ev").string(), "--png"});
  ASSERT_EQ(r.code, 0) << r.err;
  const MetricReport rep = load_report(dir / "ev/report.json");
  EXPECT_EQ(rep.l1.mean, 0.0);
  EXPECT_EQ(rep.l2.mean, 0.0);
  EXPECT_NEAR(rep.clip_i_proxy.mean, 1.0, 1e-12);
  EXPECT_EQ(rep.n_samples, 4u);
  EXPECT_EQ(rep.split, "test");
  EXPECT_TRUE(fs::exists(dir / "ev/report.tsv"));
  EXPECT_TRUE(fs::exists(dir / "ev/grid.png"));

  fs::remove(dir / "pred/s00039.nft");
  EXPECT_EQ(tiny({"eval", "--corpus", c, "--predictions", (dir / "pred").string(), "--out",
                  (dir / "ev2").string()})
                .code,
            3);
  EXPECT_EQ(tiny({"eval", "--corpus", c, "--out", (dir / "ev3").string()}).code, 2);
}

TEST(Cli, PipelineRerunIsByteIdentical) {
  const auto a = loongx::testing::scratch_dir("cli_pipe_a");
  const auto b = loongx::testing::scratch_dir("cli_pipe_b");
  pipeline(a);
  pipeline(b);
  for (const char* f : {"pre/pretrain.ckpt", "pre/pretrain_curve.csv", "pre/config.cfg", "ft/last.ckpt",
                        "ft/epoch1.ckpt", "ft/finetune_curve.csv", "ev/report.json", "ev/report.tsv", "ev/grid.png",
                        "edit.nft", "cls/classify.json", "sw/sweep.tsv", "corpus/manifest.tsv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(read_text(a / f), read_text(b / f)) << f;
  }
}

TEST(Cli, ResumeReproducesUninterruptedCheckpoint) {
  const auto dir = loongx::testing::scratch_dir("cli_resume");
  const std::string c = (dir / "corpus").string();
  ASSERT_EQ(tiny({"synth", "--out", c}).code, 0);
  ASSERT_EQ(tiny({"train", "--corpus", c, "--out", (dir / "full").string()}).code, 0);
  ASSERT_EQ(tiny({"train", "--corpus", c, "--resume", (dir / "full/epoch1.ckpt").string(), "--out",
                  (dir / "resumed").string()})
                .code,
            0);
  EXPECT_EQ(read_text(dir / "full/last.ckpt"), read_text(dir / "resumed/last.ckpt"));
}

TEST(Cli, BinaryReportsExitCodes) {
  const std::string bin = LOONGX_BIN;
  EXPECT_EQ(WEXITSTATUS(std::system((bin + " --help > /dev/null").c_str())), 0);
  EXPECT_EQ(WEXITSTATUS(std::system((bin + " synth --bogus 2> /dev/null").c_str())), 2);
  EXPECT_EQ(WEXITSTATUS(std::system((bin + " preprocess --corpus /nonexistent --cache /tmp/x 2> /dev/null").c_str())), 3);
}
