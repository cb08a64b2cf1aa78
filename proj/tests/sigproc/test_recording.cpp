#include <gtest/gtest.h>

#include "loongx/numerics/errors.h"
#include "loongx/numerics/io.h"
#include "loongx/sigproc/hemo.h"
#include "loongx/sigproc/prepare.h"
#include "test_util.h"

using namespace loongx;
using namespace loongx::sigproc;

namespace {
Tensor float_exact(Tensor t) {
  for (auto& v : t.data()) v = static_cast<float>(v);
  return t;
}
}  // namespace

TEST(Lmsg, RoundTripWithOptics) {
  const auto dir = loongx::testing::scratch_dir("lmsg");
  RawRecording r;
  r.modality = Modality::fNIRS;
  r.rate_hz = 10.0;
  r.samples = float_exact(loongx::testing::random_tensor({12, 20}, 1, 0.5, 1.5));
  Optics o;
  o.baseline = Tensor({12}, 1.0);
  o.dpf = 5.5;
  r.optics = o;
  save_recording(dir / "fnirs.lmsg", r);
  const auto back = load_recording(dir / "fnirs.lmsg");
  EXPECT_EQ(back.modality, Modality::fNIRS);
  EXPECT_EQ(back.rate_hz, 10.0);
  EXPECT_EQ(back.samples.vec(), r.samples.vec());
  ASSERT_TRUE(back.optics.has_value());
  EXPECT_EQ(back.optics->dpf, 5.5);
  EXPECT_EQ(back.optics->extinction, o.extinction);
  EXPECT_EQ(back.optics->baseline.vec(), o.baseline.vec());
}

TEST(Lmsg, RejectsGarbage) {
  const auto dir = loongx::testing::scratch_dir("lmsg_bad");
  write_text(dir / "x.lmsg", "LMSQ....");
  EXPECT_THROW(load_recording(dir / "x.lmsg"), DataError);
  EXPECT_THROW(load_recording(dir / "missing.lmsg"), DataError);
}

TEST(Modality, ParseRoundTrip) {
  for (auto m : kModalities) EXPECT_EQ(parse_modality(modality_name(m)), m);
  EXPECT_EQ(parse_modality("fNIRS"), Modality::fNIRS);
  EXPECT_THROW(parse_modality("speech"), InvalidConfig);
}

TEST(Condition, ShapesPerModality) {
  Rng rng(3);
  RawRecording eeg{Modality::EEG, 250.0, Tensor::randn({4, 500}, rng), std::nullopt};
  EXPECT_EQ(condition(eeg).samples.shape(), (Shape{4, 500}));

  Optics o;
  o.baseline = Tensor({12}, 1.0);
  RawRecording fn{Modality::fNIRS, 10.0, Tensor::uniform({12, 20}, rng, 0.9, 1.1), o};
  EXPECT_EQ(condition(fn).samples.shape(), (Shape{6, 20}));

  Optics p;
  p.baseline = Tensor({4}, 1.0);
  RawRecording ppg{Modality::PPG, 25.0, Tensor::uniform({4, 50}, rng, 0.9, 1.1), p};
  EXPECT_EQ(condition(ppg).samples.shape(), (Shape{2, 50}));

  RawRecording mo{Modality::Motion, 12.5, Tensor::randn({6, 25}, rng), std::nullopt};
  EXPECT_EQ(condition(mo).samples.vec(), mo.samples.vec());
}

TEST(Condition, FnirsHbtRowsAreSumOfHboAndHbr) {
  Rng rng(4);
  Optics o;
  o.baseline = Tensor({12}, 1.0);
  RawRecording fn{Modality::fNIRS, 10.0, Tensor::uniform({12, 40}, rng, 0.9, 1.1), o};
  const auto c = condition(fn);
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t t = 0; t < 40; ++t)
      EXPECT_NEAR(c.samples.at(4 + h, t), c.samples.at(h, t) + c.samples.at(2 + h, t), 1e-9);
}

TEST(Condition, MissingOpticsRejected) {
  RawRecording fn{Modality::fNIRS, 10.0, Tensor({12, 20}, 1.0), std::nullopt};
  EXPECT_THROW(condition(fn), DataError);
}
