#include <gtest/gtest.h>

#include "loongx/dgf/fusion.h"
#include "loongx/numerics/errors.h"
#include "loongx/numerics/gradcheck.h"
#include "loongx/numerics/ops.h"
#include "loongx/numerics/optim.h"
#include "test_util.h"

using namespace loongx;
using namespace loongx::dgf;
using loongx::testing::random_tensor;
using sigproc::Modality;

namespace {

FusionConfig tiny_cfg() {
  FusionConfig c;
  c.channels = 4;
  c.length = 6;
  c.block.gate_hidden = 3;
  c.block.psi_hidden = 5;
  return c;
}

std::map<Modality, Shape> shapes() {
  return {{Modality::EEG, {3, 5}}, {Modality::PPG, {3, 5}}, {Modality::fNIRS, {2, 4}}, {Modality::Motion, {2, 7}}};
}

FusionInputs inputs(Tape& t, std::uint64_t seed, bool prompt) {
  FusionInputs in;
  std::uint64_t s = seed;
  for (const auto& [m, shape] : shapes()) in.embeddings[m] = t.constant(random_tensor(shape, s++));
  if (prompt) in.prompt = t.constant(random_tensor({5, 8}, s));
  return in;
}

}  // namespace

TEST(Fusion, LatentShapeAndMask) {
  Rng rng(1);
  FusionNet net(tiny_cfg(), shapes(), 8, "f.", rng);
  Tape t(false);
  const auto out = net.forward(t, inputs(t, 1, true));
  EXPECT_EQ(out.latent.shape(), (Shape{8, 6}));
  EXPECT_EQ(net.latent_shape(), (Shape{8, 6}));
  ASSERT_EQ(out.mask.size(), 8u);
  EXPECT_EQ(std::count(out.mask.begin(), out.mask.end(), 1), 4);
  for (const auto& st : out.stages) {
    for (std::size_t c = 0; c < 4; ++c) {
      if (st.mask[c]) continue;
      for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(st.values.value().at(c, j), 0.0);
    }
  }
}

TEST(Fusion, EqualShapesShareOneProjection) {
  Rng rng(2);
  FusionNet net(tiny_cfg(), shapes(), 8, "f.", rng);
  std::size_t proj = 0;
  for (auto* p : net.params()) proj += p->name.find("proj.") != std::string::npos;
  EXPECT_EQ(proj, 6u);  // three distinct shapes, two matrices each
  EXPECT_NO_THROW(check_unique_names(net.params()));
}

TEST(Fusion, PromptChangesLatent) {
  Rng rng(3);
  FusionNet net(tiny_cfg(), shapes(), 8, "f.", rng);
  Tape t(false);
  const Tensor with = net.forward(t, inputs(t, 5, true)).latent.value();
  const Tensor without = net.forward(t, inputs(t, 5, false)).latent.value();
  EXPECT_GT(max_abs_diff(with, without), 1e-6);
}

TEST(Fusion, AbsentModalitiesEnterAsZeros) {
  Rng rng(4);
  FusionNet net(tiny_cfg(), shapes(), 8, "f.", rng);
  Tape t(false);
  FusionInputs in = inputs(t, 6, false);
  in.embeddings.erase(Modality::Motion);
  const Tensor a = net.forward(t, in).latent.value();
  in.embeddings[Modality::Motion] = t.constant(Tensor::zeros({2, 7}));
  EXPECT_EQ(net.forward(t, in).latent.value().vec(), a.vec());
}

TEST(Fusion, WrongShapesThrow) {
  Rng rng(5);
  FusionNet net(tiny_cfg(), shapes(), 8, "f.", rng);
  Tape t(false);
  FusionInputs in = inputs(t, 7, false);
  in.embeddings[Modality::EEG] = t.constant(Tensor::zeros({2, 5}));
  EXPECT_THROW(net.forward(t, in), ShapeError);
  in = inputs(t, 7, false);
  in.prompt = t.constant(Tensor::zeros({3, 7}));
  EXPECT_THROW(net.forward(t, in), ShapeError);
  auto partial = shapes();
  partial.erase(Modality::PPG);
  EXPECT_THROW(FusionNet(tiny_cfg(), partial, 8, "f.", rng), InvalidConfig);
}

TEST(Fusion, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    Rng rng(seed);
    FusionNet net(tiny_cfg(), shapes(), 8, "f.", rng);
    for (std::size_t i = 0; i < FusionNet::kStages; ++i) {
      auto& w = net.stage(i).affine().last_weight().value;
      w = Tensor::randn(w.shape(), rng, 0.2);
    }
    const Tensor w = random_tensor({8, 6}, 90 + seed);
    auto loss = [&](Tape& t) { return sum(mul(net.forward(t, inputs(t, 10 * seed, true)).latent, t.constant(w))); };
    EXPECT_LT(finite_diff_check_params(loss, net.params()), 1e-4) << seed;
  }
}

TEST(Fusion, ConfigFromKeyValues) {
  FusionConfig c;
  c.apply_kv(parse_kv("fusion.channels = 10\nfusion.rho = 0.5\nfusion.length = 12\n"), "fusion");
  EXPECT_EQ(c.channels, 10u);
  EXPECT_EQ(c.length, 12u);
  EXPECT_EQ(c.block.rho, 0.5);
  c.block.rho = 0.05;
  EXPECT_THROW(c.validate(), InvalidConfig);
  EXPECT_THROW(c.apply_kv(parse_kv("fusion.channels = ten\n"), "fusion"), InvalidConfig);
}
