#include <gtest/gtest.h>

#include <set>

#include "loongx/datasynth/intent.h"
#include "loongx/numerics/errors.h"

using namespace loongx;
using namespace loongx::datasynth;

TEST(Intent, LabelOrderAndNamesRoundTrip) {
  const std::vector<std::string> want = {"add",     "remove",  "replace", "color-change", "background-swap",
                                         "global-brightness", "texture", "text-overlay"};
  for (std::size_t i = 0; i < kNumEditTypes; ++i) {
    EXPECT_EQ(edit_name(edit_from_label(i)), want[i]);
    EXPECT_EQ(label_index(parse_edit(want[i])), i);
  }
  EXPECT_THROW(parse_edit("sharpen"), InvalidConfig);
  EXPECT_THROW(edit_from_label(8), InvalidConfig);
}

TEST(Intent, LabelsMatchEdits) {
  IntentCode in{{EditType::Remove, EditType::GlobalBrightness}, 3, 0.5};
  EXPECT_EQ(in.labels(), (std::vector<int>{0, 1, 0, 0, 0, 1, 0, 0}));
}

TEST(Intent, SampledIntentsAreValid) {
  Rng rng(3);
  const std::vector<std::size_t> occupied = {2, 9};
  for (int i = 0; i < 2000; ++i) {
    const auto in = sample_intent(rng, occupied);
    ASSERT_NO_THROW(in.validate());
    const auto l = in.labels();
    const int active = std::accumulate(l.begin(), l.end(), 0);
    ASSERT_GE(active, 1);
    ASSERT_LE(active, 3);
    ASSERT_GE(in.magnitude, 0.2);
    ASSERT_LE(in.magnitude, 1.0);
    for (auto e : in.edits) {
      if (e == EditType::Remove || e == EditType::Replace || e == EditType::ColorChange) {
        ASSERT_TRUE(in.cell == 2 || in.cell == 9);
      }
    }
  }
}

TEST(Intent, LabelMarginalMatchesCountDistribution) {
  IntentConfig cfg;
  double expected_count = 0.0;
  for (int k = 0; k < 3; ++k) expected_count += (k + 1) * cfg.count_probs[k];
  EXPECT_DOUBLE_EQ(cfg.label_marginal(), expected_count / 8.0);
}

TEST(Intent, InstructionTokens) {
  IntentCode in{{EditType::Replace, EditType::Texture}, 6, 0.61};
  EXPECT_EQ(instruction_tokens(in), (std::vector<std::string>{"replace", "texture", "row1", "col2", "mag3"}));
  in.magnitude = 1.0;
  EXPECT_EQ(instruction_tokens(in).back(), "mag4");
}
