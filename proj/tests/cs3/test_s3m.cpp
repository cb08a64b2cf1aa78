#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "loongx/cs3/s3m.h"
#include "loongx/numerics/errors.h"
#include "loongx/numerics/gradcheck.h"
#include "loongx/numerics/ops.h"
#include "test_util.h"

using namespace loongx;
using namespace loongx::cs3;
using loongx::testing::random_tensor;

namespace {

// Step-by-step recurrence written directly from the definition.
Tensor naive_scan(const Tensor& x, const Tensor& abar, const Tensor& bbar, const Tensor& c, const Tensor& d) {
  const std::size_t C = x.dim(0), L = x.dim(1), N = abar.dim(1);
  Tensor z({C, L});
  for (std::size_t ch = 0; ch < C; ++ch) {
    const std::size_t r = abar.dim(0) == 1 ? 0 : ch;
    std::vector<double> e(N, 0.0);
    for (std::size_t k = 0; k < L; ++k) {
      std::vector<double> next(N);
      for (std::size_t n = 0; n < N; ++n) next[n] = abar.at(r, n) * e[n] + bbar.at(r, n) * x.at(ch, k);
      e = next;
      double out = d[r] * x.at(ch, k);
      for (std::size_t n = 0; n < N; ++n) out += c.at(r, n) * e[n];
      z.at(ch, k) = out;
    }
  }
  return z;
}

DiscreteS3M random_discrete(std::size_t rows, std::size_t n, Rng& rng) {
  DiscreteS3M p{Tensor::uniform({rows, n}, rng, -0.95, 0.95), Tensor::uniform({rows, n}, rng, -1, 1),
                Tensor::uniform({rows, n}, rng, -1, 1), Tensor::uniform({rows}, rng, -1, 1)};
  return p;
}

}  // namespace

TEST(S3M, FeedthroughLimit) {
  const Tensor x = random_tensor({2, 10}, 1);
  DiscreteS3M p{Tensor::zeros({2, 3}), Tensor::ones({2, 3}), Tensor::zeros({2, 3}), Tensor::ones({2})};
  EXPECT_EQ(discrete_scan(x, p).vec(), x.vec());
}

TEST(S3M, HandRecurrence) {
  DiscreteS3M p{Tensor({1, 1}, 0.5), Tensor({1, 1}, 1.0), Tensor({1, 1}, 1.0), Tensor({1}, 0.0)};
  EXPECT_EQ(discrete_scan(Tensor({1, 3}, {1, 0, 0}), p).vec(), (std::vector<double>{1, 0.5, 0.25}));
}

TEST(S3M, MatchesNaiveRecurrence) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t C = 1 + rng() % 4, L = 1 + rng() % 256, N = 1 + rng() % 8;
    const std::size_t rows = trial % 5 == 0 ? 1 : C;
    const auto p = random_discrete(rows, N, rng);
    const Tensor x = Tensor::uniform({C, L}, rng, -1, 1);
    EXPECT_LT(max_abs_diff(discrete_scan(x, p), naive_scan(x, p.abar, p.bbar, p.c, p.d)), 1e-10);
  }
}

TEST(S3M, ContinuousScanMatchesZohOracle) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t C = 1 + rng() % 4, L = 1 + rng() % 200, N = 1 + rng() % 8;
    S3MBlock blk("s.", C, N, rng);
    blk.b.value = Tensor::uniform({C, N}, rng, -1, 1);
    Tensor abar({C, N}), bbar({C, N});
    for (std::size_t r = 0; r < C; ++r) {
      const double dt = std::exp(blk.log_dt.value[r]);
      for (std::size_t n = 0; n < N; ++n) {
        const double a = -std::exp(blk.a_raw.value.at(r, n));
        abar.at(r, n) = std::exp(a * dt);
        bbar.at(r, n) = (std::exp(a * dt) - 1.0) / a * blk.b.value.at(r, n);
      }
    }
    const Tensor x = Tensor::uniform({C, L}, rng, -1, 1);
    Tape t(false);
    const Tensor z = blk.scan(t, t.constant(x)).value();
    EXPECT_LT(max_abs_diff(z, naive_scan(x, abar, bbar, blk.c.value, blk.d.value.reshaped({C}))), 1e-10);
  }
}

TEST(S3M, OutputWithinStabilityBound) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_discrete(3, 4, rng);
    const Tensor x = Tensor::uniform({3, 300}, rng, -1, 1);
    const Tensor z = discrete_scan(x, p);
    const auto bound = p.output_bound();
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t k = 0; k < 300; ++k) EXPECT_LE(std::abs(z.at(r, k)), bound[r] + 1e-12);
  }
}

TEST(S3M, RejectsUnstableParameters) {
  DiscreteS3M p{Tensor({1, 1}, 1.0), Tensor({1, 1}, 1.0), Tensor({1, 1}, 1.0), Tensor({1}, 0.0)};
  EXPECT_THROW(discrete_scan(Tensor({1, 3}), p), InvalidConfig);
  Rng rng(1);
  S3MBlock blk("s.", 2, 3, rng);
  blk.log_dt.value[0] = 0.5;
  EXPECT_THROW(blk.validate(), InvalidConfig);
  blk.project();
  EXPECT_NO_THROW(blk.validate());
  EXPECT_LT(std::exp(blk.log_dt.value[0]), 1.0);
}

TEST(S3M, TransitionsAreNegative) {
  Rng rng(2);
  S3MBlock blk("s.", 3, 8, rng);
  for (double v : blk.a_raw.value.data()) EXPECT_LT(-std::exp(v), 0.0);
  const auto p = blk.discretize();
  for (double v : p.abar.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(S3M, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const std::size_t rows = seed % 2 ? 1 : 3;
    S3MBlock blk("s.", rows, 4, rng);
    // Larger steps make the dt and a derivatives visible at this length.
    for (auto& v : blk.log_dt.value.data()) v = std::log(0.3);
    blk.b.value = Tensor::uniform({rows, 4}, rng, -1, 1);
    const Tensor x = Tensor::uniform({3, 12}, rng, -1, 1);
    const Tensor w = Tensor::uniform({3, 12}, rng, -1, 1);
    auto loss = [&](Tape& t) { return sum(mul(blk.scan(t, t.constant(x)), t.constant(w))); };
    EXPECT_LT(finite_diff_check_params(loss, blk.params(), {.step = 1e-6}), 1e-6) << seed;
    auto loss_x = [&](Tape& t, Var xv) { return sum(mul(blk.scan(t, xv), t.constant(w))); };
    EXPECT_LT(finite_diff_check(loss_x, x), 1e-6);
  }
}

namespace {
double time_scan(const Tensor& x, const DiscreteS3M& p) {
  // Repeat until the measurement spans at least 30 ms.
  using clock = std::chrono::steady_clock;
  int reps = 0;
  const auto start = clock::now();
  double sink = 0.0;
  do {
    sink += discrete_scan(x, p)[0];
    ++reps;
  } while (clock::now() - start < std::chrono::milliseconds(30));
  const double secs = std::chrono::duration<double>(clock::now() - start).count();
  EXPECT_TRUE(std::isfinite(sink));
  return secs / reps;
}
}  // namespace

TEST(S3M, WallTimeScalesLinearly) {
  Rng rng(3);
  const auto p = random_discrete(4, 16, rng);
  for (std::size_t L = 4096; L <= 16384; L *= 2) {
    const Tensor a = Tensor::uniform({4, L}, rng, -1, 1), b = Tensor::uniform({4, 2 * L}, rng, -1, 1);
    std::vector<double> ratios;
    for (int run = 0; run < 5; ++run) ratios.push_back(time_scan(b, p) / time_scan(a, p));
    std::nth_element(ratios.begin(), ratios.begin() + 2, ratios.end());
    EXPECT_GE(ratios[2], 1.6) << L;
    EXPECT_LE(ratios[2], 2.6) << L;
  }
}
