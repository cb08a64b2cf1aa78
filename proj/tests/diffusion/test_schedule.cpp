#include <gtest/gtest.h>

#include <cmath>

#include "loongx/diffusion/schedule.h"
#include "loongx/numerics/errors.h"
#include "test_util.h"

using namespace loongx;
using namespace loongx::diffusion;
using loongx::testing::random_tensor;

namespace {
const ScheduleKind kKinds[] = {ScheduleKind::VParamCosine, ScheduleKind::Linear, ScheduleKind::RectifiedFlow};
}

TEST(Schedule, BoundaryValues) {
  for (auto k : kKinds) {
    const Schedule s(k);
    EXPECT_NEAR(s.abar(0.0), 1.0 - kScheduleDelta, 1e-15) << schedule_name(k);
    EXPECT_NEAR(s.abar(1.0), kScheduleDelta, 1e-15) << schedule_name(k);
  }
}

TEST(Schedule, StrictlyDecreasingOnGrid) {
  for (auto k : kKinds) {
    const Schedule s(k);
    double prev = s.abar(0.0);
    for (int i = 1; i <= 1000; ++i) {
      const double cur = s.abar(i / 1000.0);
      EXPECT_LT(cur, prev) << schedule_name(k) << " at " << i;
      prev = cur;
    }
  }
}

TEST(Schedule, NamesRoundTrip) {
  for (auto k : kKinds) EXPECT_EQ(parse_schedule(schedule_name(k)), k);
  EXPECT_EQ(parse_schedule("rectified_flow"), ScheduleKind::RectifiedFlow);
  EXPECT_EQ(parse_schedule("cosine"), ScheduleKind::VParamCosine);
  EXPECT_THROW(parse_schedule("ddpm"), InvalidConfig);
}

TEST(Schedule, TimeOutOfRangeThrows) {
  const Tensor a = random_tensor({2, 2}, 1);
  for (double t : {-0.1, 1.5, std::nan("")}) {
    EXPECT_THROW(noisify(a, a, t, Schedule()), DomainError);
    EXPECT_THROW(velocity_target(a, a, t, Schedule(ScheduleKind::Linear)), DomainError);
  }
}

TEST(Noisify, Boundaries) {
  const Tensor i0 = random_tensor({3, 4, 4}, 2), eps = random_tensor({3, 4, 4}, 3, -3, 3);
  for (auto k : {ScheduleKind::VParamCosine, ScheduleKind::Linear}) {
    const Schedule s(k);
    const Tensor a = noisify(i0, eps, 0.0, s), b = noisify(i0, eps, 1.0, s);
    const double r = std::sqrt(kScheduleDelta);
    for (std::size_t i = 0; i < i0.numel(); ++i) {
      EXPECT_LE(std::abs(a[i] - i0[i]), r * (std::abs(i0[i]) + std::abs(eps[i])));
      EXPECT_LE(std::abs(b[i] - eps[i]), r * (std::abs(i0[i]) + std::abs(eps[i])));
    }
  }
  const Schedule f(ScheduleKind::RectifiedFlow);
  EXPECT_EQ(noisify(i0, eps, 0.0, f).vec(), i0.vec());
  EXPECT_EQ(noisify(i0, eps, 1.0, f).vec(), eps.vec());
  const Tensor mid = noisify(i0, eps, 0.5, f);
  for (std::size_t i = 0; i < i0.numel(); ++i) EXPECT_DOUBLE_EQ(mid[i], (i0[i] + eps[i]) / 2);
}

TEST(Velocity, AbarBoundaries) {
  const Tensor i0 = random_tensor({2, 3, 3}, 4), eps = random_tensor({2, 3, 3}, 5);
  EXPECT_EQ(vparam_velocity(i0, eps, 1.0).vec(), eps.vec());
  const Tensor v0 = vparam_velocity(i0, eps, 0.0);
  for (std::size_t i = 0; i < i0.numel(); ++i) EXPECT_EQ(v0[i], -i0[i]);
  EXPECT_THROW(vparam_velocity(i0, eps, 1.1), DomainError);
}

TEST(Velocity, MatchesScalarLoop) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Tensor i0 = random_tensor({3, 5, 5}, seed), eps = random_tensor({3, 5, 5}, 50 + seed, -3, 3);
    const double t = (seed + 0.5) / 10.0;
    for (auto k : kKinds) {
      const Schedule s(k);
      const Tensor v = velocity_target(i0, eps, t, s), x = noisify(i0, eps, t, s);
      for (std::size_t i = 0; i < i0.numel(); ++i) {
        double ev, ex;
        if (k == ScheduleKind::RectifiedFlow) {
          ev = eps[i] - i0[i];
          ex = (1 - t) * i0[i] + t * eps[i];
        } else {
          const double ab = s.abar(t);
          ev = std::sqrt(ab) * eps[i] - std::sqrt(1 - ab) * i0[i];
          ex = std::sqrt(ab) * i0[i] + std::sqrt(1 - ab) * eps[i];
        }
        EXPECT_NEAR(v[i], ev, 1e-12);
        EXPECT_NEAR(x[i], ex, 1e-12);
      }
    }
  }
}

TEST(Velocity, InversionIdentities) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor i0 = Tensor::randn({3, 4, 4}, rng), eps = Tensor::randn({3, 4, 4}, rng);
    const double ab = draw_uniform(rng);
    const auto [r0, re] = vparam_recover(vparam_noisify(i0, eps, ab), vparam_velocity(i0, eps, ab), ab);
    EXPECT_LT(max_abs_diff(r0, i0), 1e-12);
    EXPECT_LT(max_abs_diff(re, eps), 1e-12);
  }
}

TEST(Velocity, CoefficientsMatchAbar) {
  for (auto k : {ScheduleKind::VParamCosine, ScheduleKind::Linear}) {
    const Schedule s(k);
    for (double t : {0.0, 0.3, 1.0}) {
      EXPECT_NEAR(s.signal_coef(t) * s.signal_coef(t) + s.noise_coef(t) * s.noise_coef(t), 1.0, 1e-15);
    }
  }
  const Schedule f;
  EXPECT_EQ(f.signal_coef(0.25), 0.75);
  EXPECT_EQ(f.noise_coef(0.25), 0.25);
}
