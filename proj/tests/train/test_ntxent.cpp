#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "loongx/numerics/errors.h"
#include "loongx/numerics/gradcheck.h"
#include "loongx/numerics/ops.h"
#include "loongx/train/ntxent.h"
#include "loongx/train/text.h"
#include "test_util.h"

using namespace loongx;
using namespace loongx::train;
using loongx::testing::random_tensor;

namespace {

/// Direct summation with explicit normalisation and plain exponentials.
double ntxent_oracle(const Tensor& z, const Tensor& q, double tau) {
  const std::size_t M = z.dim(0), D = z.dim(1);
  auto unit = [D](const Tensor& t, std::size_t i) {
    std::vector<double> r(D);
    double n = 0.0;
    for (std::size_t j = 0; j < D; ++j) n += t[i * D + j] * t[i * D + j];
    for (std::size_t j = 0; j < D; ++j) r[j] = t[i * D + j] / std::sqrt(n);
    return r;
  };
  std::vector<std::vector<double>> s(M, std::vector<double>(M));
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) {
      const auto a = unit(z, i), b = unit(q, j);
      s[i][j] = std::inner_product(a.begin(), a.end(), b.begin(), 0.0) / tau;
    }
  double total = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < M; ++j) row += std::exp(s[i][j]), col += std::exp(s[j][i]);
    total += -std::log(std::exp(s[i][i]) / row) - std::log(std::exp(s[i][i]) / col);
  }
  return total / (2.0 * double(M));
}

Tensor identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t[i * n + i] = 1.0;
  return t;
}

}  // namespace

TEST(NtXent, IdentityRowsAtUnitTemperature) {
  const double want = -std::log(std::exp(1.0) / (std::exp(1.0) + 3.0));
  EXPECT_NEAR(want, 0.743668, 1e-6);
  EXPECT_NEAR(ntxent_loss(identity(4), identity(4), 1.0), want, 1e-9);
}

TEST(NtXent, SingleRowGivesZero) {
  EXPECT_EQ(ntxent_loss(random_tensor({1, 5}, 1), random_tensor({1, 5}, 2), 0.07), 0.0);
}

TEST(NtXent, IdenticalRowsGiveLogM) {
  for (std::size_t M : {2u, 3u, 8u}) {
    Tensor z({M, 4}, 0.3);
    EXPECT_NEAR(ntxent_loss(z, z, 0.07), std::log(double(M)), 1e-12) << M;
  }
}

TEST(NtXent, MatchesDirectSummation) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Tensor z = random_tensor({6, 5}, 100 + s), q = random_tensor({6, 5}, 200 + s);
    for (double tau : {0.07, 0.5, 2.0}) EXPECT_NEAR(ntxent_loss(z, q, tau), ntxent_oracle(z, q, tau), 1e-9);
  }
}

TEST(NtXent, PositiveAndPermutationInvariant) {
  const Tensor z = random_tensor({5, 3}, 7), q = random_tensor({5, 3}, 8);
  const double base = ntxent_loss(z, q, 0.1);
  EXPECT_GT(base, 0.0);
  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  Tensor zp({5, 3}), qp({5, 3});
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) zp[i * 3 + j] = z[perm[i] * 3 + j], qp[i * 3 + j] = q[perm[i] * 3 + j];
  EXPECT_NEAR(ntxent_loss(zp, qp, 0.1), base, 1e-12);
  // Strictly positive even when each positive pair is perfectly aligned.
  EXPECT_GT(ntxent_loss(identity(3), identity(3), 0.07), 0.0);
}

TEST(NtXent, GradientsMatchFiniteDifferences) {
  const Tensor q = random_tensor({4, 6}, 11);
  const Tensor z = random_tensor({4, 6}, 12);
  EXPECT_LT(finite_diff_check([&](Tape& t, Var x) { return ntxent_loss(x, t.constant(q), 0.3); }, z, 1e-6), 1e-4);
  EXPECT_LT(finite_diff_check([&](Tape& t, Var x) { return ntxent_loss(t.constant(z), x, 0.3); }, q, 1e-6), 1e-4);
}

TEST(NtXent, RejectsBadInputs) {
  EXPECT_THROW(ntxent_loss(identity(3), identity(3), 0.0), InvalidConfig);
  EXPECT_THROW(ntxent_loss(identity(3), identity(3), -1.0), InvalidConfig);
  EXPECT_THROW(ntxent_loss(identity(3), identity(4), 1.0), ShapeError);
}

TEST(Retrieval, CountsNearestIdenticalRows) {
  const Tensor q = identity(3);
  Tensor z({3, 3}, {1, 0.1, 0, 0, 0.2, 1, 0, 0, 1});
  EXPECT_NEAR(top1_retrieval(z, q), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(top1_retrieval(q, q), 1.0);
  // Duplicated targets count as hits whichever copy is nearest.
  Tensor dup({2, 2}, {1, 0, 1, 0});
  EXPECT_EQ(top1_retrieval(dup, dup), 1.0);
}

TEST(TextEmbedder, DeterministicFrozenAndNormalised) {
  TextEmbedder a, b;
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_FALSE(a.table().requires_grad);
  const Tensor e = a.embed({"add", "row1", "col2", "mag3"});
  ASSERT_EQ(e.shape(), (Shape{1, 256}));
  double n = 0.0;
  for (double v : e.data()) n += v * v;
  EXPECT_NEAR(n, 1.0, 1e-12);
  EXPECT_EQ(loongx::testing::values(e), loongx::testing::values(b.embed({"add", "row1", "col2", "mag3"})));
  EXPECT_EQ(a.tokens({"add", "remove"}).shape(), (Shape{2, 256}));
  EXPECT_THROW(a.tokens({}), DataError);
  TextEmbedderConfig other;
  other.seed = 8;
  EXPECT_NE(TextEmbedder(other).hash(), a.hash());
}

TEST(TextEmbedder, TapeNeverWritesTheTable) {
  TextEmbedder emb;
  const auto before = emb.hash();
  Tape tape;
  Var t = tape.param(emb.table());
  tape.backward(sum(square(t)));
  EXPECT_EQ(emb.hash(), before);
  EXPECT_FALSE(tape.requires_grad(t.id()));
}
