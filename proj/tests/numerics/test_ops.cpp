#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "loongx/numerics/errors.h"
#include "loongx/numerics/gradcheck.h"
#include "loongx/numerics/ops.h"
#include "test_util.h"

using namespace loongx;
using loongx::testing::random_tensor;

TEST(Ops, ReluExample) {
  Tape t;
  Var y = relu(t.constant(Tensor({3}, {-1.0, 0.0, 2.0})));
  EXPECT_EQ(y.value().vec(), (std::vector<double>{0.0, 0.0, 2.0}));
}

TEST(Ops, LayerNormOfConstantIsZero) {
  Tape t;
  Var y = layer_norm(t.constant(Tensor({5}, 3.25)), 1e-5);
  EXPECT_LT(y.value().max_abs(), 1e-6);
}

TEST(Ops, SoftmaxUniform) {
  Tape t;
  Var y = softmax(t.constant(Tensor::zeros({3})), 0);
  for (double v : y.value().data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Ops, SoftmaxBadAxisThrows) {
  Tape t;
  EXPECT_THROW(softmax(t.constant(Tensor::zeros({3})), 1), ShapeError);
}

TEST(Ops, BroadcastAddMatchesLoop) {
  Tape t;
  const Tensor a = random_tensor({3, 4}, 1), b = random_tensor({1, 4}, 2), c = random_tensor({3, 1}, 3);
  const Tensor ab = add(t.constant(a), t.constant(b)).value();
  const Tensor ac = mul(t.constant(a), t.constant(c)).value();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_EQ(ab.at(i, j), a.at(i, j) + b[j]);
      EXPECT_EQ(ac.at(i, j), a.at(i, j) * c[i]);
    }
}

TEST(Ops, ShapeMismatchThrows) {
  Tape t;
  EXPECT_THROW(add(t.constant(Tensor::zeros({3, 4})), t.constant(Tensor::zeros({4, 3}))), ShapeError);
  EXPECT_THROW(matmul(t.constant(Tensor::zeros({3, 4})), t.constant(Tensor::zeros({3, 4}))), ShapeError);
  EXPECT_THROW(conv1d(t.constant(Tensor::zeros({2, 5})), t.constant(Tensor::zeros({1, 2, 2})),
                      t.constant(Tensor::zeros({1}))),
               ShapeError);
}

TEST(Ops, NonFiniteOutputThrows) {
  Tape t;
  EXPECT_THROW(exp(t.constant(Tensor({1}, 1000.0))), NonFiniteError);
  EXPECT_THROW(div(t.constant(Tensor({1}, 1.0)), t.constant(Tensor({1}, 0.0))), NonFiniteError);
  EXPECT_THROW(log(t.constant(Tensor({1}, -1.0))), DomainError);
}

TEST(Ops, MatmulMatchesTripleLoop) {
  const Tensor a = random_tensor({5, 7}, 4), b = random_tensor({7, 3}, 5);
  const Tensor c = matmul(a, b);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 7; ++k) s += a.at(i, k) * b.at(k, j);
      EXPECT_NEAR(c.at(i, j), s, 1e-14);
    }
}

TEST(Ops, Conv1dMatchesDirectSum) {
  const Tensor x = random_tensor({2, 9}, 6), w = random_tensor({3, 2, 5}, 7), b = random_tensor({3}, 8);
  Tape t;
  const Tensor y = conv1d(t.constant(x), t.constant(w), t.constant(b)).value();
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t i = 0; i < 9; ++i) {
      double s = b[o];
      for (std::size_t c = 0; c < 2; ++c)
        for (int k = 0; k < 5; ++k) {
          const int src = static_cast<int>(i) + k - 2;
          if (src >= 0 && src < 9) s += w.at(o, c, static_cast<std::size_t>(k)) * x.at(c, static_cast<std::size_t>(src));
        }
      EXPECT_NEAR(y.at(o, i), s, 1e-14);
    }
}

TEST(Ops, ConcatThenSliceIsIdentity) {
  Tape t;
  const Tensor a = random_tensor({3, 2, 4}, 9), b = random_tensor({3, 5, 4}, 10);
  Var c = concat({t.constant(a), t.constant(b)}, 1);
  EXPECT_EQ(c.shape(), (Shape{3, 7, 4}));
  EXPECT_EQ(slice(c, 1, 0, 2).value().vec(), a.vec());
  EXPECT_EQ(slice(c, 1, 2, 5).value().vec(), b.vec());
}

TEST(Ops, PermuteMatchesIndexing) {
  Tape t;
  const Tensor a = random_tensor({2, 3, 4}, 11);
  const Tensor p = permute(t.constant(a), {2, 0, 1}).value();
  ASSERT_EQ(p.shape(), (Shape{4, 2, 3}));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(p.at(k, i, j), a.at(i, j, k));
}

TEST(Ops, DropoutEvalIsIdentityAndTrainIsSeeded) {
  const Tensor x = random_tensor({4, 6}, 12);
  Rng r1(3), r2(3);
  Tape t;
  Var xv = t.input(x);
  Var e = dropout(xv, 0.1, false, r1);
  EXPECT_EQ(e.value().vec(), x.vec());
  Tape ta, tb;
  const Tensor da = dropout(ta.constant(x), 0.5, true, r1).value();
  const Tensor db = dropout(tb.constant(x), 0.5, true, r2).value();
  EXPECT_EQ(da.vec(), db.vec());
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_TRUE(da[i] == 0.0 || da[i] == 2.0 * x[i]);
}

TEST(Ops, DropoutEvalGradientIsUpstream) {
  Rng rng(1);
  Tape t;
  const Tensor x = random_tensor({5}, 13);
  Var xv = t.input(x);
  Var w = t.constant(random_tensor({5}, 14));
  t.backward(sum(mul(dropout(xv, 0.1, false, rng), w)));
  EXPECT_EQ(t.grad(xv).vec(), w.value().vec());
}

TEST(Tape, SumOfSquaresGradient) {
  Tape t;
  Var x = t.input(Tensor({2}, {1.0, 2.0}));
  t.backward(sum(square(x)));
  EXPECT_EQ(t.grad(x).vec(), (std::vector<double>{2.0, 4.0}));
}

TEST(Tape, BackwardTwiceThrows) {
  Tape t;
  Var x = t.input(Tensor({2}, 1.0));
  Var l = sum(x);
  t.backward(l);
  EXPECT_THROW(t.backward(l), std::logic_error);
  t.reset();
  Var y = t.input(Tensor({2}, 1.0));
  EXPECT_NO_THROW(t.backward(sum(y)));
}

TEST(Tape, NonScalarLossThrows) {
  Tape t;
  Var x = t.input(Tensor({2}, 1.0));
  EXPECT_THROW(t.backward(x), ShapeError);
}

TEST(Tape, SharedSubexpressionVisitedOnce) {
  // y = x*x + x*x through a shared node; dy/dx = 4x.
  Tape t;
  Var x = t.input(Tensor({3}, {1.0, -2.0, 0.5}));
  Var s = mul(x, x);
  t.backward(sum(add(s, s)));
  EXPECT_EQ(t.grad(x).vec(), (std::vector<double>{4.0, -8.0, 2.0}));
}

TEST(Tape, ParameterGradAccumulates) {
  Parameter p("w", Tensor({2}, {3.0, -1.0}));
  for (int k = 0; k < 2; ++k) {
    Tape t;
    t.backward(sum(square(t.param(p))));
  }
  EXPECT_EQ(p.grad.vec(), (std::vector<double>{12.0, -4.0}));
}

TEST(GradCheck, SumIsExact) {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const double e = finite_diff_check([](Tape&, Var x) { return sum(x); }, random_tensor({4, 3}, s));
    EXPECT_LT(e, 1e-10);
  }
}

// Every primitive with a backward rule, at ten seeds each.
struct PrimCase {
  const char* name;
  Shape shape;
  std::function<Var(Tape&, Var, std::uint64_t)> f;
  double lo = -1.0, hi = 1.0;
};

void PrintTo(const PrimCase& c, std::ostream* os) { *os << c.name; }

class PrimitiveGrad : public ::testing::TestWithParam<PrimCase> {};

TEST_P(PrimitiveGrad, MatchesFiniteDifferences) {
  const auto& c = GetParam();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Tensor x = random_tensor(c.shape, 1000 + seed, c.lo, c.hi);
    // Weighted sum keeps gradients of sum-invariant ops nonzero.
    auto loss = [&](Tape& t, Var v) {
      Var y = c.f(t, v, seed);
      Var wy = t.constant(random_tensor(y.shape(), 3000 + seed));
      return sum(mul(y, wy));
    };
    EXPECT_LT(finite_diff_check(loss, x), 1e-4) << c.name << " seed " << seed;
  }
}

namespace {
Var other(Tape& t, Shape s, std::uint64_t seed) { return t.constant(random_tensor(std::move(s), 5000 + seed)); }
}  // namespace

INSTANTIATE_TEST_SUITE_P(
    AllPrimitives, PrimitiveGrad,
    ::testing::Values(
        PrimCase{"add_bcast", {3, 4}, [](Tape& t, Var x, std::uint64_t s) { return add(x, other(t, {1, 4}, s)); }},
        PrimCase{"add_rev", {1, 4}, [](Tape& t, Var x, std::uint64_t s) { return add(other(t, {3, 4}, s), x); }},
        PrimCase{"sub", {3, 4}, [](Tape& t, Var x, std::uint64_t s) { return sub(other(t, {3, 1}, s), x); }},
        PrimCase{"mul", {3, 4}, [](Tape& t, Var x, std::uint64_t s) { return mul(x, other(t, {3, 4}, s)); }},
        PrimCase{"mul_reduce", {4}, [](Tape& t, Var x, std::uint64_t s) { return mul(other(t, {3, 4}, s), x); }},
        PrimCase{"div_num", {3, 4}, [](Tape& t, Var x, std::uint64_t s) { return div(x, add_scalar(square(other(t, {3, 4}, s)), 1.0)); }},
        PrimCase{"div_den", {3, 4}, [](Tape& t, Var x, std::uint64_t s) { return div(other(t, {3, 4}, s), x); }, 0.5, 2.0},
        PrimCase{"scale", {5}, [](Tape&, Var x, std::uint64_t) { return neg(scale(add_scalar(x, 2.0), 3.0)); }},
        PrimCase{"relu", {6}, [](Tape&, Var x, std::uint64_t) { return relu(x); }},
        PrimCase{"sigmoid", {6}, [](Tape&, Var x, std::uint64_t) { return sigmoid(scale(x, 4.0)); }},
        PrimCase{"tanh", {6}, [](Tape&, Var x, std::uint64_t) { return tanh(x); }},
        PrimCase{"exp", {6}, [](Tape&, Var x, std::uint64_t) { return exp(x); }},
        PrimCase{"log", {6}, [](Tape&, Var x, std::uint64_t) { return log(x); }, 0.2, 3.0},
        PrimCase{"sqrt", {6}, [](Tape&, Var x, std::uint64_t) { return sqrt(x); }, 0.2, 3.0},
        PrimCase{"square", {6}, [](Tape&, Var x, std::uint64_t) { return square(x); }},
        PrimCase{"softplus", {6}, [](Tape&, Var x, std::uint64_t) { return softplus(scale(x, 5.0)); }},
        PrimCase{"sum", {3, 4}, [](Tape&, Var x, std::uint64_t) { return sum(square(x)); }},
        PrimCase{"mean", {3, 4}, [](Tape&, Var x, std::uint64_t) { return mean(square(x)); }},
        PrimCase{"sum_axis0", {3, 4, 2}, [](Tape&, Var x, std::uint64_t) { return sum_axis(x, 1, false); }},
        PrimCase{"mean_axis", {3, 4}, [](Tape&, Var x, std::uint64_t) { return mean_axis(x, 0); }},
        PrimCase{"var_axis", {3, 5}, [](Tape&, Var x, std::uint64_t) { return var_axis(x, 1); }},
        PrimCase{"logsumexp", {3, 5}, [](Tape&, Var x, std::uint64_t) { return logsumexp_axis(x, 1); }},
        PrimCase{"softmax0", {4, 3}, [](Tape&, Var x, std::uint64_t) { return softmax(x, 0); }},
        PrimCase{"softmax1", {4, 3}, [](Tape&, Var x, std::uint64_t) { return softmax(x, 1); }},
        PrimCase{"log_softmax", {4, 3}, [](Tape&, Var x, std::uint64_t) { return log_softmax(x, 1); }},
        PrimCase{"matmul_a", {3, 4}, [](Tape& t, Var x, std::uint64_t s) { return matmul(x, other(t, {4, 2}, s)); }},
        PrimCase{"matmul_b", {4, 2}, [](Tape& t, Var x, std::uint64_t s) { return matmul(other(t, {3, 4}, s), x); }},
        PrimCase{"linear", {2, 5}, [](Tape& t, Var x, std::uint64_t s) { return linear(other(t, {3, 2}, s), x, other(t, {1, 5}, s + 7)); }},
        PrimCase{"reshape", {3, 4}, [](Tape&, Var x, std::uint64_t) { return reshape(square(x), {2, 6}); }},
        PrimCase{"transpose", {3, 4}, [](Tape&, Var x, std::uint64_t) { return transpose(square(x)); }},
        PrimCase{"permute", {2, 3, 4}, [](Tape&, Var x, std::uint64_t) { return permute(square(x), {1, 2, 0}); }},
        PrimCase{"concat", {2, 3}, [](Tape& t, Var x, std::uint64_t s) { return concat({x, other(t, {2, 2}, s), square(x)}, 1); }},
        PrimCase{"slice", {3, 6}, [](Tape&, Var x, std::uint64_t) { return slice(square(x), 1, 2, 3); }},
        PrimCase{"index_select", {4, 3}, [](Tape&, Var x, std::uint64_t) { return index_select(square(x), {3, 0, 3}); }},
        PrimCase{"layer_norm", {3, 7}, [](Tape&, Var x, std::uint64_t) { return layer_norm(x); }},
        PrimCase{"conv1d_x", {2, 9}, [](Tape& t, Var x, std::uint64_t s) { return conv1d(x, other(t, {3, 2, 3}, s), other(t, {3}, s + 1)); }},
        PrimCase{"conv1d_w", {3, 2, 5}, [](Tape& t, Var w, std::uint64_t s) { return conv1d(other(t, {2, 8}, s), w, other(t, {3}, s + 1)); }},
        PrimCase{"conv1d_b", {3}, [](Tape& t, Var b, std::uint64_t s) { return conv1d(other(t, {2, 8}, s), other(t, {3, 2, 3}, s + 1), b); }},
        PrimCase{"dropout_train", {4, 5}, [](Tape&, Var x, std::uint64_t s) { Rng r(s); return dropout(x, 0.3, true, r); }},
        PrimCase{"dropout_eval", {4, 5}, [](Tape&, Var x, std::uint64_t s) { Rng r(s); return dropout(square(x), 0.3, false, r); }},
        PrimCase{"pool_down", {2, 6}, [](Tape&, Var x, std::uint64_t) { return adaptive_avg_pool(x, 4); }},
        PrimCase{"pool_up", {2, 3}, [](Tape&, Var x, std::uint64_t) { return adaptive_avg_pool(x, 7); }},
        PrimCase{"mse", {3, 4}, [](Tape& t, Var x, std::uint64_t s) { return mse_loss(x, other(t, {3, 4}, s)); }},
        PrimCase{"l2norm", {3, 4}, [](Tape&, Var x, std::uint64_t) { return l2_normalize_rows(x); }}),
    [](const ::testing::TestParamInfo<PrimCase>& info) { return std::string(info.param.name); });

TEST(Tape, ValueReferencesSurviveFurtherRecording) {
  Tape t;
  const Tensor& v = t.constant(Tensor({2}, {1.5, 2.5})).value();
  for (int i = 0; i < 5000; ++i) t.constant(Tensor({1}, double(i)));
  EXPECT_EQ(v.vec(), (std::vector<double>{1.5, 2.5}));
}
