#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "loongx/numerics/tape.h"
#include "loongx/numerics/tensor.h"

// Differentiable primitives. Every op records its result on the tape of its
// first operand together with a backward rule; all operands must live on the
// same tape. Binary elementwise ops broadcast with numpy semantics (shapes are
// right-aligned, size-1 dims stretch).

namespace loongx {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

Var add_scalar(Var x, double s);
Var scale(Var x, double s);
Var neg(Var x);

Var relu(Var x);
Var sigmoid(Var x);
Var tanh(Var x);
Var exp(Var x);
Var log(Var x);
Var sqrt(Var x);
Var square(Var x);
Var softplus(Var x);

/// Sum of all elements, as a rank-0 tensor.
Var sum(Var x);
Var mean(Var x);
Var sum_axis(Var x, std::size_t axis, bool keepdim = true);
Var mean_axis(Var x, std::size_t axis, bool keepdim = true);
/// Population variance along an axis.
Var var_axis(Var x, std::size_t axis, bool keepdim = true);
Var logsumexp_axis(Var x, std::size_t axis, bool keepdim = true);
/// Throws ShapeError on an empty axis.
Var softmax(Var x, std::size_t axis);
Var log_softmax(Var x, std::size_t axis);

/// [M x K] . [K x N] -> [M x N]
Var matmul(Var a, Var b);
/// x . w + b with b broadcast over rows.
Var linear(Var x, Var w, Var b);

Var reshape(Var x, Shape shape);
/// Rank-2 transpose.
Var transpose(Var x);
Var permute(Var x, const std::vector<std::size_t>& perm);
Var concat(const std::vector<Var>& xs, std::size_t axis);
Var slice(Var x, std::size_t axis, std::size_t start, std::size_t length);
/// Rows of x (axis 0) gathered by index; repeated indices accumulate grads.
Var index_select(Var x, const std::vector<std::size_t>& indices);

/// Normalises over the last axis: (x - mean) / sqrt(var + eps). No affine.
Var layer_norm(Var x, double eps = 1e-5);

/// x: [Cin x L], w: [Cout x Cin x K] (K odd), b: [Cout]. Same-padded
/// cross-correlation with zeros outside the signal.
Var conv1d(Var x, Var w, Var b);

/// Inverted dropout: in training keeps each element with prob 1-p and scales
/// by 1/(1-p); in eval returns x unchanged.
Var dropout(Var x, double p, bool train, Rng& rng);

/// Pools the last axis of x to `out_len` bins. For out_len <= L, bin j averages
/// indices [floor(j*L/out_len), ceil((j+1)*L/out_len)). For out_len > L each
/// bin replicates the nearest source sample floor((j + 1/2) * L / out_len).
Var adaptive_avg_pool(Var x, std::size_t out_len);

/// mean((a - b)^2)
Var mse_loss(Var a, Var b);
/// Each row of a rank-2 tensor divided by sqrt(|row|^2 + eps).
Var l2_normalize_rows(Var x, double eps = 1e-12);

// Value-level helpers shared with non-differentiable code paths.
std::vector<std::pair<std::size_t, std::size_t>> pool_windows(std::size_t len, std::size_t out_len);
Tensor adaptive_avg_pool(const Tensor& x, std::size_t out_len);
Tensor matmul(const Tensor& a, const Tensor& b);

namespace kernels {
// C[M x N] += A[M x K] . B[K x N]; rows of A that are zero are skipped.
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
// C[M x K] += G[M x N] . B^T where B is [K x N].
void gemm_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k);
// C[K x N] += A^T . G where A is [M x K] and G is [M x N].
void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k, std::size_t n);
}  // namespace kernels

}  // namespace loongx
