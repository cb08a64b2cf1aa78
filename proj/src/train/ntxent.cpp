#include "loongx/train/ntxent.h"

#include <cmath>

#include "loongx/numerics/errors.h"
#include "loongx/numerics/ops.h"

namespace loongx::train {

Var ntxent_loss(Var z, Var q, double tau) {
  if (!(tau > 0.0)) throw InvalidConfig("ntxent: tau must be > 0");
  if (z.shape().size() != 2 || z.shape() != q.shape() || z.dim(0) == 0) {
    throw ShapeError("ntxent: z " + shape_str(z.shape()) + " and q " + shape_str(q.shape()) + " must be equal [M x D]");
  }
  const std::size_t M = z.dim(0);
  Var s = scale(matmul(l2_normalize_rows(z), transpose(l2_normalize_rows(q))), 1.0 / tau);
  Var eye = z.tape().constant([M] {
    Tensor e({M, M});
    for (std::size_t i = 0; i < M; ++i) e[i * M + i] = 1.0;
    return e;
  }());
  Var diag_rows = sum(mul(log_softmax(s, 1), eye));
  Var diag_cols = sum(mul(log_softmax(s, 0), eye));
  return scale(add(diag_rows, diag_cols), -1.0 / (2.0 * double(M)));
}

double ntxent_loss(const Tensor& z, const Tensor& q, double tau) {
  Tape tape(false);
  return ntxent_loss(tape.constant(z), tape.constant(q), tau).value().item();
}

double top1_retrieval(const Tensor& z, const Tensor& q) {
  if (z.shape().size() != 2 || z.shape() != q.shape()) throw ShapeError("top1_retrieval: shape mismatch");
  const std::size_t M = z.dim(0), D = z.dim(1);
  auto norm = [D](const Tensor& t, std::size_t i) {
    double n = 0.0;
    for (std::size_t j = 0; j < D; ++j) n += t[i * D + j] * t[i * D + j];
    return std::sqrt(n) + 1e-12;
  };
  std::size_t hits = 0;
  for (std::size_t i = 0; i < M; ++i) {
    std::size_t best = 0;
    double best_s = -2.0;
    for (std::size_t j = 0; j < M; ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < D; ++k) d += z[i * D + k] * q[j * D + k];
      d /= norm(z, i) * norm(q, j);
      if (d > best_s) best_s = d, best = j;
    }
    bool same = true;
    for (std::size_t k = 0; k < D && same; ++k) same = q[best * D + k] == q[i * D + k];
    hits += same;
  }
  return double(hits) / double(M);
}

}  // namespace loongx::train
