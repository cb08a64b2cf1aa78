#pragma once

#include "loongx/numerics/tape.h"

namespace loongx::train {

/// Symmetric NT-Xent over in-batch pairs. Rows of z and q [M x D] are
/// L2-normalised, s_ij = z_i . q_j / tau, and the loss averages the row-wise
/// and column-wise cross-entropies of the diagonal. Throws InvalidConfig for
/// tau <= 0 and ShapeError for non-conforming inputs.
Var ntxent_loss(Var z, Var q, double tau);
double ntxent_loss(const Tensor& z, const Tensor& q, double tau);

/// Fraction of rows i whose most similar q row (cosine) equals q_i.
double top1_retrieval(const Tensor& z, const Tensor& q);

}  // namespace loongx::train
