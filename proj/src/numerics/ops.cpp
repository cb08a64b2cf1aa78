#include "loongx/numerics/ops.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "loongx/numerics/errors.h"

namespace loongx {

namespace kernels {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t n,
             std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = g + i * n;
    double* crow = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
      crow[p] += acc;
    }
  }
}

void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * grow[j];
    }
  }
}

}  // namespace kernels

namespace {

void require_same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw std::logic_error("operands recorded on different tapes");
}

void add_into(Tensor* dst, const Tensor& src) {
  if (dst == nullptr) return;
  auto d = dst->data();
  const auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

// ---- broadcasting -------------------------------------------------------

struct Broadcast {
  Shape out;
  std::vector<std::size_t> sa, sb;
  bool same = false;
};

std::vector<std::size_t> aligned_strides(const Shape& s, const Shape& out) {
  const std::size_t r = out.size();
  const std::size_t off = r - s.size();
  std::vector<std::size_t> st(r, 0);
  std::size_t acc = 1;
  for (std::size_t i = r; i-- > off;) {
    const std::size_t d = s[i - off];
    st[i] = (d == 1 && out[i] != 1) ? 0 : acc;
    acc *= d;
  }
  return st;
}

Broadcast make_broadcast(const Shape& a, const Shape& b) {
  Broadcast p;
  if (a == b) {
    p.out = a;
    p.same = true;
    return p;
  }
  const std::size_t r = std::max(a.size(), b.size());
  p.out.resize(r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    const std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da == db || db == 1) {
      p.out[i] = da;
    } else if (da == 1) {
      p.out[i] = db;
    } else {
      throw ShapeError("cannot broadcast " + shape_str(a) + " with " + shape_str(b));
    }
  }
  p.sa = aligned_strides(a, p.out);
  p.sb = aligned_strides(b, p.out);
  return p;
}

template <class F>
void broadcast_loop(const Broadcast& p, F&& f) {
  const std::size_t n = shape_numel(p.out);
  const std::size_t r = p.out.size();
  std::vector<std::size_t> idx(r, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < n; ++i) {
    f(i, ia, ib);
    for (std::size_t d = r; d-- > 0;) {
      ++idx[d];
      ia += p.sa[d];
      ib += p.sb[d];
      if (idx[d] < p.out[d]) break;
      ia -= p.sa[d] * p.out[d];
      ib -= p.sb[d] * p.out[d];
      idx[d] = 0;
    }
  }
}

// fwd(a, b) -> out; da(a, b, out) and db(a, b, out) are local partials.
template <class Fwd, class Da, class Db>
Var binary(Var a, Var b, Fwd fwd, Da da, Db db) {
  require_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Broadcast plan = make_broadcast(av.shape(), bv.shape());
  Tensor out(plan.out);
  if (plan.same) {
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = fwd(av[i], bv[i]);
  } else {
    broadcast_loop(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
      out[i] = fwd(av[ia], bv[ib]);
    });
  }
  const NodeId ida = a.id(), idb = b.id();
  return a.tape().record(std::move(out), {a, b}, [ida, idb, plan, da, db](Tape& t, NodeId self) {
    const Tensor& g = t.grad(self);
    const Tensor& o = t.value(self);
    const Tensor& x = t.value(ida);
    const Tensor& y = t.value(idb);
    Tensor* gx = t.grad_buffer(ida);
    Tensor* gy = t.grad_buffer(idb);
    if (plan.same) {
      for (std::size_t i = 0; i < g.numel(); ++i) {
        if (gx) (*gx)[i] += g[i] * da(x[i], y[i], o[i]);
        if (gy) (*gy)[i] += g[i] * db(x[i], y[i], o[i]);
      }
    } else {
      broadcast_loop(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
        if (gx) (*gx)[ia] += g[i] * da(x[ia], y[ib], o[i]);
        if (gy) (*gy)[ib] += g[i] * db(x[ia], y[ib], o[i]);
      });
    }
  });
}

template <class Fwd, class Dx>
Var unary(Var x, Fwd fwd, Dx dx) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = fwd(xv[i]);
  const NodeId id = x.id();
  return x.tape().record(std::move(out), {x}, [id, dx](Tape& t, NodeId self) {
    Tensor* gx = t.grad_buffer(id);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    const Tensor& o = t.value(self);
    const Tensor& xv = t.value(id);
    for (std::size_t i = 0; i < g.numel(); ++i) (*gx)[i] += g[i] * dx(xv[i], o[i]);
  });
}

// Splits a shape around an axis into (outer, n, inner).
struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  if (axis >= s.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  }
  AxisSplit a;
  for (std::size_t i = 0; i < axis; ++i) a.outer *= s[i];
  a.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) a.inner *= s[i];
  return a;
}

Shape reduced_shape(const Shape& s, std::size_t axis, bool keepdim) {
  Shape r = s;
  if (keepdim) {
    r[axis] = 1;
  } else {
    r.erase(r.begin() + static_cast<std::ptrdiff_t>(axis));
  }
  return r;
}

}  // namespace

// ---- elementwise ----------------------------------------------------------

Var add(Var a, Var b) {
  return binary(
      a, b, [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      a, b, [](double x, double y) { return x - y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      a, b, [](double x, double y) { return x * y; }, [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Var div(Var a, Var b) {
  return binary(
      a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double o) { return -o / y; });
}

Var add_scalar(Var x, double s) {
  return unary(x, [s](double v) { return v + s; }, [](double, double) { return 1.0; });
}

Var scale(Var x, double s) {
  return unary(x, [s](double v) { return v * s; }, [s](double, double) { return s; });
}

Var neg(Var x) { return scale(x, -1.0); }

Var relu(Var x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double o) { return o * (1.0 - o); });
}

Var tanh(Var x) {
  return unary(
      x, [](double v) { return std::tanh(v); }, [](double, double o) { return 1.0 - o * o; });
}

Var exp(Var x) {
  return unary(
      x, [](double v) { return std::exp(v); }, [](double, double o) { return o; });
}

Var log(Var x) {
  for (double v : x.value().data()) {
    if (!(v > 0.0)) throw DomainError("log of nonpositive value");
  }
  return unary(
      x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var sqrt(Var x) {
  for (double v : x.value().data()) {
    if (!(v > 0.0)) throw DomainError("sqrt of nonpositive value");
  }
  return unary(
      x, [](double v) { return std::sqrt(v); }, [](double, double o) { return 0.5 / o; });
}

Var square(Var x) {
  return unary(
      x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var softplus(Var x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
      [](double v, double) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      });
}

// ---- reductions -------------------------------------------------------------

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const NodeId id = x.id();
  return x.tape().record(Tensor::scalar(s), {x}, [id](Tape& t, NodeId self) {
    Tensor* gx = t.grad_buffer(id);
    if (!gx) return;
    const double g = t.grad(self)[0];
    for (auto& v : gx->data()) v += g;
  });
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Var sum_axis(Var x, std::size_t axis, bool keepdim) {
  const Tensor& xv = x.value();
  const AxisSplit s = split_axis(xv.shape(), axis);
  Tensor out(reduced_shape(xv.shape(), axis, keepdim));
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t k = 0; k < s.n; ++k)
      for (std::size_t i = 0; i < s.inner; ++i)
        out[o * s.inner + i] += xv[(o * s.n + k) * s.inner + i];
  const NodeId id = x.id();
  return x.tape().record(std::move(out), {x}, [id, s](Tape& t, NodeId self) {
    Tensor* gx = t.grad_buffer(id);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t k = 0; k < s.n; ++k)
        for (std::size_t i = 0; i < s.inner; ++i)
          (*gx)[(o * s.n + k) * s.inner + i] += g[o * s.inner + i];
  });
}

Var mean_axis(Var x, std::size_t axis, bool keepdim) {
  const double n = static_cast<double>(x.value().dim(axis));
  return scale(sum_axis(x, axis, keepdim), 1.0 / n);
}

Var var_axis(Var x, std::size_t axis, bool keepdim) {
  Var mu = mean_axis(x, axis, true);
  return mean_axis(square(sub(x, mu)), axis, keepdim);
}

Var logsumexp_axis(Var x, std::size_t axis, bool keepdim) {
  const Tensor& xv = x.value();
  const AxisSplit s = split_axis(xv.shape(), axis);
  if (s.n == 0) throw ShapeError("logsumexp over empty axis");
  Tensor out(reduced_shape(xv.shape(), axis, keepdim));
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      double m = -INFINITY;
      for (std::size_t k = 0; k < s.n; ++k) m = std::max(m, xv[(o * s.n + k) * s.inner + i]);
      double acc = 0.0;
      for (std::size_t k = 0; k < s.n; ++k) acc += std::exp(xv[(o * s.n + k) * s.inner + i] - m);
      out[o * s.inner + i] = m + std::log(acc);
    }
  }
  const NodeId id = x.id();
  return x.tape().record(std::move(out), {x}, [id, s](Tape& t, NodeId self) {
    Tensor* gx = t.grad_buffer(id);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    const Tensor& o = t.value(self);
    const Tensor& xv = t.value(id);
    for (std::size_t a = 0; a < s.outer; ++a)
      for (std::size_t k = 0; k < s.n; ++k)
        for (std::size_t i = 0; i < s.inner; ++i) {
          const std::size_t j = (a * s.n + k) * s.inner + i;
          (*gx)[j] += g[a * s.inner + i] * std::exp(xv[j] - o[a * s.inner + i]);
        }
  });
}

Var softmax(Var x, std::size_t axis) {
  const Tensor& xv = x.value();
  const AxisSplit s = split_axis(xv.shape(), axis);
  Tensor out(xv.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      double m = -INFINITY;
      for (std::size_t k = 0; k < s.n; ++k) m = std::max(m, xv[(o * s.n + k) * s.inner + i]);
      double z = 0.0;
      for (std::size_t k = 0; k < s.n; ++k) {
        const std::size_t j = (o * s.n + k) * s.inner + i;
        out[j] = std::exp(xv[j] - m);
        z += out[j];
      }
      for (std::size_t k = 0; k < s.n; ++k) out[(o * s.n + k) * s.inner + i] /= z;
    }
  }
  const NodeId id = x.id();
  return x.tape().record(std::move(out), {x}, [id, s](Tape& t, NodeId self) {
    Tensor* gx = t.grad_buffer(id);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t i = 0; i < s.inner; ++i) {
        double dot = 0.0;
        for (std::size_t k = 0; k < s.n; ++k) {
          const std::size_t j = (o * s.n + k) * s.inner + i;
          dot += g[j] * y[j];
        }
        for (std::size_t k = 0; k < s.n; ++k) {
          const std::size_t j = (o * s.n + k) * s.inner + i;
          (*gx)[j] += y[j] * (g[j] - dot);
        }
      }
  });
}

Var log_softmax(Var x, std::size_t axis) { return sub(x, logsumexp_axis(x, axis, true)); }

// ---- linear algebra -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: " + shape_str(a.shape()) + " . " + shape_str(b.shape()));
  }
  Tensor out({a.dim(0), b.dim(1)});
  kernels::gemm_nn(a.data().data(), b.data().data(), out.data().data(), a.dim(0), a.dim(1),
                   b.dim(1));
  return out;
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  Tensor out = matmul(a.value(), b.value());
  const NodeId ida = a.id(), idb = b.id();
  return a.tape().record(std::move(out), {a, b}, [ida, idb](Tape& t, NodeId self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(ida);
    const Tensor& bv = t.value(idb);
    const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    if (Tensor* ga = t.grad_buffer(ida)) {
      kernels::gemm_nt(g.data().data(), bv.data().data(), ga->data().data(), m, n, k);
    }
    if (Tensor* gb = t.grad_buffer(idb)) {
      kernels::gemm_tn(av.data().data(), g.data().data(), gb->data().data(), m, k, n);
    }
  });
}

Var linear(Var x, Var w, Var b) { return add(matmul(x, w), b); }

// ---- shape ops -------------------------------------------------------------------

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  const NodeId id = x.id();
  return x.tape().record(std::move(out), {x}, [id](Tape& t, NodeId self) {
    add_into(t.grad_buffer(id), t.grad(self));
  });
}

Var transpose(Var x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2) throw ShapeError("transpose expects rank 2, got " + shape_str(xv.shape()));
  const std::size_t r = xv.dim(0), c = xv.dim(1);
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = xv[i * c + j];
  const NodeId id = x.id();
  return x.tape().record(std::move(out), {x}, [id, r, c](Tape& t, NodeId self) {
    Tensor* gx = t.grad_buffer(id);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) (*gx)[i * c + j] += g[j * r + i];
  });
}

Var permute(Var x, const std::vector<std::size_t>& perm) {
  const Tensor& xv = x.value();
  const std::size_t r = xv.rank();
  if (perm.size() != r) throw ShapeError("permute: rank mismatch");
  std::vector<bool> seen(r, false);
  for (auto p : perm) {
    if (p >= r || seen[p]) throw ShapeError("permute: invalid permutation");
    seen[p] = true;
  }
  std::vector<std::size_t> in_strides(r, 1);
  for (std::size_t i = r; i-- > 1;) in_strides[i - 1] = in_strides[i] * xv.dim(i);
  Shape out_shape(r);
  std::vector<std::size_t> src_strides(r);
  for (std::size_t i = 0; i < r; ++i) {
    out_shape[i] = xv.dim(perm[i]);
    src_strides[i] = in_strides[perm[i]];
  }
  // Source offset of every output element, shared by forward and backward.
  std::vector<std::size_t> map(xv.numel());
  {
    std::vector<std::size_t> idx(r, 0);
    std::size_t off = 0;
    for (std::size_t i = 0; i < map.size(); ++i) {
      map[i] = off;
      for (std::size_t d = r; d-- > 0;) {
        ++idx[d];
        off += src_strides[d];
        if (idx[d] < out_shape[d]) break;
        off -= src_strides[d] * out_shape[d];
        idx[d] = 0;
      }
    }
  }
  Tensor out(out_shape);
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = xv[map[i]];
  const NodeId id = x.id();
  return x.tape().record(std::move(out), {x}, [id, map = std::move(map)](Tape& t, NodeId self) {
    Tensor* gx = t.grad_buffer(id);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    for (std::size_t i = 0; i < map.size(); ++i) (*gx)[map[i]] += g[i];
  });
}

Var concat(const std::vector<Var>& xs, std::size_t axis) {
  if (xs.empty()) throw ShapeError("concat of zero tensors");
  const Shape& s0 = xs[0].shape();
  if (axis >= s0.size()) throw ShapeError("concat: axis out of range");
  std::size_t total = 0;
  for (const auto& v : xs) {
    require_same_tape(xs[0], v);
    const Shape& s = v.shape();
    if (s.size() != s0.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != axis && s[i] != s0[i]) {
        throw ShapeError("concat: " + shape_str(s) + " vs " + shape_str(s0) + " along axis " +
                         std::to_string(axis));
      }
    }
    total += s[axis];
  }
  Shape out_shape = s0;
  out_shape[axis] = total;
  const AxisSplit so = split_axis(out_shape, axis);
  Tensor out(out_shape);
  std::vector<std::size_t> offsets;
  std::vector<NodeId> ids;
  std::size_t off = 0;
  for (const auto& v : xs) {
    const Tensor& xv = v.value();
    const std::size_t n = xv.dim(axis);
    for (std::size_t o = 0; o < so.outer; ++o)
      std::copy_n(xv.data().data() + o * n * so.inner, n * so.inner,
                  out.data().data() + (o * so.n + off) * so.inner);
    offsets.push_back(off);
    ids.push_back(v.id());
    off += n;
  }
  return xs[0].tape().record(std::move(out), xs, [ids, offsets, so](Tape& t, NodeId self) {
    const Tensor& g = t.grad(self);
    for (std::size_t q = 0; q < ids.size(); ++q) {
      Tensor* gx = t.grad_buffer(ids[q]);
      if (!gx) continue;
      const std::size_t n = gx->numel() / (so.outer * so.inner);
      for (std::size_t o = 0; o < so.outer; ++o) {
        const double* src = g.data().data() + (o * so.n + offsets[q]) * so.inner;
        double* dst = gx->data().data() + o * n * so.inner;
        for (std::size_t i = 0; i < n * so.inner; ++i) dst[i] += src[i];
      }
    }
  });
}

Var slice(Var x, std::size_t axis, std::size_t start, std::size_t length) {
  const Tensor& xv = x.value();
  const AxisSplit s = split_axis(xv.shape(), axis);
  if (length == 0 || start + length > s.n) throw ShapeError("slice out of range");
  Shape out_shape = xv.shape();
  out_shape[axis] = length;
  Tensor out(out_shape);
  for (std::size_t o = 0; o < s.outer; ++o)
    std::copy_n(xv.data().data() + (o * s.n + start) * s.inner, length * s.inner,
                out.data().data() + o * length * s.inner);
  const NodeId id = x.id();
  return x.tape().record(std::move(out), {x}, [id, s, start, length](Tape& t, NodeId self) {
    Tensor* gx = t.grad_buffer(id);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    for (std::size_t o = 0; o < s.outer; ++o) {
      const double* src = g.data().data() + o * length * s.inner;
      double* dst = gx->data().data() + (o * s.n + start) * s.inner;
      for (std::size_t i = 0; i < length * s.inner; ++i) dst[i] += src[i];
    }
  });
}

Var index_select(Var x, const std::vector<std::size_t>& indices) {
  const Tensor& xv = x.value();
  if (xv.rank() == 0 || indices.empty()) throw ShapeError("index_select: empty selection");
  const std::size_t rows = xv.dim(0);
  const std::size_t inner = xv.numel() / rows;
  Shape out_shape = xv.shape();
  out_shape[0] = indices.size();
  Tensor out(out_shape);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows) throw ShapeError("index_select: index out of range");
    std::copy_n(xv.data().data() + indices[i] * inner, inner, out.data().data() + i * inner);
  }
  const NodeId id = x.id();
  return x.tape().record(std::move(out), {x}, [id, indices, inner](Tape& t, NodeId self) {
    Tensor* gx = t.grad_buffer(id);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      double* dst = gx->data().data() + indices[i] * inner;
      const double* src = g.data().data() + i * inner;
      for (std::size_t k = 0; k < inner; ++k) dst[k] += src[k];
    }
  });
}

// ---- neural-network primitives -------------------------------------------------

Var layer_norm(Var x, double eps) {
  const Tensor& xv = x.value();
  if (xv.rank() == 0) throw ShapeError("layer_norm on a scalar");
  const std::size_t n = xv.shape().back();
  const std::size_t rows = xv.numel() / n;
  Tensor out(xv.shape());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* p = xv.data().data() + r * n;
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += p[i];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (p[i] - mu) * (p[i] - mu);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < n; ++i) out[r * n + i] = (p[i] - mu) * inv_std[r];
  }
  const NodeId id = x.id();
  return x.tape().record(std::move(out), {x}, [id, n, rows, inv_std](Tape& t, NodeId self) {
    Tensor* gx = t.grad_buffer(id);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    for (std::size_t r = 0; r < rows; ++r) {
      double mg = 0.0, mgy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        mg += g[r * n + i];
        mgy += g[r * n + i] * y[r * n + i];
      }
      mg /= static_cast<double>(n);
      mgy /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        (*gx)[r * n + i] += inv_std[r] * (g[r * n + i] - mg - y[r * n + i] * mgy);
      }
    }
  });
}

Var conv1d(Var x, Var w, Var b) {
  require_same_tape(x, w);
  require_same_tape(x, b);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  if (xv.rank() != 2 || wv.rank() != 3 || wv.dim(1) != xv.dim(0) || wv.dim(2) % 2 == 0 ||
      bv.numel() != wv.dim(0)) {
    throw ShapeError("conv1d: x " + shape_str(xv.shape()) + ", w " + shape_str(wv.shape()) +
                     ", b " + shape_str(bv.shape()));
  }
  const std::size_t cin = xv.dim(0), len = xv.dim(1), cout = wv.dim(0), k = wv.dim(2);
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
  Tensor out({cout, len});
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t tt = 0; tt < len; ++tt) {
      double acc = bv[o];
      for (std::size_t c = 0; c < cin; ++c)
        for (std::size_t j = 0; j < k; ++j) {
          const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(tt + j) - half;
          if (s < 0 || s >= static_cast<std::ptrdiff_t>(len)) continue;
          acc += wv[(o * cin + c) * k + j] * xv[c * len + static_cast<std::size_t>(s)];
        }
      out[o * len + tt] = acc;
    }
  const NodeId ix = x.id(), iw = w.id(), ib = b.id();
  return x.tape().record(std::move(out), {x, w, b},
                         [ix, iw, ib, cin, len, cout, k, half](Tape& t, NodeId self) {
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(ix);
    const Tensor& wv = t.value(iw);
    Tensor* gx = t.grad_buffer(ix);
    Tensor* gw = t.grad_buffer(iw);
    Tensor* gb = t.grad_buffer(ib);
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t tt = 0; tt < len; ++tt) {
        const double go = g[o * len + tt];
        if (gb) (*gb)[o] += go;
        for (std::size_t c = 0; c < cin; ++c)
          for (std::size_t j = 0; j < k; ++j) {
            const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(tt + j) - half;
            if (s < 0 || s >= static_cast<std::ptrdiff_t>(len)) continue;
            const std::size_t xi = c * len + static_cast<std::size_t>(s);
            const std::size_t wi = (o * cin + c) * k + j;
            if (gw) (*gw)[wi] += go * xv[xi];
            if (gx) (*gx)[xi] += go * wv[wi];
          }
      }
  });
}

Var dropout(Var x, double p, bool train, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw InvalidConfig("dropout rate must lie in [0, 1)");
  if (!train || p == 0.0) return x;
  const Tensor& xv = x.value();
  Tensor mask(xv.shape());
  const double keep = 1.0 / (1.0 - p);
  for (auto& m : mask.data()) m = draw_uniform(rng) >= p ? keep : 0.0;
  Var m = x.tape().constant(std::move(mask));
  return mul(x, m);
}

std::vector<std::pair<std::size_t, std::size_t>> pool_windows(std::size_t len,
                                                              std::size_t out_len) {
  if (out_len == 0) throw ShapeError("adaptive_avg_pool: out_len must be >= 1");
  if (len == 0) throw ShapeError("adaptive_avg_pool: empty input");
  std::vector<std::pair<std::size_t, std::size_t>> w(out_len);
  for (std::size_t j = 0; j < out_len; ++j) {
    if (out_len <= len) {
      const std::size_t lo = (j * len) / out_len;
      const std::size_t hi = ((j + 1) * len + out_len - 1) / out_len;
      w[j] = {lo, hi};
    } else {
      const std::size_t src = ((2 * j + 1) * len) / (2 * out_len);
      w[j] = {src, src + 1};
    }
  }
  return w;
}

Tensor adaptive_avg_pool(const Tensor& x, std::size_t out_len) {
  if (x.rank() == 0) throw ShapeError("adaptive_avg_pool on a scalar");
  const std::size_t len = x.shape().back();
  const std::size_t rows = x.numel() / len;
  const auto win = pool_windows(len, out_len);
  Shape out_shape = x.shape();
  out_shape.back() = out_len;
  Tensor out(out_shape);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* p = x.data().data() + r * len;
    for (std::size_t j = 0; j < out_len; ++j) {
      double acc = 0.0;
      for (std::size_t i = win[j].first; i < win[j].second; ++i) acc += p[i];
      out[r * out_len + j] = acc / static_cast<double>(win[j].second - win[j].first);
    }
  }
  return out;
}

Var adaptive_avg_pool(Var x, std::size_t out_len) {
  Tensor out = adaptive_avg_pool(x.value(), out_len);
  const std::size_t len = x.value().shape().back();
  const std::size_t rows = x.numel() / len;
  const NodeId id = x.id();
  return x.tape().record(std::move(out), {x}, [id, len, rows, out_len](Tape& t, NodeId self) {
    Tensor* gx = t.grad_buffer(id);
    if (!gx) return;
    const Tensor& g = t.grad(self);
    const auto win = pool_windows(len, out_len);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < out_len; ++j) {
        const double share =
            g[r * out_len + j] / static_cast<double>(win[j].second - win[j].first);
        for (std::size_t i = win[j].first; i < win[j].second; ++i) (*gx)[r * len + i] += share;
      }
  });
}

Var mse_loss(Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mse_loss: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  return mean(square(sub(a, b)));
}

Var l2_normalize_rows(Var x, double eps) {
  if (x.value().rank() != 2) throw ShapeError("l2_normalize_rows expects rank 2");
  Var norm = sqrt(add_scalar(sum_axis(square(x), 1, true), eps));
  return div(x, norm);
}

}  // namespace loongx
