#include "loongx/cs3/s3m.h"

#include <cmath>
#include <memory>

#include "loongx/numerics/errors.h"

namespace loongx::cs3 {

namespace {

constexpr double kMinDt = 1e-5;
constexpr double kMaxDt = 1.0;

void check_rows(std::size_t rows, std::size_t channels) {
  if (rows != channels && rows != 1) {
    throw ShapeError("s3m: parameter rows " + std::to_string(rows) + " do not match " +
                     std::to_string(channels) + " channels");
  }
}

// Core recurrence for one row; optionally stores every state e_k.
void scan_row(const double* x, std::size_t len, const double* abar, const double* bbar,
              const double* c, double d, std::size_t n, double* z, double* states) {
  std::vector<double> e(n, 0.0);
  for (std::size_t k = 0; k < len; ++k) {
    const double xk = x[k];
    double acc = d * xk;
    for (std::size_t j = 0; j < n; ++j) {
      e[j] = abar[j] * e[j] + bbar[j] * xk;
      acc += c[j] * e[j];
    }
    z[k] = acc;
    if (states) std::copy(e.begin(), e.end(), states + k * n);
  }
}

}  // namespace

void DiscreteS3M::validate() const {
  if (abar.rank() != 2 || bbar.shape() != abar.shape() || c.shape() != abar.shape() ||
      d.numel() != abar.dim(0)) {
    throw ShapeError("DiscreteS3M: inconsistent parameter shapes");
  }
  for (double v : abar.data()) {
    if (!(std::abs(v) < 1.0)) throw InvalidConfig("DiscreteS3M: unstable transition |abar| >= 1");
  }
}

std::vector<double> DiscreteS3M::output_bound() const {
  const std::size_t r = abar.dim(0), n = abar.dim(1);
  std::vector<double> out(r);
  for (std::size_t i = 0; i < r; ++i) {
    double s = std::abs(d[i]);
    for (std::size_t j = 0; j < n; ++j) {
      s += std::abs(c[i * n + j]) * std::abs(bbar[i * n + j]) / (1.0 - std::abs(abar[i * n + j]));
    }
    out[i] = s;
  }
  return out;
}

Tensor discrete_scan(const Tensor& x, const DiscreteS3M& p) {
  p.validate();
  if (x.rank() != 2) throw ShapeError("discrete_scan expects C x L input");
  const std::size_t ch = x.dim(0), len = x.dim(1), n = p.abar.dim(1);
  check_rows(p.abar.dim(0), ch);
  Tensor z({ch, len});
  for (std::size_t r = 0; r < ch; ++r) {
    const std::size_t pr = p.abar.dim(0) == 1 ? 0 : r;
    scan_row(x.data().data() + r * len, len, p.abar.data().data() + pr * n,
             p.bbar.data().data() + pr * n, p.c.data().data() + pr * n, p.d[pr], n,
             z.data().data() + r * len, nullptr);
  }
  return z;
}

S3MBlock::S3MBlock(const std::string& prefix, std::size_t rows, std::size_t n, Rng& rng) {
  if (rows == 0 || n == 0) throw InvalidConfig("S3M block needs rows >= 1 and state_dim >= 1");
  Tensor ar({rows, n}), ld({rows, 1});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < n; ++j) ar[r * n + j] = std::log(0.5 * static_cast<double>(j + 1));
    ld[r] = draw_uniform(rng, std::log(1e-3), std::log(1e-1));
  }
  a_raw = Parameter(prefix + "a_raw", ar);
  log_dt = Parameter(prefix + "log_dt", ld);
  b = Parameter(prefix + "b", Tensor({rows, n}, 1.0));
  c = Parameter(prefix + "c", Tensor::randn({rows, n}, rng, 1.0 / std::sqrt(static_cast<double>(n))));
  d = Parameter(prefix + "d", Tensor({rows, 1}, 1.0));
}

DiscreteS3M S3MBlock::discretize() const {
  validate();
  const std::size_t r = rows(), n = state_dim();
  DiscreteS3M p{Tensor({r, n}), Tensor({r, n}), c.value, d.value.reshaped({r})};
  for (std::size_t i = 0; i < r; ++i) {
    const double dt = std::exp(log_dt.value[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const double a = -std::exp(a_raw.value[i * n + j]);
      p.abar[i * n + j] = std::exp(a * dt);
      p.bbar[i * n + j] = std::expm1(a * dt) / a * b.value[i * n + j];
    }
  }
  return p;
}

void S3MBlock::validate() const {
  for (double v : log_dt.value.data()) {
    const double dt = std::exp(v);
    if (!(dt > kMinDt && dt < kMaxDt)) throw InvalidConfig("S3M step size outside (1e-5, 1)");
  }
  for (const Parameter* p : {&a_raw, &b, &c, &d}) {
    if (!p->value.all_finite()) throw InvalidConfig("S3M parameter " + p->name + " is not finite");
  }
}

void S3MBlock::project() {
  const double lo = std::log(kMinDt) + 1e-9, hi = std::log(kMaxDt) - 1e-9;
  for (auto& v : log_dt.value.data()) v = std::clamp(v, lo, hi);
}

Var S3MBlock::scan(Tape& tape, Var x) {
  validate();
  return s3m_scan(x, tape.param(a_raw), tape.param(log_dt), tape.param(b), tape.param(c),
                  tape.param(d));
}

Var s3m_scan(Var x, Var a_raw, Var log_dt, Var b, Var c, Var d) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2) throw ShapeError("s3m_scan expects C x L input");
  const std::size_t ch = xv.dim(0), len = xv.dim(1);
  const std::size_t rows = a_raw.value().dim(0), n = a_raw.value().dim(1);
  check_rows(rows, ch);
  if (log_dt.numel() != rows || b.shape() != a_raw.shape() || c.shape() != a_raw.shape() ||
      d.numel() != rows) {
    throw ShapeError("s3m_scan: inconsistent parameter shapes");
  }

  // Discretisation, kept for the backward pass.
  std::vector<double> a(rows * n), dt(rows), abar(rows * n), bbar(rows * n), phi(rows * n);
  for (std::size_t i = 0; i < rows; ++i) {
    dt[i] = std::exp(log_dt.value()[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t q = i * n + j;
      a[q] = -std::exp(a_raw.value()[q]);
      abar[q] = std::exp(a[q] * dt[i]);
      phi[q] = std::expm1(a[q] * dt[i]) / a[q];
      bbar[q] = phi[q] * b.value()[q];
    }
  }
  auto states = std::make_shared<std::vector<double>>(ch * len * n);
  Tensor z({ch, len});
  const bool keep = x.tape().grad_enabled();
  for (std::size_t r = 0; r < ch; ++r) {
    const std::size_t pr = rows == 1 ? 0 : r;
    scan_row(xv.data().data() + r * len, len, abar.data() + pr * n, bbar.data() + pr * n,
             c.value().data().data() + pr * n, d.value()[pr], n, z.data().data() + r * len,
             keep ? states->data() + r * len * n : nullptr);
  }

  const NodeId ix = x.id(), ia = a_raw.id(), idt = log_dt.id(), ib = b.id(), ic = c.id(), id = d.id();
  return x.tape().record(
      std::move(z), {x, a_raw, log_dt, b, c, d},
      [=](Tape& t, NodeId self) {
        const Tensor& gz = t.grad(self);
        const Tensor& xv = t.value(ix);
        const Tensor& bv = t.value(ib);
        const Tensor& cv = t.value(ic);
        const Tensor& dv = t.value(id);
        Tensor* gx = t.grad_buffer(ix);
        Tensor* ga = t.grad_buffer(ia);
        Tensor* gdt = t.grad_buffer(idt);
        Tensor* gb = t.grad_buffer(ib);
        Tensor* gc = t.grad_buffer(ic);
        Tensor* gd = t.grad_buffer(id);
        std::vector<double> g_abar(rows * n, 0.0), g_bbar(rows * n, 0.0), lam(n);
        for (std::size_t r = 0; r < ch; ++r) {
          const std::size_t pr = rows == 1 ? 0 : r;
          const double* xr = xv.data().data() + r * len;
          const double* gzr = gz.data().data() + r * len;
          const double* er = states->data() + r * len * n;
          const double* cr = cv.data().data() + pr * n;
          const double* ab = abar.data() + pr * n;
          const double* bb = bbar.data() + pr * n;
          double* gab = g_abar.data() + pr * n;
          double* gbb = g_bbar.data() + pr * n;
          std::fill(lam.begin(), lam.end(), 0.0);
          double gd_acc = 0.0;
          for (std::size_t k = len; k-- > 0;) {
            const double g = gzr[k];
            const double xk = xr[k];
            gd_acc += g * xk;
            double gxk = dv[pr] * g;
            const double* ek = er + k * n;
            const double* eprev = k > 0 ? er + (k - 1) * n : nullptr;
            for (std::size_t j = 0; j < n; ++j) {
              if (gc) (*gc)[pr * n + j] += g * ek[j];
              lam[j] = cr[j] * g + ab[j] * lam[j];
              gxk += bb[j] * lam[j];
              gbb[j] += lam[j] * xk;
              if (eprev) gab[j] += lam[j] * eprev[j];
            }
            if (gx) (*gx)[r * len + k] += gxk;
          }
          if (gd) (*gd)[pr] += gd_acc;
        }
        for (std::size_t i = 0; i < rows; ++i) {
          double gdt_acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t q = i * n + j;
            const double bq = bv[q];
            // abar = exp(a dt), bbar = phi(a, dt) b with phi = expm1(a dt)/a.
            const double dphi_da = (dt[i] * abar[q] - phi[q]) / a[q];
            const double dphi_ddt = abar[q];
            const double ga_q = g_abar[q] * dt[i] * abar[q] + g_bbar[q] * bq * dphi_da;
            gdt_acc += g_abar[q] * a[q] * abar[q] + g_bbar[q] * bq * dphi_ddt;
            if (ga) (*ga)[q] += ga_q * a[q];
            if (gb) (*gb)[q] += g_bbar[q] * phi[q];
          }
          if (gdt) (*gdt)[i] += gdt_acc * dt[i];
        }
      });
}

}  // namespace loongx::cs3
