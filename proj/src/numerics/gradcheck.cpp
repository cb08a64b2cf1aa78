#include "loongx/numerics/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "loongx/numerics/errors.h"

namespace loongx {

namespace {

double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

}  // namespace

double finite_diff_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double step) {
  Tensor analytic;
  {
    Tape tape;
    Var xv = tape.input(x, true);
    Var loss = f(tape, xv);
    tape.backward(loss);
    analytic = tape.grad(xv);
  }
  auto eval = [&](const Tensor& at) {
    Tape tape(false);
    return f(tape, tape.input(at, false)).value().item();
  };
  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double fp = eval(probe);
    probe[i] = orig - step;
    const double fm = eval(probe);
    probe[i] = orig;
    worst = std::max(worst, rel_err(analytic[i], (fp - fm) / (2.0 * step)));
  }
  return worst;
}

double finite_diff_check_params(const std::function<Var(Tape&)>& f, const ParamList& params,
                                const ParamCheckOptions& opt) {
  for (auto* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(f(tape));
  }
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad);

  auto eval = [&]() {
    Tape tape(false);
    return f(tape).value().item();
  };
  Rng rng(opt.seed);
  double worst = 0.0;
  for (std::size_t q = 0; q < params.size(); ++q) {
    Parameter& p = *params[q];
    std::vector<std::size_t> coords(p.value.numel());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (opt.max_coords > 0 && coords.size() > opt.max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(opt.max_coords);
    }
    for (auto i : coords) {
      const double orig = p.value[i];
      p.value[i] = orig + opt.step;
      const double fp = eval();
      p.value[i] = orig - opt.step;
      const double fm = eval();
      p.value[i] = orig;
      worst = std::max(worst, rel_err(analytic[q][i], (fp - fm) / (2.0 * opt.step)));
    }
  }
  for (auto* p : params) p->zero_grad();
  return worst;
}

}  // namespace loongx
