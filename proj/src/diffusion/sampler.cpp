#include "loongx/diffusion/sampler.h"

#include <cmath>

#include "loongx/numerics/errors.h"
#include "loongx/numerics/ops.h"

namespace loongx::diffusion {

Tensor guided_velocity(const Tensor& v_cond, const Tensor& v_uncond, double w) {
  if (v_cond.shape() != v_uncond.shape()) throw ShapeError("guided_velocity: shape mismatch");
  if (w == 1.0) return v_cond;
  if (w == 0.0) return v_uncond;
  Tensor out(v_cond.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = v_uncond[i] + w * (v_cond[i] - v_uncond[i]);
  return out;
}

namespace {

Tensor eval_velocity(VelocityModel& model, const Tensor& x, const Tensor& source, double t,
                     const std::optional<Tensor>& cond, double w) {
  Tape tape(false);
  Var xv = tape.constant(x);
  auto run = [&](bool conditional) {
    std::optional<Var> c;
    if (conditional) c = tape.constant(*cond);
    return model.velocity(tape, xv, source, t, c).value();
  };
  if (!cond || w == 0.0) return run(false);
  if (w == 1.0) return run(true);
  const Tensor vc = run(true);
  return guided_velocity(vc, run(false), w);
}

}  // namespace

Tensor sample(VelocityModel& model, const Tensor& source, const std::optional<Tensor>& cond,
              const SamplerConfig& cfg, const Schedule& sched, Rng& rng) {
  if (cfg.steps == 0) throw InvalidConfig("sampler: steps must be >= 1");
  if (!(cfg.guidance >= 0.0)) throw InvalidConfig("sampler: guidance must be >= 0");
  Tensor eps(source.shape());
  for (auto& v : eps.data()) v = double(float(draw_normal(rng)));
  const Tensor x1 = noisify(source, eps, 1.0, sched);
  const double T = double(cfg.steps);
  const bool ddim = !sched.is_flow() && cfg.update == VParamUpdate::DDIM;

  Tensor x = x1, mean_v(source.shape(), 0.0);
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    const double t = 1.0 - double(k) / T;
    const double next = 1.0 - double(k + 1) / T;
    Tensor v;
    try {
      v = eval_velocity(model, x, source, t, cond, cfg.guidance);
    } catch (const NonFiniteError& e) {
      throw NonFiniteError("sampling step " + std::to_string(k) + ": " + e.what());
    }
    if (ddim) {
      const auto [i0, e] = vparam_recover(x, v, sched.abar(t));
      x = noisify(i0, e, next, sched);
    } else {
      const double n = double(k + 1), frac = n / T;
      for (std::size_t i = 0; i < x.numel(); ++i) {
        mean_v[i] += (v[i] - mean_v[i]) / n;
        x[i] = x1[i] - frac * mean_v[i];
      }
    }
    if (!x.all_finite()) throw NonFiniteError("sampling step " + std::to_string(k) + ": non-finite image");
  }
  return x;
}

Var velocity_loss(Tape& tape, VelocityModel& model, const std::vector<TrainExample>& batch, const Schedule& sched,
                  const LossOptions& opt, Rng& rng) {
  if (batch.empty()) throw DataError("velocity_loss: empty batch");
  if (!(opt.t_min >= 0.0 && opt.t_min <= 1.0)) throw InvalidConfig("velocity_loss: t_min must lie in [0, 1]");
  Var total;
  for (const auto& ex : batch) {
    const double t = draw_uniform(rng, opt.t_min, 1.0);
    Tensor eps(ex.target->shape());
    for (auto& v : eps.data()) v = draw_normal(rng);
    const bool drop = draw_uniform(rng) < opt.p_uncond;
    const Tensor xt = noisify(*ex.target, eps, t, sched);
    const Tensor vt = velocity_target(*ex.target, eps, t, sched);
    Var pred = model.velocity(tape, tape.constant(xt), *ex.source, t, drop ? std::nullopt : ex.cond);
    Var l = mse_loss(pred, tape.constant(vt));
    total = total.valid() ? add(total, l) : l;
  }
  return scale(total, 1.0 / double(batch.size()));
}

double train_step(VelocityModel& model, const ParamList& params, const std::vector<TrainExample>& batch,
                  const Schedule& sched, const LossOptions& opt, AdamW& optimizer, Rng& rng) {
  optimizer.zero_grad(params);
  Tape tape;
  Var loss = velocity_loss(tape, model, batch, sched, opt, rng);
  const double value = loss.value().item();
  if (!std::isfinite(value)) throw NonFiniteError("train_step: non-finite loss");
  tape.backward(loss);
  for (const auto* p : params) {
    if (!p->grad.all_finite()) throw NonFiniteError("train_step: non-finite gradient for " + p->name);
  }
  optimizer.step(params);
  return value;
}

}  // namespace loongx::diffusion
