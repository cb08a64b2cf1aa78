#pragma once

#include <optional>
#include <string>
#include <vector>

#include "loongx/diffusion/denoiser.h"
#include "loongx/numerics/optim.h"

namespace loongx::diffusion {

enum class VParamUpdate {
  Euler,  // I_{t-1/T} = I_t - v / T, for every schedule
  DDIM    // alpha-bar kinds: invert (I_t, v) and re-noise at the next time
};

struct SamplerConfig {
  std::size_t steps = 8;
  double guidance = 4.0;
  VParamUpdate update = VParamUpdate::Euler;
};

/// w * v_c + (1 - w) * v_u evaluated as v_u + w (v_c - v_u); w = 1 and w = 0
/// return v_c and v_u exactly.
Tensor guided_velocity(const Tensor& v_cond, const Tensor& v_uncond, double w);

/// Starts from I_1 = noisify(source, eps, 1), eps drawn at single precision
/// like the stored corpus, and takes `steps` uniform steps
/// to t = 0. Euler steps are evaluated in cumulative form
/// I_{t_k} = I_1 - (k / T) * mean(v_0 .. v_{k-1}), which equals the stepwise
/// recursion in exact arithmetic. Throws NonFiniteError naming the step when
/// the trajectory leaves the finite range.
Tensor sample(VelocityModel& model, const Tensor& source, const std::optional<Tensor>& cond,
              const SamplerConfig& cfg, const Schedule& sched, Rng& rng);

struct TrainExample {
  const Tensor* target = nullptr;  // I_0
  const Tensor* source = nullptr;
  std::optional<Var> cond;         // absent = null token
};

struct LossOptions {
  double p_uncond = 0.1;
  double t_min = 0.05;  // training times are drawn from U[t_min, 1]
};

/// Mean over the batch of mse(v_theta(I_t, t), v_target). Draws t, eps and the
/// condition dropout from rng.
Var velocity_loss(Tape& tape, VelocityModel& model, const std::vector<TrainExample>& batch, const Schedule& sched,
                  const LossOptions& opt, Rng& rng);

/// One optimizer update of `params` on the velocity loss. Throws
/// NonFiniteError and leaves parameters untouched when the loss or a
/// gradient is non-finite.
double train_step(VelocityModel& model, const ParamList& params, const std::vector<TrainExample>& batch,
                  const Schedule& sched, const LossOptions& opt, AdamW& optimizer, Rng& rng);

}  // namespace loongx::diffusion
