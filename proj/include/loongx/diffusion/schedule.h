#pragma once

#include <string>
#include <utility>

#include "loongx/numerics/tensor.h"

namespace loongx::diffusion {

constexpr double kScheduleDelta = 1e-4;

enum class ScheduleKind { VParamCosine, Linear, RectifiedFlow };

/// Accepts vparam-cosine (or cosine), linear, rectified-flow (or rectified_flow).
ScheduleKind parse_schedule(const std::string& name);
std::string schedule_name(ScheduleKind k);

/// Cumulative signal level abar(t) on t in [0, 1], with abar(0) = 1 - delta
/// and abar(1) = delta, strictly decreasing.
///
/// The two alpha-bar kinds interpolate as I_t = sqrt(abar) I_0 + sqrt(1 - abar) eps
/// with target v = sqrt(abar) eps - sqrt(1 - abar) I_0. Rectified flow uses
/// I_t = (1 - t) I_0 + t eps with v = eps - I_0; its abar is the one with the
/// same signal-to-noise ratio, (1-t)^2 / ((1-t)^2 + t^2), squeezed into [delta, 1-delta].
class Schedule {
 public:
  explicit Schedule(ScheduleKind kind = ScheduleKind::RectifiedFlow) : kind_(kind) {}

  ScheduleKind kind() const { return kind_; }
  bool is_flow() const { return kind_ == ScheduleKind::RectifiedFlow; }
  double abar(double t) const;

  /// Coefficients with I_t = a(t) I_0 + b(t) eps.
  double signal_coef(double t) const;
  double noise_coef(double t) const;

 private:
  ScheduleKind kind_;
};

/// Throws DomainError unless 0 <= t <= 1.
void check_time(double t);

Tensor noisify(const Tensor& i0, const Tensor& eps, double t, const Schedule& s);
Tensor velocity_target(const Tensor& i0, const Tensor& eps, double t, const Schedule& s);

/// Alpha-bar forms at an explicit abar in [0, 1].
Tensor vparam_noisify(const Tensor& i0, const Tensor& eps, double abar);
Tensor vparam_velocity(const Tensor& i0, const Tensor& eps, double abar);
/// Inverts (I_t, v) back to (I_0, eps): I_0 = sqrt(abar) I_t - sqrt(1-abar) v,
/// eps = sqrt(1-abar) I_t + sqrt(abar) v.
std::pair<Tensor, Tensor> vparam_recover(const Tensor& it, const Tensor& v, double abar);

}  // namespace loongx::diffusion
