#include "loongx/diffusion/schedule.h"

#include <cmath>
#include <numbers>

#include "loongx/numerics/errors.h"
#include "loongx/numerics/io.h"

namespace loongx::diffusion {

ScheduleKind parse_schedule(const std::string& name) {
  if (name == "vparam-cosine" || name == "cosine") return ScheduleKind::VParamCosine;
  if (name == "linear") return ScheduleKind::Linear;
  if (name == "rectified-flow" || name == "rectified_flow") return ScheduleKind::RectifiedFlow;
  throw InvalidConfig("unknown schedule '" + name + "' (expected vparam-cosine, linear or rectified-flow)");
}

std::string schedule_name(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::VParamCosine: return "vparam-cosine";
    case ScheduleKind::Linear: return "linear";
    case ScheduleKind::RectifiedFlow: return "rectified-flow";
  }
  return "?";
}

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("diffusion time must lie in [0, 1], got " + fmt_double(t));
}

double Schedule::abar(double t) const {
  check_time(t);
  constexpr double d = kScheduleDelta;
  double f = 0.0;
  switch (kind_) {
    case ScheduleKind::VParamCosine: {
      const double c = std::cos(0.5 * std::numbers::pi * t);
      f = c * c;
      break;
    }
    case ScheduleKind::Linear: f = 1.0 - t; break;
    case ScheduleKind::RectifiedFlow: {
      const double s = (1.0 - t) * (1.0 - t);
      f = s / (s + t * t);
      break;
    }
  }
  return d + (1.0 - 2.0 * d) * f;
}

double Schedule::signal_coef(double t) const {
  check_time(t);
  return is_flow() ? 1.0 - t : std::sqrt(abar(t));
}

double Schedule::noise_coef(double t) const {
  check_time(t);
  return is_flow() ? t : std::sqrt(1.0 - abar(t));
}

namespace {
void check_pair(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

Tensor combine(const Tensor& x, double a, const Tensor& y, double b) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = a * x[i] + b * y[i];
  return out;
}

void check_abar(double abar) {
  if (!(abar >= 0.0 && abar <= 1.0)) throw DomainError("abar must lie in [0, 1], got " + fmt_double(abar));
}
}  // namespace

Tensor noisify(const Tensor& i0, const Tensor& eps, double t, const Schedule& s) {
  check_pair(i0, eps, "noisify");
  if (s.is_flow()) {
    check_time(t);
    return combine(i0, 1.0 - t, eps, t);
  }
  return vparam_noisify(i0, eps, s.abar(t));
}

Tensor velocity_target(const Tensor& i0, const Tensor& eps, double t, const Schedule& s) {
  check_pair(i0, eps, "velocity_target");
  if (s.is_flow()) {
    check_time(t);
    return combine(eps, 1.0, i0, -1.0);
  }
  return vparam_velocity(i0, eps, s.abar(t));
}

Tensor vparam_noisify(const Tensor& i0, const Tensor& eps, double abar) {
  check_abar(abar);
  check_pair(i0, eps, "vparam_noisify");
  return combine(i0, std::sqrt(abar), eps, std::sqrt(1.0 - abar));
}

Tensor vparam_velocity(const Tensor& i0, const Tensor& eps, double abar) {
  check_abar(abar);
  check_pair(i0, eps, "vparam_velocity");
  return combine(eps, std::sqrt(abar), i0, -std::sqrt(1.0 - abar));
}

std::pair<Tensor, Tensor> vparam_recover(const Tensor& it, const Tensor& v, double abar) {
  check_abar(abar);
  check_pair(it, v, "vparam_recover");
  const double a = std::sqrt(abar), b = std::sqrt(1.0 - abar);
  return {combine(it, a, v, -b), combine(it, b, v, a)};
}

}  // namespace loongx::diffusion
