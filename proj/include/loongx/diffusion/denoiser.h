#pragma once

#include <optional>
#include <string>

#include "loongx/diffusion/schedule.h"
#include "loongx/numerics/io.h"
#include "loongx/numerics/tape.h"

namespace loongx::diffusion {

/// Velocity field v(I_t, t | source, condition). An absent condition selects
/// the null token.
class VelocityModel {
 public:
  virtual ~VelocityModel() = default;
  /// x_t: [Ch x H x W]. Returns a Var of the same shape.
  virtual Var velocity(Tape& tape, Var x_t, const Tensor& source, double t, std::optional<Var> cond) = 0;
};

enum class Prediction {
  Data,     // network predicts I_0 - source; velocity follows from (I_t, I_0)
  Velocity  // network output is the velocity
};

struct DenoiserConfig {
  std::size_t channels = 3, height = 32, width = 32;
  std::size_t hidden = 64;
  std::size_t embed = 64;
  std::size_t time_freqs = 8;
  std::size_t pos_freqs = 4;
  std::size_t patch = 3;  // odd side of the source neighbourhood fed per pixel
  Prediction prediction = Prediction::Data;
  /// Floor on the noise coefficient when converting a data prediction.
  double min_noise = 0.05;

  Shape image_shape() const { return {channels, height, width}; }
  void validate() const;
  void apply_kv(const KeyValues& kv, const std::string& prefix);
};

/// Per-pixel conditional MLP. Each pixel sees x_t, the source neighbourhood
/// and Fourier features of its coordinates; both hidden layers are
/// FiLM-modulated by relu(condition projection + time embedding).
/// Output layer and FiLM head start at zero.
class Denoiser : public VelocityModel {
 public:
  Denoiser() = default;
  Denoiser(const DenoiserConfig& cfg, const Shape& cond_shape, const Schedule& sched, const std::string& prefix,
           Rng& rng);

  Var velocity(Tape& tape, Var x_t, const Tensor& source, double t, std::optional<Var> cond) override;

  ParamList params();
  const DenoiserConfig& config() const { return cfg_; }
  const Shape& cond_shape() const { return cond_shape_; }

 private:
  DenoiserConfig cfg_;
  Shape cond_shape_;
  Schedule sched_;
  Tensor pos_;  // [P x 4 * pos_freqs]
  Parameter w_in_, b_in_, w_mid_, b_mid_, w_out_, b_out_;
  Parameter cond_w_, cond_b_, null_, time_w_, time_b_, film_w_, film_b_;
};

/// sin/cos features of t at geometrically spaced frequencies, [1 x 2 * n].
Tensor time_features(double t, std::size_t n);
/// Row p = y * W + x holds the source values of the patch around (y, x) with
/// edge replication, channel-major then row-major within the patch.
Tensor source_patches(const Tensor& src, std::size_t patch);

}  // namespace loongx::diffusion
