#include "loongx/diffusion/denoiser.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "loongx/numerics/errors.h"
#include "loongx/numerics/ops.h"

namespace loongx::diffusion {

void DenoiserConfig::validate() const {
  for (auto [name, v] : {std::pair{"channels", channels}, {"height", height}, {"width", width}, {"hidden", hidden},
                         {"embed", embed}, {"time_freqs", time_freqs}, {"pos_freqs", pos_freqs}}) {
    if (v == 0) throw InvalidConfig(std::string("denoiser config: ") + name + " must be >= 1");
  }
  if (patch % 2 == 0) throw InvalidConfig("denoiser config: patch must be odd");
  if (!(min_noise > 0.0 && min_noise <= 1.0)) throw InvalidConfig("denoiser config: min_noise must lie in (0, 1]");
}

void DenoiserConfig::apply_kv(const KeyValues& kv, const std::string& prefix) {
  const std::string p = prefix + ".";
  kv_read(kv, p + "hidden", hidden);
  kv_read(kv, p + "embed", embed);
  kv_read(kv, p + "time_freqs", time_freqs);
  kv_read(kv, p + "pos_freqs", pos_freqs);
  kv_read(kv, p + "patch", patch);
  kv_read(kv, p + "min_noise", min_noise);
  std::string pred;
  kv_read(kv, p + "prediction", pred);
  if (pred == "data") {
    prediction = Prediction::Data;
  } else if (pred == "velocity") {
    prediction = Prediction::Velocity;
  } else if (!pred.empty()) {
    throw InvalidConfig("config key " + p + "prediction: expected data or velocity");
  }
}

Tensor time_features(double t, std::size_t n) {
  Tensor f({1, 2 * n});
  for (std::size_t k = 0; k < n; ++k) {
    const double freq = n == 1 ? 1.0 : std::pow(100.0, double(k) / double(n - 1));
    f[k] = std::sin(freq * t);
    f[n + k] = std::cos(freq * t);
  }
  return f;
}

Tensor source_patches(const Tensor& src, std::size_t patch) {
  if (src.rank() != 3) throw ShapeError("source_patches: expected [Ch x H x W], got " + shape_str(src.shape()));
  const std::size_t Ch = src.dim(0), H = src.dim(1), W = src.dim(2);
  const auto r = static_cast<std::ptrdiff_t>(patch / 2);
  Tensor out({H * W, Ch * patch * patch});
  auto clamp = [](std::ptrdiff_t v, std::size_t n) { return std::size_t(std::clamp<std::ptrdiff_t>(v, 0, n - 1)); };
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      double* row = &out.data()[(y * W + x) * out.dim(1)];
      for (std::size_t c = 0; c < Ch; ++c) {
        for (std::ptrdiff_t dy = -r; dy <= r; ++dy) {
          for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
            *row++ = src.data()[(c * H + clamp(std::ptrdiff_t(y) + dy, H)) * W + clamp(std::ptrdiff_t(x) + dx, W)];
          }
        }
      }
    }
  }
  return out;
}

namespace {
Tensor position_features(std::size_t H, std::size_t W, std::size_t n) {
  Tensor f({H * W, 4 * n});
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      const double u = (x + 0.5) / W, v = (y + 0.5) / H;
      double* row = &f.data()[(y * W + x) * 4 * n];
      for (std::size_t k = 0; k < n; ++k) {
        const double w = std::numbers::pi * double(1u << k);
        row[4 * k] = std::sin(w * u);
        row[4 * k + 1] = std::cos(w * u);
        row[4 * k + 2] = std::sin(w * v);
        row[4 * k + 3] = std::cos(w * v);
      }
    }
  }
  return f;
}
}  // namespace

Denoiser::Denoiser(const DenoiserConfig& cfg, const Shape& cond_shape, const Schedule& sched,
                   const std::string& prefix, Rng& rng)
    : cfg_(cfg), cond_shape_(cond_shape), sched_(sched) {
  cfg_.validate();
  const std::size_t H = cfg_.hidden, E = cfg_.embed, Ch = cfg_.channels;
  const std::size_t F = Ch + Ch * cfg_.patch * cfg_.patch + 4 * cfg_.pos_freqs;
  const std::size_t n_cond = shape_numel(cond_shape_);
  pos_ = position_features(cfg_.height, cfg_.width, cfg_.pos_freqs);
  auto he = [](std::size_t fan_in) { return std::sqrt(2.0 / double(fan_in)); };
  w_in_ = Parameter(prefix + "w_in", Tensor::randn({F, H}, rng, he(F)));
  b_in_ = Parameter(prefix + "b_in", Tensor::zeros({1, H}));
  w_mid_ = Parameter(prefix + "w_mid", Tensor::randn({H, H}, rng, he(H)));
  b_mid_ = Parameter(prefix + "b_mid", Tensor::zeros({1, H}));
  w_out_ = Parameter(prefix + "w_out", Tensor::zeros({H, Ch}));
  b_out_ = Parameter(prefix + "b_out", Tensor::zeros({1, Ch}));
  cond_w_ = Parameter(prefix + "cond_w", Tensor::randn({n_cond, E}, rng, 1.0 / std::sqrt(double(n_cond))));
  cond_b_ = Parameter(prefix + "cond_b", Tensor::zeros({1, E}));
  null_ = Parameter(prefix + "null", Tensor::randn({1, E}, rng, 0.1));
  time_w_ = Parameter(prefix + "time_w", Tensor::randn({2 * cfg_.time_freqs, E}, rng, 1.0 / std::sqrt(double(cfg_.time_freqs))));
  time_b_ = Parameter(prefix + "time_b", Tensor::zeros({1, E}));
  film_w_ = Parameter(prefix + "film_w", Tensor::zeros({E, 4 * H}));
  film_b_ = Parameter(prefix + "film_b", Tensor::zeros({1, 4 * H}));
}

Var Denoiser::velocity(Tape& tape, Var x_t, const Tensor& source, double t, std::optional<Var> cond) {
  check_time(t);
  const Shape img = cfg_.image_shape();
  if (x_t.shape() != img || source.shape() != img) {
    throw ShapeError("denoiser: expected images " + shape_str(img) + ", got " + shape_str(x_t.shape()) + " and " +
                     shape_str(source.shape()));
  }
  const std::size_t Ch = cfg_.channels, P = cfg_.height * cfg_.width, H = cfg_.hidden;

  Var c_emb;
  if (cond) {
    if (cond->shape() != cond_shape_) {
      throw ShapeError("denoiser: condition " + shape_str(cond->shape()) + ", expected " + shape_str(cond_shape_));
    }
    c_emb = linear(reshape(*cond, {1, shape_numel(cond_shape_)}), tape.param(cond_w_), tape.param(cond_b_));
  } else {
    c_emb = tape.param(null_);
  }
  Var t_emb = linear(tape.constant(time_features(t, cfg_.time_freqs)), tape.param(time_w_), tape.param(time_b_));
  Var e = relu(add(c_emb, t_emb));
  Var film = linear(e, tape.param(film_w_), tape.param(film_b_));
  auto coef = [&](std::size_t i) { return slice(film, 1, i * H, H); };

  Var pixels = transpose(reshape(x_t, {Ch, P}));
  Var feats = concat({pixels, tape.constant(source_patches(source, cfg_.patch)), tape.constant(pos_)}, 1);
  Var h = relu(linear(feats, tape.param(w_in_), tape.param(b_in_)));
  h = add(mul(add_scalar(coef(0), 1.0), h), coef(1));
  h = relu(linear(h, tape.param(w_mid_), tape.param(b_mid_)));
  h = add(mul(add_scalar(coef(2), 1.0), h), coef(3));
  Var out = reshape(transpose(linear(h, tape.param(w_out_), tape.param(b_out_))), img);

  if (cfg_.prediction == Prediction::Velocity) return out;
  // I_0 estimate = source + out; v = (a I_t - I_0) / b for alpha-bar kinds,
  // (I_t - I_0) / t for flow.
  Var i0 = add(tape.constant(source), out);
  const double a = sched_.is_flow() ? 1.0 : sched_.signal_coef(t);
  const double b = std::max(sched_.noise_coef(t), cfg_.min_noise);
  return scale(sub(scale(x_t, a), i0), 1.0 / b);
}

ParamList Denoiser::params() {
  return {&w_in_, &b_in_, &w_mid_, &b_mid_, &w_out_, &b_out_, &cond_w_, &cond_b_,
          &null_, &time_w_, &time_b_, &film_w_, &film_b_};
}

}  // namespace loongx::diffusion
