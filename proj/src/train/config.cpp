#include "loongx/train/config.h"

#include "loongx/numerics/errors.h"

namespace loongx::train {

namespace {

const char* key_of(Modality m) {
  switch (m) {
    case Modality::EEG: return "eeg";
    case Modality::fNIRS: return "fnirs";
    case Modality::PPG: return "ppg";
    case Modality::Motion: return "motion";
  }
  return "?";
}

std::string num(double v) { return fmt_double(v); }
std::string num(std::size_t v) { return std::to_string(v); }

void read_phase(const KeyValues& kv, const std::string& p, PhaseConfig& ph) {
  kv_read(kv, p + ".epochs", ph.epochs);
  kv_read(kv, p + ".batch", ph.batch);
  kv_read(kv, p + ".lr", ph.lr);
  kv_read(kv, p + ".weight_decay", ph.weight_decay);
}

void write_phase(KeyValues& kv, const std::string& p, const PhaseConfig& ph) {
  kv[p + ".epochs"] = num(ph.epochs);
  kv[p + ".batch"] = num(ph.batch);
  kv[p + ".lr"] = num(ph.lr);
  kv[p + ".weight_decay"] = num(ph.weight_decay);
}

}  // namespace

ConditionMode parse_condition(const std::string& s) {
  if (s == "signals") return ConditionMode::Signals;
  if (s == "none") return ConditionMode::None;
  if (s == "noise") return ConditionMode::Noise;
  throw InvalidConfig("unknown condition mode '" + s + "' (signals, none, noise)");
}

std::string condition_name(ConditionMode m) {
  switch (m) {
    case ConditionMode::Signals: return "signals";
    case ConditionMode::None: return "none";
    case ConditionMode::Noise: return "noise";
  }
  return "?";
}

TrainConfig::TrainConfig() {
  for (auto m : sigproc::kModalities) encoders[m] = cs3::default_config(m);
}

void TrainConfig::validate() const {
  text.validate();
  fusion.validate();
  denoiser.validate();
  for (const auto& [m, c] : encoders) {
    c.validate();
    if (c.d_prime != text.dim) {
      throw InvalidConfig(std::string("cs3.") + key_of(m) + ".d_prime must equal text.dim for contrastive alignment");
    }
  }
  if (!(tau > 0.0)) throw InvalidConfig("tau must be > 0");
  for (const auto* ph : {&pretrain, &finetune}) {
    if (ph->batch == 0) throw InvalidConfig("batch size must be >= 1");
    if (!(ph->lr > 0.0) || !(ph->weight_decay >= 0.0)) throw InvalidConfig("lr must be > 0 and weight_decay >= 0");
  }
  if (pretrain.batch < 2) throw InvalidConfig("pretrain.batch must be >= 2 for in-batch negatives");
  if (!(loss.p_uncond >= 0.0 && loss.p_uncond <= 1.0)) throw InvalidConfig("p_uncond must lie in [0, 1]");
  if (sampler.steps == 0) throw InvalidConfig("sampler.steps must be >= 1");
  if (!(divergence_factor > 1.0) || divergence_patience == 0) throw InvalidConfig("bad divergence settings");
}

void TrainConfig::apply_kv(const KeyValues& kv) {
  std::size_t s = seed;
  kv_read(kv, "seed", s);
  seed = s;
  for (auto& [m, c] : encoders) c.apply_kv(kv, std::string("cs3.") + key_of(m));
  fusion.apply_kv(kv, "fusion");
  denoiser.apply_kv(kv, "denoiser");
  std::string name;
  kv_read(kv, "schedule", name);
  if (!name.empty()) schedule = diffusion::parse_schedule(name);
  text.apply_kv(kv, "text");
  kv_read(kv, "use_text", use_text);
  name.clear();
  kv_read(kv, "condition", name);
  if (!name.empty()) condition = parse_condition(name);
  kv_read(kv, "tau", tau);
  read_phase(kv, "pretrain", pretrain);
  read_phase(kv, "finetune", finetune);
  kv_read(kv, "finetune.p_uncond", loss.p_uncond);
  kv_read(kv, "finetune.t_min", loss.t_min);
  kv_read(kv, "sampler.steps", sampler.steps);
  kv_read(kv, "sampler.guidance", sampler.guidance);
  name.clear();
  kv_read(kv, "sampler.update", name);
  if (name == "ddim") {
    sampler.update = diffusion::VParamUpdate::DDIM;
  } else if (name == "euler") {
    sampler.update = diffusion::VParamUpdate::Euler;
  } else if (!name.empty()) {
    throw InvalidConfig("sampler.update must be euler or ddim");
  }
  kv_read(kv, "eval_samples", eval_samples);
  kv_read(kv, "eval_every", eval_every);
  kv_read(kv, "divergence_factor", divergence_factor);
  kv_read(kv, "divergence_patience", divergence_patience);
}

KeyValues TrainConfig::to_kv() const {
  KeyValues kv;
  kv["seed"] = std::to_string(seed);
  for (const auto& [m, c] : encoders) {
    const std::string p = std::string("cs3.") + key_of(m) + ".";
    kv[p + "C"] = num(c.C);
    kv[p + "N"] = num(c.N);
    kv[p + "d"] = num(c.d);
    kv[p + "L"] = num(c.L);
    kv[p + "d_m"] = num(c.d_m);
    kv[p + "d_p"] = num(c.d_p);
    kv[p + "d_prime"] = num(c.d_prime);
    kv[p + "C_prime"] = num(c.C_prime);
    kv[p + "state_dim"] = num(c.state_dim);
    kv[p + "dropout"] = num(c.dropout);
  }
  kv["fusion.channels"] = num(fusion.channels);
  kv["fusion.length"] = num(fusion.length);
  kv["fusion.gate_hidden"] = num(fusion.block.gate_hidden);
  kv["fusion.gate_kernel"] = num(fusion.block.gate_kernel);
  kv["fusion.psi_hidden"] = num(fusion.block.psi_hidden);
  kv["fusion.rho"] = num(fusion.block.rho);
  kv["denoiser.hidden"] = num(denoiser.hidden);
  kv["denoiser.embed"] = num(denoiser.embed);
  kv["denoiser.time_freqs"] = num(denoiser.time_freqs);
  kv["denoiser.pos_freqs"] = num(denoiser.pos_freqs);
  kv["denoiser.patch"] = num(denoiser.patch);
  kv["denoiser.min_noise"] = num(denoiser.min_noise);
  kv["denoiser.prediction"] = denoiser.prediction == diffusion::Prediction::Data ? "data" : "velocity";
  kv["schedule"] = diffusion::schedule_name(schedule);
  kv["text.dim"] = num(text.dim);
  kv["text.buckets"] = num(text.buckets);
  kv["text.seed"] = std::to_string(text.seed);
  kv["use_text"] = use_text ? "true" : "false";
  kv["condition"] = condition_name(condition);
  kv["tau"] = num(tau);
  write_phase(kv, "pretrain", pretrain);
  write_phase(kv, "finetune", finetune);
  kv["finetune.p_uncond"] = num(loss.p_uncond);
  kv["finetune.t_min"] = num(loss.t_min);
  kv["sampler.steps"] = num(sampler.steps);
  kv["sampler.guidance"] = num(sampler.guidance);
  kv["sampler.update"] = sampler.update == diffusion::VParamUpdate::DDIM ? "ddim" : "euler";
  kv["eval_samples"] = num(eval_samples);
  kv["eval_every"] = num(eval_every);
  kv["divergence_factor"] = num(divergence_factor);
  kv["divergence_patience"] = num(divergence_patience);
  return kv;
}

std::uint64_t TrainConfig::hash() const { return fnv1a64(format_kv(to_kv())); }

TrainConfig load_train_config(const std::filesystem::path& path) {
  TrainConfig c;
  c.apply_kv(load_kv(path));
  c.validate();
  return c;
}

}  // namespace loongx::train
