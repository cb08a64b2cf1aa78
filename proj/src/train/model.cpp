#include "loongx/train/model.h"

#include "loongx/numerics/errors.h"
#include "loongx/numerics/ops.h"

namespace loongx::train {

std::vector<Modality> group_members(Group g) {
  if (g == Group::A) return {Modality::EEG, Modality::PPG};
  return {Modality::fNIRS, Modality::Motion};
}

LoongXModel::LoongXModel(const TrainConfig& cfg) : cfg_(cfg), sched_(cfg.schedule), text_(cfg.text) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  std::map<Modality, Shape> shapes;
  for (const auto& [m, c] : cfg_.encoders) {
    encoders_.emplace(m, cs3::CS3Encoder(c, "enc." + sigproc::modality_name(m) + ".", rng));
    shapes[m] = {c.C_prime, c.d_prime};
  }
  fusion_ = dgf::FusionNet(cfg_.fusion, shapes, cfg_.text.dim, "fusion.", rng);
  denoiser_ = diffusion::Denoiser(cfg_.denoiser, fusion_.latent_shape(), sched_, "den.", rng);
  check_unique_names(params());
}

std::map<Modality, Var> LoongXModel::encode(Tape& tape, const Record& r, bool train, Rng& rng) {
  std::map<Modality, Var> out;
  for (auto& [m, enc] : encoders_) {
    auto it = r.signals.find(m);
    if (it == r.signals.end()) throw DataError("record " + r.id + " lacks " + sigproc::modality_name(m));
    out[m] = enc.forward(tape, it->second, train, rng);
  }
  return out;
}

Var LoongXModel::group_embedding(const std::map<Modality, Var>& enc, Group g) {
  Var acc;
  const auto members = group_members(g);
  for (auto m : members) {
    Var pooled = mean_axis(enc.at(m), 0, true);
    acc = acc.valid() ? add(acc, pooled) : pooled;
  }
  return scale(acc, 1.0 / double(members.size()));
}

Var LoongXModel::condition(Tape& tape, const Record& r, bool train, Rng& rng) {
  dgf::FusionInputs in;
  in.embeddings = encode(tape, r, train, rng);
  if (cfg_.use_text) in.prompt = tape.constant(text_.tokens(r.text));
  return fusion_.forward(tape, in).latent;
}

std::optional<Tensor> LoongXModel::condition_value(const Record& r) {
  if (cfg_.condition == ConditionMode::None) return std::nullopt;
  Tape tape(false);
  Rng unused(0);
  return condition(tape, r, false, unused).value();
}

Tensor LoongXModel::edit(const Record& r, const diffusion::SamplerConfig& sampler, Rng& rng) {
  return diffusion::sample(denoiser_, r.source, condition_value(r), sampler, sched_, rng);
}

ParamList LoongXModel::encoder_params() {
  ParamList out;
  for (auto& [m, enc] : encoders_) {
    const auto p = enc.params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

ParamList LoongXModel::params() {
  ParamList out = encoder_params();
  for (auto* p : fusion_.params()) out.push_back(p);
  for (auto* p : denoiser_.params()) out.push_back(p);
  return out;
}

void LoongXModel::project() {
  for (auto& [m, enc] : encoders_) enc.project();
}

void LoongXModel::save(Checkpoint& ck) {
  store_params(ck, params());
  ck.meta["config"] = format_kv(cfg_.to_kv());
  ck.meta["text_hash"] = hex64(text_.hash());
}

void LoongXModel::load(const Checkpoint& ck) {
  restore_params(ck, params());
  auto it = ck.meta.find("text_hash");
  if (it != ck.meta.end() && it->second != hex64(text_.hash())) {
    throw DataError("checkpoint was written with a different text embedder");
  }
}

}  // namespace loongx::train
