#include "loongx/train/loop.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "loongx/numerics/errors.h"
#include "loongx/numerics/ops.h"
#include "loongx/train/ntxent.h"

namespace loongx::train {

namespace fs = std::filesystem;

namespace {

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

/// Batches of `size` over idx; a trailing batch smaller than `min_size` is dropped.
std::vector<std::vector<std::size_t>> batches(const std::vector<std::size_t>& idx, std::size_t size,
                                              std::size_t min_size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < idx.size(); i += size) {
    std::vector<std::size_t> b(idx.begin() + std::ptrdiff_t(i), idx.begin() + std::ptrdiff_t(std::min(idx.size(), i + size)));
    if (b.size() >= min_size) out.push_back(std::move(b));
  }
  return out;
}

void check_grads(const ParamList& params) {
  for (const auto* p : params) {
    if (!p->grad.all_finite()) throw NonFiniteError("non-finite gradient for " + p->name);
  }
}

Tensor normalized_rows(const Tensor& x) {
  Tensor out = x;
  const std::size_t M = x.dim(0), D = x.dim(1);
  for (std::size_t i = 0; i < M; ++i) {
    double n = 0.0;
    for (std::size_t j = 0; j < D; ++j) n += x[i * D + j] * x[i * D + j];
    n = std::sqrt(n) + 1e-12;
    for (std::size_t j = 0; j < D; ++j) out[i * D + j] /= n;
  }
  return out;
}

}  // namespace

void DivergenceMonitor::check(double window_mean, double initial, const std::string& where) {
  strikes_ = window_mean > factor_ * initial ? strikes_ + 1 : 0;
  if (strikes_ >= patience_) {
    throw DivergenceError("finetune diverged at " + where + ": mean loss " + fmt_double(window_mean) + " exceeded " +
                          fmt_double(factor_) + " x initial loss " + fmt_double(initial) + " for " +
                          std::to_string(strikes_) + " consecutive checks; lower finetune.lr");
  }
}

void write_curve(const fs::path& path, const std::vector<CurveRow>& rows, const std::string& metric) {
  std::ostringstream os;
  os << "step,epoch,split,loss," << metric << "\n";
  for (const auto& r : rows) {
    os << r.step << ',' << r.epoch << ',' << r.split << ',' << (std::isnan(r.loss) ? "" : fmt_double(r.loss)) << ','
       << fmt_double(r.metric) << "\n";
  }
  write_text(path, os.str());
}

PretrainResult pretrain(LoongXModel& model, const std::vector<Record>& data, const fs::path& out_dir) {
  if (data.empty()) throw DataError("pretrain: empty corpus");
  const auto& cfg = model.config();
  PretrainResult res;
  res.text_hash_before = model.text().hash();
  Rng rng(datasynth::sub_seed(cfg.seed, 11));
  AdamW opt({cfg.pretrain.lr, 0.9, 0.999, 1e-8, cfg.pretrain.weight_decay});
  const ParamList params = model.encoder_params();
  const std::size_t D = cfg.text.dim;
  std::vector<Tensor> text_emb;
  text_emb.reserve(data.size());
  for (const auto& r : data) text_emb.push_back(model.text().embed(r.text));
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.pretrain.epochs; ++epoch) {
    double loss_sum = 0.0, top1_sum = 0.0;
    const auto bs = batches(shuffled(data.size(), rng), cfg.pretrain.batch, std::min<std::size_t>(2, data.size()));
    for (const auto& b : bs) {
      const std::size_t M = b.size();
      opt.zero_grad(params);
      Tape tape;
      std::vector<Var> za, zb;
      Tensor q({M, D});
      for (std::size_t i = 0; i < M; ++i) {
        const auto enc = model.encode(tape, data[b[i]], true, rng);
        za.push_back(LoongXModel::group_embedding(enc, Group::A));
        zb.push_back(LoongXModel::group_embedding(enc, Group::B));
        for (std::size_t j = 0; j < D; ++j) q[i * D + j] = text_emb[b[i]][j];
      }
      Var qv = tape.constant(q);
      Var ZA = concat(za, 0), ZB = concat(zb, 0);
      Var loss = scale(add(ntxent_loss(ZA, qv, cfg.tau), ntxent_loss(ZB, qv, cfg.tau)), 0.5);
      const double value = loss.value().item();
      if (!std::isfinite(value)) throw NonFiniteError("pretrain: non-finite loss at step " + std::to_string(step));
      tape.backward(loss);
      check_grads(params);
      opt.step(params);
      model.project();
      ++step;
      Tensor fused = normalized_rows(ZA.value());
      const Tensor nb = normalized_rows(ZB.value());
      for (std::size_t k = 0; k < fused.numel(); ++k) fused[k] += nb[k];
      loss_sum += value;
      top1_sum += top1_retrieval(fused, q);
    }
    res.curve.push_back({step, epoch, "train", loss_sum / double(bs.size()), top1_sum / double(bs.size())});
  }
  res.text_hash_after = model.text().hash();
  if (res.text_hash_after != res.text_hash_before) throw std::logic_error("pretrain: text embedder changed");
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_curve(out_dir / "pretrain_curve.csv", res.curve, "top1");
    Checkpoint ck;
    model.save(ck);
    ck.meta["phase"] = "pretrain";
    save_checkpoint(out_dir / "pretrain.ckpt", ck);
  }
  return res;
}

double heldout_l1(LoongXModel& model, const std::vector<Record>& test, std::size_t limit, std::uint64_t seed) {
  const std::size_t n = limit == 0 ? test.size() : std::min(limit, test.size());
  if (n == 0) throw DataError("heldout_l1: no records");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(datasynth::sub_seed(seed, i));
    const Tensor pred = model.edit(test[i], model.config().sampler, rng);
    double l1 = 0.0;
    for (std::size_t k = 0; k < pred.numel(); ++k) l1 += std::abs(pred[k] - test[i].target[k]);
    acc += l1 / double(pred.numel());
  }
  return acc / double(n);
}

FinetuneResult finetune(LoongXModel& model, const std::vector<Record>& train, const std::vector<Record>& test,
                        const fs::path& out_dir, const std::optional<fs::path>& resume) {
  if (train.empty()) throw DataError("finetune: empty training split");
  const auto& cfg = model.config();
  const bool conditional = cfg.condition != ConditionMode::None;
  const ParamList params = model.params();
  AdamW opt({cfg.finetune.lr, 0.9, 0.999, 1e-8, cfg.finetune.weight_decay});
  Rng rng(datasynth::sub_seed(cfg.seed, 12));
  FinetuneResult res;
  std::size_t first_epoch = 1;
  DivergenceMonitor monitor(cfg.divergence_factor, cfg.divergence_patience);
  if (resume) {
    const Checkpoint ck = load_checkpoint(*resume);
    model.load(ck);
    opt.load(ck);
    auto meta = [&](const std::string& k) {
      auto it = ck.meta.find(k);
      if (it == ck.meta.end()) throw DataError("checkpoint lacks '" + k + "': " + resume->string());
      return it->second;
    };
    set_rng_state(rng, meta("rng"));
    first_epoch = std::stoul(meta("epoch")) + 1;
    res.steps = std::stoul(meta("step"));
    res.initial_loss = std::stod(meta("initial_loss"));
    monitor.set_strikes(std::stoul(meta("strikes")));
  }
  if (!out_dir.empty()) fs::create_directories(out_dir);
  double window_sum = 0.0;
  std::size_t window_n = 0;
  auto check_divergence = [&](std::size_t epoch) {
    if (window_n == 0) return;
    const double mean = window_sum / double(window_n);
    window_sum = 0.0;
    window_n = 0;
    monitor.check(mean, res.initial_loss, "epoch " + std::to_string(epoch) + ", step " + std::to_string(res.steps));
  };
  for (std::size_t epoch = first_epoch; epoch <= cfg.finetune.epochs; ++epoch) {
    for (const auto& b : batches(shuffled(train.size(), rng), cfg.finetune.batch, 1)) {
      opt.zero_grad(params);
      Tape tape;
      std::vector<diffusion::TrainExample> ex;
      for (auto i : b) {
        diffusion::TrainExample e{&train[i].target, &train[i].source, std::nullopt};
        if (conditional) e.cond = model.condition(tape, train[i], true, rng);
        ex.push_back(e);
      }
      Var loss = diffusion::velocity_loss(tape, model.denoiser(), ex, model.schedule(), cfg.loss, rng);
      const double value = loss.value().item();
      if (!std::isfinite(value)) throw NonFiniteError("finetune: non-finite loss at step " + std::to_string(res.steps));
      tape.backward(loss);
      check_grads(params);
      opt.step(params);
      model.project();
      ++res.steps;
      if (res.initial_loss == 0.0) res.initial_loss = value;
      res.curve.push_back({res.steps, epoch, "train", value, 0.0});
      window_sum += value;
      ++window_n;
      if (cfg.eval_every > 0 && res.steps % cfg.eval_every == 0) check_divergence(epoch);
    }
    if (cfg.eval_every == 0) check_divergence(epoch);
    if (!test.empty()) {
      res.heldout_l1 = heldout_l1(model, test, cfg.eval_samples, datasynth::sub_seed(cfg.seed, 13));
      res.curve.push_back({res.steps, epoch, "test", std::numeric_limits<double>::quiet_NaN(), res.heldout_l1});
    }
    if (out_dir.empty()) continue;
    Checkpoint ck;
    model.save(ck);
    opt.save(ck);
    ck.meta["phase"] = "finetune";
    ck.meta["epoch"] = std::to_string(epoch);
    ck.meta["step"] = std::to_string(res.steps);
    ck.meta["rng"] = rng_state(rng);
    ck.meta["initial_loss"] = fmt_double(res.initial_loss);
    ck.meta["strikes"] = std::to_string(monitor.strikes());
    save_checkpoint(out_dir / ("epoch" + std::to_string(epoch) + ".ckpt"), ck);
    save_checkpoint(out_dir / "last.ckpt", ck);
  }
  if (!out_dir.empty()) write_curve(out_dir / "finetune_curve.csv", res.curve, "l1");
  return res;
}

}  // namespace loongx::train
