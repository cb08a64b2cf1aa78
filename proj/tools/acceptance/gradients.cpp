#include <algorithm>
#include <functional>

#include "acceptance.h"
#include "loongx/cs3/encoder.h"
#include "loongx/cs3/s3m.h"
#include "loongx/datasynth/corpus.h"
#include "loongx/dgf/fusion.h"
#include "loongx/diffusion/denoiser.h"
#include "loongx/diffusion/sampler.h"
#include "loongx/numerics/gradcheck.h"
#include "loongx/numerics/io.h"
#include "loongx/numerics/ops.h"
#include "loongx/train/model.h"
#include "loongx/train/ntxent.h"

namespace loongx::acceptance {

namespace {

constexpr double kTolerance = 1e-4;
constexpr double kBudgetSeconds = 120.0;
constexpr std::uint64_t kSeedsPerPrimitive = 2;

struct Prim {
  const char* name;
  Shape shape;
  std::function<Var(Tape&, Var, std::uint64_t)> f;
  double lo = -1.0, hi = 1.0;
};

Var other(Tape& t, Shape s, std::uint64_t seed) { return t.constant(uniform_tensor(std::move(s), 5000 + seed)); }

std::vector<Prim> primitives() {
  using T = Tape;
  return {
      {"add", {3, 4}, [](T& t, Var x, std::uint64_t s) { return add(x, other(t, {1, 4}, s)); }},
      {"add_rev", {1, 4}, [](T& t, Var x, std::uint64_t s) { return add(other(t, {3, 4}, s), x); }},
      {"sub", {3, 4}, [](T& t, Var x, std::uint64_t s) { return sub(other(t, {3, 1}, s), x); }},
      {"mul", {3, 4}, [](T& t, Var x, std::uint64_t s) { return mul(x, other(t, {3, 4}, s)); }},
      {"mul_reduce", {4}, [](T& t, Var x, std::uint64_t s) { return mul(other(t, {3, 4}, s), x); }},
      {"div_num", {3, 4}, [](T& t, Var x, std::uint64_t s) { return div(x, add_scalar(square(other(t, {3, 4}, s)), 1.0)); }},
      {"div_den", {3, 4}, [](T& t, Var x, std::uint64_t s) { return div(other(t, {3, 4}, s), x); }, 0.5, 2.0},
      {"scale", {5}, [](T&, Var x, std::uint64_t) { return neg(scale(add_scalar(x, 2.0), 3.0)); }},
      {"relu", {6}, [](T&, Var x, std::uint64_t) { return relu(x); }},
      {"sigmoid", {6}, [](T&, Var x, std::uint64_t) { return sigmoid(scale(x, 4.0)); }},
      {"tanh", {6}, [](T&, Var x, std::uint64_t) { return tanh(x); }},
      {"exp", {6}, [](T&, Var x, std::uint64_t) { return exp(x); }},
      {"log", {6}, [](T&, Var x, std::uint64_t) { return log(x); }, 0.2, 3.0},
      {"sqrt", {6}, [](T&, Var x, std::uint64_t) { return sqrt(x); }, 0.2, 3.0},
      {"square", {6}, [](T&, Var x, std::uint64_t) { return square(x); }},
      {"softplus", {6}, [](T&, Var x, std::uint64_t) { return softplus(scale(x, 5.0)); }},
      {"sum", {3, 4}, [](T&, Var x, std::uint64_t) { return sum(square(x)); }},
      {"mean", {3, 4}, [](T&, Var x, std::uint64_t) { return mean(square(x)); }},
      {"sum_axis", {3, 4, 2}, [](T&, Var x, std::uint64_t) { return sum_axis(x, 1, false); }},
      {"mean_axis", {3, 4}, [](T&, Var x, std::uint64_t) { return mean_axis(x, 0); }},
      {"var_axis", {3, 5}, [](T&, Var x, std::uint64_t) { return var_axis(x, 1); }},
      {"logsumexp", {3, 5}, [](T&, Var x, std::uint64_t) { return logsumexp_axis(x, 1); }},
      {"softmax", {4, 3}, [](T&, Var x, std::uint64_t) { return softmax(x, 0); }},
      {"log_softmax", {4, 3}, [](T&, Var x, std::uint64_t) { return log_softmax(x, 1); }},
      {"matmul_a", {3, 4}, [](T& t, Var x, std::uint64_t s) { return matmul(x, other(t, {4, 2}, s)); }},
      {"matmul_b", {4, 2}, [](T& t, Var x, std::uint64_t s) { return matmul(other(t, {3, 4}, s), x); }},
      {"linear", {2, 5}, [](T& t, Var x, std::uint64_t s) { return linear(other(t, {3, 2}, s), x, other(t, {1, 5}, s + 7)); }},
      {"reshape", {3, 4}, [](T&, Var x, std::uint64_t) { return reshape(square(x), {2, 6}); }},
      {"transpose", {3, 4}, [](T&, Var x, std::uint64_t) { return transpose(square(x)); }},
      {"permute", {2, 3, 4}, [](T&, Var x, std::uint64_t) { return permute(square(x), {1, 2, 0}); }},
      {"concat", {2, 3}, [](T& t, Var x, std::uint64_t s) { return concat({x, other(t, {2, 2}, s), square(x)}, 1); }},
      {"slice", {3, 6}, [](T&, Var x, std::uint64_t) { return slice(square(x), 1, 2, 3); }},
      {"index_select", {4, 3}, [](T&, Var x, std::uint64_t) { return index_select(square(x), {3, 0, 3}); }},
      {"layer_norm", {3, 7}, [](T&, Var x, std::uint64_t) { return layer_norm(x); }},
      {"conv1d_x", {2, 9}, [](T& t, Var x, std::uint64_t s) { return conv1d(x, other(t, {3, 2, 3}, s), other(t, {3}, s + 1)); }},
      {"conv1d_w", {3, 2, 5}, [](T& t, Var w, std::uint64_t s) { return conv1d(other(t, {2, 8}, s), w, other(t, {3}, s + 1)); }},
      {"conv1d_b", {3}, [](T& t, Var b, std::uint64_t s) { return conv1d(other(t, {2, 8}, s), other(t, {3, 2, 3}, s + 1), b); }},
      {"dropout", {4, 5}, [](T&, Var x, std::uint64_t s) { Rng r(s); return dropout(x, 0.3, true, r); }},
      {"pool_down", {2, 6}, [](T&, Var x, std::uint64_t) { return adaptive_avg_pool(x, 4); }},
      {"pool_up", {2, 3}, [](T&, Var x, std::uint64_t) { return adaptive_avg_pool(x, 7); }},
      {"mse", {3, 4}, [](T& t, Var x, std::uint64_t s) { return mse_loss(x, other(t, {3, 4}, s)); }},
      {"l2_normalize", {3, 4}, [](T&, Var x, std::uint64_t) { return l2_normalize_rows(x); }},
  };
}

struct Tally {
  std::size_t cases = 0;
  double worst = 0.0;
  std::string worst_name;
  void add(const std::string& name, double err) {
    ++cases;
    if (!(err <= worst)) worst = err, worst_name = name;
  }
};

}  // namespace

Outcome gradient_integrity(const Context& ctx) {
  const Stopwatch sw;
  Tally tally;
  for (const auto& p : primitives()) {
    for (std::uint64_t seed = 0; seed < kSeedsPerPrimitive; ++seed) {
      const Tensor x = uniform_tensor(p.shape, 1000 + seed, p.lo, p.hi);
      auto loss = [&](Tape& t, Var v) {
        Var y = p.f(t, v, seed);
        return sum(mul(y, t.constant(uniform_tensor(y.shape(), 3000 + seed))));
      };
      tally.add(p.name, finite_diff_check(loss, x));
    }
  }

  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    Rng rng(seed);
    cs3::S3MBlock blk("s.", seed ? 1 : 3, 4, rng);
    for (auto& v : blk.log_dt.value.data()) v = std::log(0.3);
    blk.b.value = Tensor::uniform(blk.b.value.shape(), rng, -1, 1);
    const Tensor x = Tensor::uniform({3, 12}, rng, -1, 1), w = Tensor::uniform({3, 12}, rng, -1, 1);
    tally.add("s3m_params", finite_diff_check_params([&](Tape& t) { return sum(mul(blk.scan(t, t.constant(x)), t.constant(w))); },
                                                     blk.params(), {.step = 1e-6}));
    tally.add("s3m_input", finite_diff_check([&](Tape& t, Var xv) { return sum(mul(blk.scan(t, xv), t.constant(w))); }, x));
  }

  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    Rng rng(seed);
    cs3::CS3Config c;
    c.C = 3, c.N = 2, c.d = 2, c.L = 16, c.d_m = 4, c.d_p = 3, c.d_prime = 5, c.C_prime = 2, c.state_dim = 3;
    cs3::CS3Encoder enc(c, "e.", rng);
    const Tensor s = uniform_tensor({3, 16}, 10 + seed), w = uniform_tensor({2, 5}, 20 + seed);
    tally.add("cs3_encoder", finite_diff_check_params(
                                 [&](Tape& t) {
                                   Rng drop(99);
                                   return sum(mul(enc.forward(t, s, true, drop), t.constant(w)));
                                 },
                                 enc.params()));
  }

  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    Rng rng(seed);
    dgf::DGFConfig c;
    c.gate_hidden = 4;
    c.psi_hidden = 6;
    dgf::DGFBlock blk(4, c, "b.", rng);
    auto& lw = blk.affine().last_weight().value;
    lw = Tensor::randn(lw.shape(), rng, 0.3);
    const Tensor x = uniform_tensor({4, 16}, 30 + seed), y = uniform_tensor({4, 16}, 40 + seed, -2, 2);
    const Tensor p = uniform_tensor({4, 16}, 50 + seed), w = uniform_tensor({4, 16}, 60 + seed);
    tally.add("dgf_params", finite_diff_check_params(
                                [&](Tape& t) {
                                  return sum(mul(blk.forward(t, t.constant(x), t.constant(y), t.constant(p)).output, t.constant(w)));
                                },
                                blk.params()));
    tally.add("dgf_content", finite_diff_check(
                                 [&](Tape& t, Var xv) { return sum(mul(blk.forward(t, xv, t.constant(y)).output, t.constant(w))); }, x));
    tally.add("dgf_condition", finite_diff_check(
                                   [&](Tape& t, Var yv) { return sum(mul(blk.forward(t, t.constant(x), yv).output, t.constant(w))); }, y));
  }

  {
    Rng rng(0);
    dgf::FusionConfig c;
    c.channels = 4, c.length = 6, c.block.gate_hidden = 3, c.block.psi_hidden = 5;
    using sigproc::Modality;
    const std::map<Modality, Shape> shapes = {
        {Modality::EEG, {3, 5}}, {Modality::PPG, {3, 5}}, {Modality::fNIRS, {2, 4}}, {Modality::Motion, {2, 7}}};
    dgf::FusionNet net(c, shapes, 8, "f.", rng);
    for (std::size_t i = 0; i < dgf::FusionNet::kStages; ++i) {
      auto& w = net.stage(i).affine().last_weight().value;
      w = Tensor::randn(w.shape(), rng, 0.2);
    }
    const Tensor w = uniform_tensor({8, 6}, 90);
    tally.add("fusion", finite_diff_check_params(
                            [&](Tape& t) {
                              dgf::FusionInputs in;
                              std::uint64_t s = 0;
                              for (const auto& [m, shape] : shapes) in.embeddings[m] = t.constant(uniform_tensor(shape, s++));
                              in.prompt = t.constant(uniform_tensor({5, 8}, s));
                              return sum(mul(net.forward(t, in).latent, t.constant(w)));
                            },
                            net.params()));
  }

  for (auto pred : {diffusion::Prediction::Data, diffusion::Prediction::Velocity}) {
    Rng rng(7);
    diffusion::DenoiserConfig c;
    c.channels = 2, c.height = 3, c.width = 4, c.hidden = 5, c.embed = 4, c.time_freqs = 2, c.pos_freqs = 1;
    c.prediction = pred;
    const diffusion::Schedule sched(pred == diffusion::Prediction::Data ? diffusion::ScheduleKind::RectifiedFlow
                                                                         : diffusion::ScheduleKind::VParamCosine);
    diffusion::Denoiser d(c, {2, 3}, sched, "d.", rng);
    for (auto* p : d.params()) p->value = Tensor::randn(p->value.shape(), rng, 0.3);
    const Tensor x = uniform_tensor({2, 3, 4}, 21), src = uniform_tensor({2, 3, 4}, 31);
    const Tensor cond = uniform_tensor({2, 3}, 41), w = uniform_tensor({2, 3, 4}, 51);
    tally.add("denoiser_params", finite_diff_check_params(
                                     [&](Tape& t) {
                                       return sum(mul(d.velocity(t, t.constant(x), src, 0.35, t.constant(cond)), t.constant(w)));
                                     },
                                     d.params()));
    tally.add("denoiser_condition",
              finite_diff_check([&](Tape& t, Var cv) { return sum(mul(d.velocity(t, t.constant(x), src, 0.35, cv), t.constant(w))); },
                                cond));
  }

  {
    const Tensor q = uniform_tensor({4, 6}, 11), z = uniform_tensor({4, 6}, 12);
    tally.add("ntxent_z", finite_diff_check([&](Tape& t, Var x) { return train::ntxent_loss(x, t.constant(q), 0.3); }, z, 1e-6));
    tally.add("ntxent_q", finite_diff_check([&](Tape& t, Var x) { return train::ntxent_loss(t.constant(z), x, 0.3); }, q, 1e-6));
  }

  {
    const auto root = ctx.work / "corpus24";
    if (!std::filesystem::exists(root / "manifest.tsv")) {
      datasynth::CorpusConfig cc;
      cc.n = 24;
      cc.seed = 5;
      datasynth::build_corpus(root, cc);
    }
    train::TrainConfig cfg;
    KeyValues kv = load_kv(ctx.source_dir / "configs/tiny.cfg");
    cfg.apply_kv(kv);
    cfg.validate();
    train::LoongXModel model(cfg);
    const auto recs = train::load_records(root, train::unified_lengths(cfg), "");
    const train::Record& r = recs.at(1);
    auto f = [&](Tape& tape) {
      Rng rng(3);
      Var c = model.condition(tape, r, false, rng);
      std::vector<diffusion::TrainExample> batch{{&r.target, &r.source, c}};
      return diffusion::velocity_loss(tape, model.denoiser(), batch, model.schedule(), {0.0, 0.2}, rng);
    };
    ParamCheckOptions opt;
    opt.step = 1e-6;
    opt.max_coords = 3;
    opt.seed = 4;
    tally.add("cs3_dgf_velocity_composite", finite_diff_check_params(f, model.params(), opt));
  }

  const double secs = sw.seconds();
  const bool pass = tally.worst < kTolerance && secs < kBudgetSeconds && tally.cases >= 90;
  return {pass, std::to_string(tally.cases) + " cases, worst rel err " + sci(tally.worst) + " (" +
                    tally.worst_name + ") < 1e-4, " + fixed(secs, 1) + " s < 120 s"};
}

}  // namespace loongx::acceptance
