#include "loongx/evalcli/classify.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "loongx/numerics/errors.h"
#include "loongx/numerics/ops.h"
#include "loongx/numerics/optim.h"
#include "loongx/sigproc/prepare.h"
#include "loongx/train/text.h"

namespace loongx::evalcli {

namespace fs = std::filesystem;
using sigproc::Modality;

namespace {

const std::vector<std::pair<InputSource, std::string>> kSourceNames = {
    {InputSource::Noise, "noise"}, {InputSource::Text, "text"},     {InputSource::EEG, "eeg"},
    {InputSource::fNIRS, "fnirs"}, {InputSource::PPG, "ppg"},       {InputSource::Motion, "motion"},
    {InputSource::Fused, "fused"}, {InputSource::TextFused, "text+fused"}};

constexpr std::uint64_t kNoiseStream = 0x636c6173;  // "clas"

std::vector<Modality> source_modalities(InputSource s) {
  switch (s) {
    case InputSource::EEG: return {Modality::EEG};
    case InputSource::fNIRS: return {Modality::fNIRS};
    case InputSource::PPG: return {Modality::PPG};
    case InputSource::Motion: return {Modality::Motion};
    case InputSource::Fused:
    case InputSource::TextFused: return {sigproc::kModalities.begin(), sigproc::kModalities.end()};
    default: return {};
  }
}

std::vector<std::size_t> eeg_channels(const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  if (names.empty()) {
    out.resize(sigproc::kEegChannels.size());
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  for (const auto& n : names) {
    auto it = std::find(sigproc::kEegChannels.begin(), sigproc::kEegChannels.end(), n);
    if (it == sigproc::kEegChannels.end()) throw InvalidConfig("unknown EEG channel '" + n + "'");
    out.push_back(std::size_t(it - sigproc::kEegChannels.begin()));
  }
  return out;
}

const train::TextEmbedder& text_embedder() {
  static const train::TextEmbedder emb;
  return emb;
}

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

}  // namespace

InputSource parse_source(const std::string& s) {
  for (const auto& [k, n] : kSourceNames)
    if (n == s) return k;
  throw InvalidConfig("unknown input source '" + s + "'");
}

std::string source_name(InputSource s) {
  for (const auto& [k, n] : kSourceNames)
    if (k == s) return n;
  return "?";
}

void ClassifierConfig::validate() const {
  if (hidden1 == 0 || hidden2 == 0) throw InvalidConfig("classifier hidden widths must be >= 1");
  if (unified_len == 0 || noise_dim == 0) throw InvalidConfig("classifier unified_len and noise_dim must be >= 1");
  if (epochs == 0 || batch == 0) throw InvalidConfig("classifier epochs and batch must be >= 1");
  if (!(lr > 0.0) || !(weight_decay >= 0.0)) throw InvalidConfig("classifier lr must be > 0, weight_decay >= 0");
  eeg_channels(channels);
}

void ClassifierConfig::apply_kv(const KeyValues& kv, const std::string& prefix) {
  const std::string p = prefix.empty() ? "" : prefix + ".";
  kv_read(kv, p + "hidden1", hidden1);
  kv_read(kv, p + "hidden2", hidden2);
  std::string src = source_name(source);
  kv_read(kv, p + "source", src);
  source = parse_source(src);
  kv_read(kv, p + "unified_len", unified_len);
  std::string ch;
  for (std::size_t i = 0; i < channels.size(); ++i) ch += (i ? "," : "") + channels[i];
  kv_read(kv, p + "channels", ch);
  channels.clear();
  std::stringstream ss(ch);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) channels.push_back(tok);
  kv_read(kv, p + "noise_dim", noise_dim);
  kv_read(kv, p + "epochs", epochs);
  kv_read(kv, p + "batch", batch);
  kv_read(kv, p + "lr", lr);
  kv_read(kv, p + "weight_decay", weight_decay);
  std::size_t s = seed;
  kv_read(kv, p + "seed", s);
  seed = s;
}

KeyValues ClassifierConfig::to_kv(const std::string& prefix) const {
  const std::string p = prefix.empty() ? "" : prefix + ".";
  std::string ch;
  for (std::size_t i = 0; i < channels.size(); ++i) ch += (i ? "," : "") + channels[i];
  return {{p + "hidden1", std::to_string(hidden1)},
          {p + "hidden2", std::to_string(hidden2)},
          {p + "source", source_name(source)},
          {p + "unified_len", std::to_string(unified_len)},
          {p + "channels", ch},
          {p + "noise_dim", std::to_string(noise_dim)},
          {p + "epochs", std::to_string(epochs)},
          {p + "batch", std::to_string(batch)},
          {p + "lr", fmt_double(lr)},
          {p + "weight_decay", fmt_double(weight_decay)},
          {p + "seed", std::to_string(seed)}};
}

SparseRow sample_input(const datasynth::EditSample& s, const ClassifierConfig& cfg, std::size_t* dim) {
  SparseRow row;
  std::size_t offset = 0;
  if (cfg.source == InputSource::Noise) {
    Rng rng(datasynth::sub_seed(s.seed, kNoiseStream));
    std::vector<double> v(cfg.noise_dim);
    for (auto& x : v) x = draw_uniform(rng, -1.0, 1.0);
    row.runs.emplace_back(0, std::move(v));
    offset = cfg.noise_dim;
  }
  if (cfg.source == InputSource::Text || cfg.source == InputSource::TextFused) {
    const Tensor e = text_embedder().embed(s.text);
    row.runs.emplace_back(0, std::vector<double>(e.data().begin(), e.data().end()));
    offset = e.numel();
  }
  for (Modality m : source_modalities(cfg.source)) {
    const auto& raw = s.signals.at(m);
    const sigproc::RawRecording cond = sigproc::condition(raw);
    const std::size_t keep = std::min(cfg.unified_len, cond.length());
    const Tensor p = sigproc::prepare(cond, keep).samples;
    std::vector<std::size_t> rows(p.dim(0));
    std::iota(rows.begin(), rows.end(), 0);
    if (m == Modality::EEG) rows = eeg_channels(cfg.channels);
    for (std::size_t c : rows) {
      row.runs.emplace_back(offset, std::vector<double>(p.data().begin() + std::ptrdiff_t(c * keep),
                                                        p.data().begin() + std::ptrdiff_t((c + 1) * keep)));
      offset += cfg.unified_len;
    }
  }
  if (dim) *dim = offset;
  return row;
}

LabeledInputs build_inputs(const fs::path& corpus, const std::string& split, const ClassifierConfig& cfg) {
  cfg.validate();
  LabeledInputs out;
  for (const auto& m : datasynth::read_manifest(corpus)) {
    if (!split.empty() && m.split != split) continue;
    const auto s = datasynth::load_sample(datasynth::sample_dir(corpus, m.id));
    out.rows.push_back(sample_input(s, cfg, &out.dim));
    out.labels.push_back(s.labels);
  }
  if (out.rows.empty()) throw DataError("no '" + split + "' samples in " + corpus.string());
  return out;
}

Tensor densify(const LabeledInputs& in, const std::vector<std::size_t>& rows) {
  Tensor x({rows.size(), in.dim}, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& [off, v] : in.rows.at(rows[i]).runs) std::copy(v.begin(), v.end(), x.data().begin() + std::ptrdiff_t(i * in.dim + off));
  return x;
}

double average_precision_101(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw ShapeError("average_precision_101: length mismatch");
  const std::size_t pos = std::size_t(std::count(labels.begin(), labels.end(), 1));
  if (pos == 0) throw DataError("average_precision_101: no positive examples");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  // Operating points at each distinct threshold, in order of rising recall.
  std::vector<std::pair<double, double>> pr;  // (recall, precision)
  std::size_t tp = 0, taken = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    tp += labels[order[i]] == 1;
    ++taken;
    if (i + 1 < order.size() && scores[order[i + 1]] == scores[order[i]]) continue;
    pr.emplace_back(double(tp) / double(pos), double(tp) / double(taken));
  }
  // Interpolated precision: running max from the high-recall end.
  for (std::size_t i = pr.size(); i-- > 1;) pr[i - 1].second = std::max(pr[i - 1].second, pr[i].second);
  double ap = 0.0;
  std::size_t j = 0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    while (j < pr.size() && pr[j].first < r - 1e-12) ++j;
    if (j < pr.size()) ap += pr[j].second;
  }
  return ap / 101.0;
}

ClassMetrics multilabel_metrics(const Tensor& probs, const std::vector<std::vector<int>>& labels) {
  const std::size_t n = probs.dim(0), K = probs.dim(1);
  if (labels.size() != n) throw ShapeError("multilabel_metrics: row mismatch");
  ClassMetrics m;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i].size() != K) throw ShapeError("multilabel_metrics: label width mismatch");
    for (std::size_t k = 0; k < K; ++k) {
      const bool p = probs[i * K + k] >= 0.5, y = labels[i][k] == 1;
      tp += p && y;
      fp += p && !y;
      fn += !p && y;
    }
  }
  m.precision = tp + fp ? double(tp) / double(tp + fp) : 0.0;
  m.recall = tp + fn ? double(tp) / double(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  double ap_sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = probs[i * K + k], y[i] = labels[i][k];
    if (std::count(y.begin(), y.end(), 1) == 0) continue;
    ap_sum += average_precision_101(s, y);
    ++m.labels_scored;
  }
  if (m.labels_scored == 0) throw DataError("multilabel_metrics: no label has a positive example");
  m.mAP = ap_sum / double(m.labels_scored);
  return m;
}

double prevalence_baseline(const std::vector<std::vector<int>>& labels) {
  if (labels.empty()) throw DataError("prevalence_baseline: no rows");
  const std::size_t K = labels.front().size();
  double total = 0.0;
  std::size_t scored = 0;
  for (std::size_t k = 0; k < K; ++k) {
    double pos = 0.0;
    for (const auto& l : labels) pos += l.at(k);
    if (pos == 0.0) continue;
    total += pos / double(labels.size());
    ++scored;
  }
  return scored ? total / double(scored) : 0.0;
}

MLPClassifier::MLPClassifier(std::size_t in, std::size_t h1, std::size_t h2, std::size_t out, Rng& rng)
    : w1_("cls.w1", Tensor::randn({in, h1}, rng, std::sqrt(2.0 / double(in)))),
      b1_("cls.b1", Tensor::zeros({1, h1})),
      w2_("cls.w2", Tensor::randn({h1, h2}, rng, std::sqrt(2.0 / double(h1)))),
      b2_("cls.b2", Tensor::zeros({1, h2})),
      w3_("cls.w3", Tensor::randn({h2, out}, rng, std::sqrt(1.0 / double(h2)))),
      b3_("cls.b3", Tensor::zeros({1, out})) {}

Var MLPClassifier::logits(Tape& tape, const Tensor& x) {
  Var h = relu(linear(tape.constant(x), tape.param(w1_), tape.param(b1_)));
  h = relu(linear(h, tape.param(w2_), tape.param(b2_)));
  return linear(h, tape.param(w3_), tape.param(b3_));
}

ParamList MLPClassifier::params() { return {&w1_, &b1_, &w2_, &b2_, &w3_, &b3_}; }

ClassifyResult train_classifier(const LabeledInputs& train, const LabeledInputs& test, const ClassifierConfig& cfg) {
  cfg.validate();
  if (train.rows.empty() || test.rows.empty()) throw DataError("classifier needs train and test rows");
  if (train.dim != test.dim) throw ShapeError("classifier: train and test input widths differ");
  if (std::set<std::vector<int>>(train.labels.begin(), train.labels.end()).size() < 2) {
    throw DataError("classifier: training labels hold a single class");
  }
  const std::size_t K = train.labels.front().size();
  const double t0 = now_seconds();
  Rng rng(cfg.seed);
  MLPClassifier mlp(train.dim, cfg.hidden1, cfg.hidden2, K, rng);
  const ParamList params = mlp.params();
  AdamW opt({cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  std::vector<std::size_t> order(train.rows.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += cfg.batch) {
      const std::vector<std::size_t> idx(order.begin() + std::ptrdiff_t(b),
                                         order.begin() + std::ptrdiff_t(std::min(order.size(), b + cfg.batch)));
      Tensor y({idx.size(), K});
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t k = 0; k < K; ++k) y[i * K + k] = train.labels[idx[i]][k];
      opt.zero_grad(params);
      Tape tape;
      Var z = mlp.logits(tape, densify(train, idx));
      // Binary cross-entropy with logits: softplus(z) - y z.
      Var loss = mean(sub(softplus(z), mul(tape.constant(y), z)));
      if (!std::isfinite(loss.value().item())) throw NonFiniteError("classifier: non-finite loss");
      tape.backward(loss);
      opt.step(params);
    }
  }
  ClassifyResult res;
  res.input_dim = train.dim;
  Tensor probs({test.rows.size(), K});
  for (std::size_t b = 0; b < test.rows.size(); b += cfg.batch) {
    std::vector<std::size_t> idx;
    for (std::size_t i = b; i < std::min(test.rows.size(), b + cfg.batch); ++i) idx.push_back(i);
    Tape tape(false);
    const Tensor p = sigmoid(mlp.logits(tape, densify(test, idx))).value();
    std::copy(p.data().begin(), p.data().end(), probs.data().begin() + std::ptrdiff_t(b * K));
  }
  res.metrics = multilabel_metrics(probs, test.labels);
  res.train_seconds = now_seconds() - t0;
  return res;
}

ClassifyResult classify_edit_types(const fs::path& corpus, const ClassifierConfig& cfg) {
  return train_classifier(build_inputs(corpus, "train", cfg), build_inputs(corpus, "test", cfg), cfg);
}

std::vector<SweepRow> length_sweep(const fs::path& corpus, const std::vector<std::size_t>& lengths,
                                   ClassifierConfig cfg) {
  if (lengths.empty()) throw InvalidConfig("length_sweep: no lengths");
  std::vector<SweepRow> rows;
  for (std::size_t len : lengths) {
    cfg.unified_len = len;
    const double t0 = now_seconds();
    const ClassifyResult r = classify_edit_types(corpus, cfg);
    rows.push_back({len, r.metrics, now_seconds() - t0});
  }
  return rows;
}

std::string sweep_tsv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "length\tprecision\trecall\tf1\tmAP\n";
  for (const auto& r : rows) {
    os << r.length << '\t' << fmt_double(r.metrics.precision) << '\t' << fmt_double(r.metrics.recall) << '\t'
       << fmt_double(r.metrics.f1) << '\t' << fmt_double(r.metrics.mAP) << '\n';
  }
  return os.str();
}

std::string sweep_timing_tsv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "length\twall_seconds\n";
  for (const auto& r : rows) os << r.length << '\t' << fmt_double(r.wall_seconds) << '\n';
  return os.str();
}

}  // namespace loongx::evalcli
