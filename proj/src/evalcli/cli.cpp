#include "loongx/evalcli/cli.h"

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "loongx/datasynth/corpus.h"
#include "loongx/evalcli/classify.h"
#include "loongx/evalcli/png.h"
#include "loongx/evalcli/report.h"
#include "loongx/numerics/errors.h"
#include "loongx/sigproc/prepare.h"
#include "loongx/train/loop.h"

namespace loongx::evalcli {

namespace fs = std::filesystem;
using train::LoongXModel;
using train::Record;
using train::TrainConfig;

namespace {

const std::vector<std::string> kCorpusKeys = {"n", "seed", "split_ratio", "snr_db", "min_magnitude", "max_magnitude"};
const std::vector<std::string> kEvalKeys = {"eval.runs", "eval.limit", "eval.seed", "eval.png_rows"};
const std::vector<std::size_t> kDefaultLengths = {1024, 2048, 4096, 8192};

/// Settings shared by all subcommands.
struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::vector<std::string> set;
  KeyValues kv;
};

KeyValues with_prefix_stripped(const KeyValues& kv, const std::string& prefix) {
  KeyValues out;
  for (const auto& [k, v] : kv)
    if (k.rfind(prefix, 0) == 0) out[k.substr(prefix.size())] = v;
  return out;
}

std::size_t kv_size(const KeyValues& kv, const std::string& key, std::size_t fallback) {
  kv_read(kv, key, fallback);
  return fallback;
}

TrainConfig train_config(const Globals& g) {
  TrainConfig c;
  c.apply_kv(g.kv);
  if (g.seed) c.seed = *g.seed;
  c.validate();
  return c;
}

TrainConfig config_from_checkpoint(const Checkpoint& ck) {
  auto it = ck.meta.find("config");
  if (it == ck.meta.end()) throw DataError("checkpoint carries no model config");
  TrainConfig c;
  c.apply_kv(parse_kv(it->second));
  c.validate();
  return c;
}

void write_config(const fs::path& dir, const TrainConfig& c) { write_text(dir / "config.cfg", format_kv(c.to_kv())); }

std::vector<Record> records_for(const fs::path& corpus, const TrainConfig& c, const std::string& split,
                                const std::string& cache) {
  std::optional<fs::path> cp;
  if (!cache.empty()) cp = cache;
  auto recs = train::load_records(corpus, train::unified_lengths(c), split, cp);
  if (c.condition == train::ConditionMode::Noise) train::replace_with_noise(recs);
  return recs;
}

std::vector<std::size_t> parse_lengths(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) {
    std::size_t v = 0;
    kv_read(KeyValues{{"length", tok}}, "length", v);
    if (v == 0) throw InvalidConfig("sweep lengths must be >= 1");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidConfig("no sweep lengths given");
  return out;
}

nlohmann::json metrics_json(const ClassMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"mAP", m.mAP},
          {"labels_scored", m.labels_scored}};
}

}  // namespace

std::set<std::string> known_config_keys() {
  std::set<std::string> keys;
  for (const auto& [k, v] : TrainConfig().to_kv()) keys.insert(k);
  for (const auto& k : kCorpusKeys) keys.insert("corpus." + k);
  for (const auto& [k, v] : ClassifierConfig().to_kv("classify")) keys.insert(k);
  for (const auto& k : kEvalKeys) keys.insert(k);
  keys.insert("sweep.lengths");
  return keys;
}

void check_config_keys(const KeyValues& kv) {
  const auto known = known_config_keys();
  for (const auto& [k, v] : kv)
    if (!known.count(k)) throw InvalidConfig("unknown config key '" + k + "'");
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LoongX desk-scale pipeline: synthetic corpus, training, editing and evaluation", "loongx"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for the stage (overrides the config)");
  app.add_option("--config", g.config, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", g.set, "Extra key=value override, repeatable")->allow_extra_args(false);

  // synth
  auto* synth = app.add_subcommand("synth", "Build a synthetic corpus");
  std::string synth_out;
  std::optional<std::size_t> synth_n;
  std::optional<double> synth_snr;
  synth->add_option("--out", synth_out, "Corpus directory")->required();
  synth->add_option("--n", synth_n, "Number of samples");
  synth->add_option("--snr-db", synth_snr, "EEG signal-to-noise ratio in dB");

  // preprocess
  auto* prep = app.add_subcommand("preprocess", "Condition and pad signals into a cache");
  std::string prep_corpus, prep_cache;
  prep->add_option("--corpus", prep_corpus)->required();
  prep->add_option("--cache", prep_cache)->required();

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "Contrastive encoder pretraining");
  std::string pre_corpus, pre_out, pre_cache;
  std::optional<std::size_t> pre_epochs;
  pre->add_option("--corpus", pre_corpus)->required();
  pre->add_option("--out", pre_out)->required();
  pre->add_option("--cache", pre_cache);
  pre->add_option("--epochs", pre_epochs);

  // train
  auto* trn = app.add_subcommand("train", "Joint finetuning of encoders, fusion and denoiser");
  std::string trn_corpus, trn_out, trn_cache, trn_init, trn_resume, trn_condition;
  std::optional<std::size_t> trn_epochs;
  trn->add_option("--corpus", trn_corpus)->required();
  trn->add_option("--out", trn_out)->required();
  trn->add_option("--cache", trn_cache);
  trn->add_option("--init", trn_init, "Pretrained checkpoint")->check(CLI::ExistingFile);
  trn->add_option("--resume", trn_resume, "Finetune checkpoint to continue from")->check(CLI::ExistingFile);
  trn->add_option("--condition", trn_condition, "signals, none or noise");
  trn->add_option("--epochs", trn_epochs);

  // edit
  auto* edit = app.add_subcommand("edit", "Sample one edited image");
  std::string ed_ckpt, ed_input, ed_signals, ed_out, ed_png;
  std::optional<std::size_t> ed_steps;
  std::optional<double> ed_guidance;
  edit->add_option("--checkpoint", ed_ckpt)->required()->check(CLI::ExistingFile);
  edit->add_option("--input", ed_input, "Source image (.nft)")->required()->check(CLI::ExistingFile);
  edit->add_option("--signals-dir", ed_signals, "Directory with <modality>.lmsg recordings")->required();
  edit->add_option("--out", ed_out, "Edited image (.nft)")->required();
  edit->add_option("--png", ed_png, "Also write source | edited as PNG");
  edit->add_option("--steps", ed_steps);
  edit->add_option("--guidance", ed_guidance);

  // eval
  auto* ev = app.add_subcommand("eval", "Metric report over a corpus split");
  std::string ev_corpus, ev_out, ev_ckpt, ev_preds, ev_split = "test", ev_cache;
  std::optional<std::size_t> ev_runs, ev_limit;
  bool ev_png = false;
  ev->add_option("--corpus", ev_corpus)->required();
  ev->add_option("--out", ev_out)->required();
  ev->add_option("--split", ev_split);
  ev->add_option("--cache", ev_cache);
  auto* ev_ck_opt = ev->add_option("--checkpoint", ev_ckpt)->check(CLI::ExistingFile);
  ev->add_option("--predictions", ev_preds, "Directory of <id>.nft predictions")->excludes(ev_ck_opt);
  ev->add_option("--runs", ev_runs);
  ev->add_option("--limit", ev_limit);
  ev->add_flag("--png", ev_png, "Write a source | edited | target grid");

  // classify
  auto* cls = app.add_subcommand("classify", "Multi-label edit-type classifier");
  std::string cls_corpus, cls_out, cls_source, cls_channels;
  std::optional<std::size_t> cls_len, cls_epochs;
  cls->add_option("--corpus", cls_corpus)->required();
  cls->add_option("--out", cls_out)->required();
  cls->add_option("--input-source", cls_source, "noise, text, eeg, fnirs, ppg, motion, fused or text+fused");
  cls->add_option("--channels", cls_channels, "Comma-separated EEG channels (Pz, Fp2, Fpz, Oz)");
  cls->add_option("--unified-len", cls_len);
  cls->add_option("--epochs", cls_epochs);

  // sweep
  auto* sw = app.add_subcommand("sweep", "Classifier mAP against unified EEG length");
  std::string sw_corpus, sw_out, sw_lengths;
  std::optional<std::size_t> sw_epochs;
  sw->add_option("--corpus", sw_corpus)->required();
  sw->add_option("--out", sw_out)->required();
  sw->add_option("--lengths", sw_lengths, "Comma-separated lengths");
  sw->add_option("--epochs", sw_epochs);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    if (!g.config.empty()) g.kv = load_kv(g.config);
    for (const auto& s : g.set) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw InvalidConfig("--set expects key=value, got '" + s + "'");
      g.kv[s.substr(0, eq)] = s.substr(eq + 1);
    }
    check_config_keys(g.kv);

    if (*synth) {
      datasynth::CorpusConfig cc;
      cc.apply_kv(with_prefix_stripped(g.kv, "corpus."));
      if (synth_n) cc.n = *synth_n;
      if (synth_snr) cc.snr_db = *synth_snr;
      if (g.seed) cc.seed = *g.seed;
      const auto rows = datasynth::build_corpus(synth_out, cc);
      out << "samples\t" << rows.size() << "\ncorpus_hash\t" << hex64(datasynth::corpus_hash(synth_out)) << "\n";
    } else if (*prep) {
      const TrainConfig c = train_config(g);
      const auto dir = train::preprocess_corpus(prep_corpus, train::unified_lengths(c), prep_cache);
      out << "cache\t" << dir.string() << "\n";
    } else if (*pre) {
      TrainConfig c = train_config(g);
      if (pre_epochs) c.pretrain.epochs = *pre_epochs;
      c.validate();
      fs::create_directories(pre_out);
      write_config(pre_out, c);
      LoongXModel model(c);
      const auto res = train::pretrain(model, records_for(pre_corpus, c, "train", pre_cache), pre_out);
      const auto& last = res.curve.back();
      out << "epochs\t" << res.curve.size() << "\nloss\t" << fmt_double(last.loss) << "\ntop1\t"
          << fmt_double(last.metric) << "\ncheckpoint\t" << (fs::path(pre_out) / "pretrain.ckpt").string() << "\n";
    } else if (*trn) {
      TrainConfig c;
      std::optional<Checkpoint> init;
      if (!trn_resume.empty()) {
        c = config_from_checkpoint(load_checkpoint(trn_resume));
      } else {
        c = train_config(g);
        if (!trn_init.empty()) init = load_checkpoint(trn_init);
      }
      if (!trn_condition.empty()) c.condition = train::parse_condition(trn_condition);
      if (trn_epochs) c.finetune.epochs = *trn_epochs;
      c.validate();
      fs::create_directories(trn_out);
      write_config(trn_out, c);
      LoongXModel model(c);
      if (init) model.load(*init);
      std::optional<fs::path> resume;
      if (!trn_resume.empty()) resume = trn_resume;
      const auto res = train::finetune(model, records_for(trn_corpus, c, "train", trn_cache),
                                       records_for(trn_corpus, c, "test", trn_cache), trn_out, resume);
      out << "steps\t" << res.steps << "\ninitial_loss\t" << fmt_double(res.initial_loss) << "\nheldout_l1\t"
          << fmt_double(res.heldout_l1) << "\ncheckpoint\t" << (fs::path(trn_out) / "last.ckpt").string() << "\n";
    } else if (*edit) {
      const Checkpoint ck = load_checkpoint(ed_ckpt);
      TrainConfig c = config_from_checkpoint(ck);
      if (ed_steps) c.sampler.steps = *ed_steps;
      if (ed_guidance) c.sampler.guidance = *ed_guidance;
      c.validate();
      LoongXModel model(c);
      model.load(ck);
      Record r;
      r.id = "edit";
      r.seed = g.seed.value_or(c.seed);
      r.source = load_tensor(ed_input);
      if (r.source.shape() != Shape{3, 32, 32}) throw DataError("edit input must be a [3 x 32 x 32] image");
      const auto lengths = train::unified_lengths(c);
      for (const auto& [m, raw] : datasynth::load_signal_set(ed_signals))
        r.signals[m] = train::prepare_signal(raw, lengths.at(m));
      if (fs::exists(fs::path(ed_signals) / "text.txt")) r.text = datasynth::load_tokens(fs::path(ed_signals) / "text.txt");
      if (c.use_text && r.text.empty()) throw DataError("model uses text prompts but signals dir has no text.txt");
      if (c.condition == train::ConditionMode::Noise) {
        std::vector<Record> one{r};
        train::replace_with_noise(one);
        r = one.front();
      }
      Rng rng(datasynth::sub_seed(r.seed, 0));
      const Tensor img = model.edit(r, c.sampler, rng);
      save_tensor(ed_out, img);
      if (!ed_png.empty()) write_png_grid(ed_png, {{r.source, img}});
      out << "edited\t" << ed_out << "\n";
    } else if (*ev) {
      const KeyValues& kv = g.kv;
      const std::size_t runs = ev_runs.value_or(kv_size(kv, "eval.runs", 1));
      const std::size_t limit = ev_limit.value_or(kv_size(kv, "eval.limit", 0));
      const std::uint64_t seed = g.seed.value_or(kv_size(kv, "eval.seed", 1));
      const std::size_t png_rows = kv_size(kv, "eval.png_rows", 8);
      MetricReport rep;
      std::vector<std::vector<Tensor>> grid;
      if (!ev_preds.empty()) {
        TrainConfig c = train_config(g);
        auto recs = records_for(ev_corpus, c, ev_split, ev_cache);
        if (limit > 0 && recs.size() > limit) recs.resize(limit);
        std::vector<Tensor> preds, targets;
        std::vector<std::vector<std::string>> toks;
        for (const auto& r : recs) {
          preds.push_back(load_tensor(fs::path(ev_preds) / (r.id + ".nft")));
          targets.push_back(r.target);
          toks.push_back(r.text);
          if (grid.size() < png_rows) grid.push_back({r.source, preds.back(), r.target});
        }
        rep = summarize({score_pairs(preds, targets, toks)}, recs.size(), datasynth::corpus_hash(ev_preds));
        rep.split = ev_split;
        rep.condition = "predictions";
      } else {
        if (ev_ckpt.empty()) throw InvalidConfig("eval needs --checkpoint or --predictions");
        const Checkpoint ck = load_checkpoint(ev_ckpt);
        TrainConfig c = config_from_checkpoint(ck);
        LoongXModel model(c);
        model.load(ck);
        const auto recs = records_for(ev_corpus, c, ev_split, ev_cache);
        rep = evaluate(model, recs, c.sampler, runs, seed, limit);
        rep.split = ev_split;
        if (ev_png) {
          for (std::size_t i = 0; i < std::min(png_rows, recs.size()); ++i) {
            Rng rng(datasynth::sub_seed(datasynth::sub_seed(seed, 0), i));
            grid.push_back({recs[i].source, model.edit(recs[i], c.sampler, rng), recs[i].target});
          }
        }
      }
      fs::create_directories(ev_out);
      save_report(fs::path(ev_out) / "report.json", rep);
      write_text(fs::path(ev_out) / "report.tsv", report_to_tsv(rep));
      if (ev_png && !grid.empty()) write_png_grid(fs::path(ev_out) / "grid.png", grid);
      out << report_to_tsv(rep);
    } else if (*cls) {
      ClassifierConfig cc;
      cc.apply_kv(g.kv, "classify");
      if (!cls_source.empty()) cc.source = parse_source(cls_source);
      if (!cls_channels.empty()) cc.apply_kv({{"channels", cls_channels}}, "");
      if (cls_len) cc.unified_len = *cls_len;
      if (cls_epochs) cc.epochs = *cls_epochs;
      if (g.seed) cc.seed = *g.seed;
      cc.validate();
      const auto train_in = build_inputs(cls_corpus, "train", cc);
      const auto test_in = build_inputs(cls_corpus, "test", cc);
      const auto res = train_classifier(train_in, test_in, cc);
      nlohmann::json j = metrics_json(res.metrics);
      j["source"] = source_name(cc.source);
      j["unified_len"] = cc.unified_len;
      j["input_dim"] = res.input_dim;
      j["prevalence_baseline"] = prevalence_baseline(test_in.labels);
      j["config"] = cc.to_kv("");
      fs::create_directories(cls_out);
      write_text(fs::path(cls_out) / "classify.json", j.dump(2) + "\n");
      out << "source\t" << source_name(cc.source) << "\nmAP\t" << fmt_double(res.metrics.mAP) << "\nf1\t"
          << fmt_double(res.metrics.f1) << "\n";
    } else if (*sw) {
      ClassifierConfig cc;
      cc.apply_kv(g.kv, "classify");
      cc.source = InputSource::EEG;
      if (sw_epochs) cc.epochs = *sw_epochs;
      if (g.seed) cc.seed = *g.seed;
      std::string lengths = sw_lengths;
      if (lengths.empty()) kv_read(g.kv, "sweep.lengths", lengths);
      std::vector<std::size_t> ls = lengths.empty() ? kDefaultLengths : parse_lengths(lengths);
      const auto rows = length_sweep(sw_corpus, ls, cc);
      fs::create_directories(sw_out);
      write_text(fs::path(sw_out) / "sweep.tsv", sweep_tsv(rows));
      write_text(fs::path(sw_out) / "sweep_timing.tsv", sweep_timing_tsv(rows));
      out << sweep_tsv(rows);
    }
    return kExitOk;
  } catch (const InvalidConfig& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace loongx::evalcli
