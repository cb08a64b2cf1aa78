#include "loongx/evalcli/report.h"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <json.hpp>
#include <sstream>

#include "loongx/datasynth/signals.h"
#include "loongx/evalcli/metrics.h"
#include "loongx/numerics/errors.h"
#include "loongx/numerics/io.h"

namespace loongx::evalcli {

using nlohmann::json;

double t_quantile_975(std::size_t dof) {
  if (dof == 0) throw InvalidConfig("t quantile needs >= 1 degree of freedom");
  return boost::math::quantile(boost::math::students_t(double(dof)), 0.975);
}

Stat Stat::from_runs(std::vector<double> runs) {
  Stat s;
  s.runs = std::move(runs);
  if (s.runs.empty()) return s;
  double sum = 0.0;
  for (double v : s.runs) sum += v;
  const double n = double(s.runs.size());
  s.mean = sum / n;
  if (s.runs.size() >= 2) {
    double ss = 0.0;
    for (double v : s.runs) ss += (v - s.mean) * (v - s.mean);
    const double half = t_quantile_975(s.runs.size() - 1) * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    s.ci95 = std::make_pair(s.mean - half, s.mean + half);
  }
  return s;
}

namespace {

const char* const kNames[] = {"l1", "l2", "clip_i_proxy", "dino_proxy", "clip_t_proxy"};

std::vector<Stat*> stats(MetricReport& r) { return {&r.l1, &r.l2, &r.clip_i_proxy, &r.dino_proxy, &r.clip_t_proxy}; }
std::vector<const Stat*> stats(const MetricReport& r) {
  return {&r.l1, &r.l2, &r.clip_i_proxy, &r.dino_proxy, &r.clip_t_proxy};
}

json stat_json(const Stat& s) {
  json j = {{"mean", s.mean}, {"runs", s.runs}};
  if (s.ci95) j["ci95"] = {s.ci95->first, s.ci95->second};
  return j;
}

Stat stat_from(const json& j) {
  Stat s;
  s.mean = j.at("mean").get<double>();
  s.runs = j.at("runs").get<std::vector<double>>();
  if (j.contains("ci95")) s.ci95 = std::make_pair(j["ci95"].at(0).get<double>(), j["ci95"].at(1).get<double>());
  return s;
}

}  // namespace

std::string report_to_json(const MetricReport& r) {
  json j;
  j["schema"] = kReportSchema;
  j["proxy_metrics"] = "clip_i, dino and clip_t are seeded projection proxies, not pretrained-model scores";
  j["n_samples"] = r.n_samples;
  j["config_hash"] = r.config_hash;
  j["split"] = r.split;
  j["condition"] = r.condition;
  const auto ss = stats(r);
  for (std::size_t i = 0; i < ss.size(); ++i) j["metrics"][kNames[i]] = stat_json(*ss[i]);
  return j.dump(2) + "\n";
}

MetricReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("schema").get<std::string>() != kReportSchema) {
      throw DataError("unsupported report schema '" + j.at("schema").get<std::string>() + "'");
    }
    MetricReport r;
    r.n_samples = j.at("n_samples").get<std::size_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.split = j.at("split").get<std::string>();
    r.condition = j.at("condition").get<std::string>();
    const auto ss = stats(r);
    for (std::size_t i = 0; i < ss.size(); ++i) *ss[i] = stat_from(j.at("metrics").at(kNames[i]));
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed metric report: ") + e.what());
  }
}

void save_report(const std::filesystem::path& path, const MetricReport& r) { write_text(path, report_to_json(r)); }

MetricReport load_report(const std::filesystem::path& path) { return report_from_json(read_text(path)); }

std::string report_to_tsv(const MetricReport& r) {
  std::ostringstream os;
  os << "metric\tmean\tci_lo\tci_hi\truns\n";
  const auto ss = stats(r);
  for (std::size_t i = 0; i < ss.size(); ++i) {
    os << kNames[i] << '\t' << fmt_double(ss[i]->mean) << '\t';
    if (ss[i]->ci95) {
      os << fmt_double(ss[i]->ci95->first) << '\t' << fmt_double(ss[i]->ci95->second);
    } else {
      os << "\t";
    }
    os << '\t' << ss[i]->runs.size() << '\n';
  }
  return os.str();
}

RunMetrics score_pairs(const std::vector<Tensor>& preds, const std::vector<Tensor>& targets,
                       const std::vector<std::vector<std::string>>& tokens) {
  if (preds.size() != targets.size() || preds.size() != tokens.size()) throw ShapeError("score_pairs: length mismatch");
  if (preds.empty()) throw DataError("score_pairs: no samples");
  static const ProxyEmbedders proxies;
  RunMetrics m;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto [l1, l2] = metric_l1_l2(preds[i], targets[i]);
    const ProxyScores p = proxies.score(preds[i], targets[i], tokens[i]);
    m.l1 += l1;
    m.l2 += l2;
    m.clip_i += p.clip_i;
    m.dino += p.dino;
    m.clip_t += p.clip_t;
  }
  const double n = double(preds.size());
  m.l1 /= n, m.l2 /= n, m.clip_i /= n, m.dino /= n, m.clip_t /= n;
  return m;
}

MetricReport summarize(const std::vector<RunMetrics>& runs, std::size_t n_samples, std::uint64_t config_hash) {
  std::vector<double> l1, l2, ci, di, ct;
  for (const auto& r : runs) {
    l1.push_back(r.l1);
    l2.push_back(r.l2);
    ci.push_back(r.clip_i);
    di.push_back(r.dino);
    ct.push_back(r.clip_t);
  }
  MetricReport rep;
  rep.l1 = Stat::from_runs(l1);
  rep.l2 = Stat::from_runs(l2);
  rep.clip_i_proxy = Stat::from_runs(ci);
  rep.dino_proxy = Stat::from_runs(di);
  rep.clip_t_proxy = Stat::from_runs(ct);
  rep.n_samples = n_samples;
  rep.config_hash = hex64(config_hash);
  return rep;
}

MetricReport evaluate(train::LoongXModel& model, const std::vector<train::Record>& records,
                      const diffusion::SamplerConfig& sampler, std::size_t runs, std::uint64_t seed,
                      std::size_t limit) {
  if (runs == 0) throw InvalidConfig("evaluate: runs must be >= 1");
  const std::size_t n = limit == 0 ? records.size() : std::min(limit, records.size());
  if (n == 0) throw DataError("evaluate: no records");
  std::vector<RunMetrics> per_run;
  for (std::size_t r = 0; r < runs; ++r) {
    std::vector<Tensor> preds, targets;
    std::vector<std::vector<std::string>> toks;
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(datasynth::sub_seed(datasynth::sub_seed(seed, r), i));
      preds.push_back(model.edit(records[i], sampler, rng));
      targets.push_back(records[i].target);
      toks.push_back(records[i].text);
    }
    per_run.push_back(score_pairs(preds, targets, toks));
  }
  MetricReport rep = summarize(per_run, n, model.config().hash());
  rep.condition = train::condition_name(model.config().condition);
  if (!records.empty()) rep.split = records.front().split;
  return rep;
}

}  // namespace loongx::evalcli
