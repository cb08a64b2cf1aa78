#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "loongx/train/model.h"

namespace loongx::evalcli {

inline constexpr const char* kReportSchema = "loongx.metric_report/1";

/// Mean over runs with a Student-t 95% interval when there are >= 2 runs.
struct Stat {
  std::vector<double> runs;
  double mean = 0.0;
  std::optional<std::pair<double, double>> ci95;

  static Stat from_runs(std::vector<double> runs);
  bool operator==(const Stat&) const = default;
};

struct MetricReport {
  Stat l1, l2, clip_i_proxy, dino_proxy, clip_t_proxy;
  std::size_t n_samples = 0;
  std::string config_hash;  // 16 hex digits
  std::string split;
  std::string condition;

  bool operator==(const MetricReport&) const = default;
};

/// Half-width multiplier of the two-sided 95% t interval.
double t_quantile_975(std::size_t dof);

std::string report_to_json(const MetricReport& r);
/// Throws DataError on schema mismatch or malformed input.
MetricReport report_from_json(const std::string& text);
void save_report(const std::filesystem::path& path, const MetricReport& r);
MetricReport load_report(const std::filesystem::path& path);
/// One row per metric: metric, mean, ci_lo, ci_hi, runs.
std::string report_to_tsv(const MetricReport& r);

/// Per-sample metrics of one run.
struct RunMetrics {
  double l1 = 0, l2 = 0, clip_i = 0, dino = 0, clip_t = 0;
};

/// Averages image metrics over aligned (pred, target, tokens) triples.
RunMetrics score_pairs(const std::vector<Tensor>& preds, const std::vector<Tensor>& targets,
                       const std::vector<std::vector<std::string>>& tokens);

/// Combines per-run averages into a report.
MetricReport summarize(const std::vector<RunMetrics>& runs, std::size_t n_samples, std::uint64_t config_hash);

/// Samples edits for the first `limit` records (all when 0) in each of
/// `runs` runs. Run r, record i draws from a generator seeded by
/// (seed, r, i).
MetricReport evaluate(train::LoongXModel& model, const std::vector<train::Record>& records,
                      const diffusion::SamplerConfig& sampler, std::size_t runs, std::uint64_t seed,
                      std::size_t limit = 0);

}  // namespace loongx::evalcli
