#include <CLI11.hpp>
#include <functional>
#include <iostream>
#include <set>

#include "acceptance.h"
#include "loongx/datasynth/corpus.h"

namespace loongx::acceptance {

std::filesystem::path desk_corpus(const Context& ctx) {
  const auto root = ctx.work / "corpus2200";
  if (!std::filesystem::exists(root / "manifest.tsv")) datasynth::build_corpus(root, datasynth::CorpusConfig{});
  return root;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

}  // namespace loongx::acceptance

int main(int argc, char** argv) {
  using namespace loongx::acceptance;
  CLI::App app{"Acceptance checks; one PASS/FAIL line per criterion", "acceptance"};
  Context ctx;
  ctx.work = std::filesystem::temp_directory_path() / "loongx_acceptance";
  ctx.source_dir = LOONGX_SOURCE_DIR;
  ctx.cli = LOONGX_BIN;
  std::vector<int> only;
  app.add_option("--work", ctx.work, "Scratch directory (corpora are cached here)");
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 9))->delimiter(',');
  app.add_option("--seeds", ctx.seeds, "Seeds for the end-to-end criterion")->check(CLI::Range(2, 20));
  CLI11_PARSE(app, argc, argv);
  std::filesystem::create_directories(ctx.work);

  const std::vector<std::pair<std::string, std::function<Outcome(const Context&)>>> criteria = {
      {"gradient-integrity", gradient_integrity}, {"s3m-oracle", s3m_oracle},
      {"signal-processing", signal_contracts},    {"dgf-limits", dgf_limits},
      {"contrastive", contrastive},               {"sampler-exactness", sampler_exactness},
      {"end-to-end-learning", end_to_end},        {"edit-type-classification", classification},
      {"determinism", determinism}};
  const std::set<int> chosen(only.begin(), only.end());
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = int(i) + 1;
    if (!chosen.empty() && !chosen.count(id)) continue;
    const Stopwatch sw;
    Outcome o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << " " << criteria[i].first << "  " << o.detail << "  ["
              << fixed(sw.seconds(), 1) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
