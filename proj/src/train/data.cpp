#include "loongx/train/data.h"

#include "loongx/numerics/errors.h"
#include "loongx/sigproc/prepare.h"

namespace loongx::train {

namespace fs = std::filesystem;

namespace {

std::string length_tag(const std::map<Modality, std::size_t>& lengths) {
  std::string tag = "len";
  for (const auto& [m, l] : lengths) tag += "_" + sigproc::modality_name(m) + std::to_string(l);
  return tag;
}

}  // namespace

Tensor prepare_signal(const sigproc::RawRecording& raw, std::size_t length) {
  return sigproc::prepare(sigproc::condition(raw), length).samples;
}

std::map<Modality, std::size_t> unified_lengths(const TrainConfig& cfg) {
  std::map<Modality, std::size_t> out;
  for (const auto& [m, c] : cfg.encoders) out[m] = c.L;
  return out;
}

std::vector<Record> load_records(const fs::path& corpus, const std::map<Modality, std::size_t>& lengths,
                                 const std::string& split, const std::optional<fs::path>& cache) {
  const auto rows = datasynth::read_manifest(corpus);
  std::optional<fs::path> cache_dir;
  if (cache && fs::is_directory(*cache / length_tag(lengths))) cache_dir = *cache / length_tag(lengths);
  std::vector<Record> out;
  for (const auto& row : rows) {
    if (!split.empty() && row.split != split) continue;
    const auto s = datasynth::load_sample(datasynth::sample_dir(corpus, row.id));
    Record r{row.id, row.split, row.seed, s.source, s.target, {}, s.text, s.labels};
    for (const auto& [m, len] : lengths) {
      const fs::path cached = cache_dir ? *cache_dir / row.id / (sigproc::modality_name(m) + ".nft") : fs::path();
      if (cache_dir && fs::exists(cached)) {
        r.signals[m] = load_tensor(cached);
      } else {
        r.signals[m] = prepare_signal(s.signals.at(m), len);
      }
    }
    out.push_back(std::move(r));
  }
  if (out.empty()) throw DataError("no samples in split '" + split + "' of " + corpus.string());
  return out;
}

fs::path preprocess_corpus(const fs::path& corpus, const std::map<Modality, std::size_t>& lengths,
                           const fs::path& cache) {
  const fs::path dir = cache / length_tag(lengths);
  for (const auto& row : datasynth::read_manifest(corpus)) {
    const auto s = datasynth::load_sample(datasynth::sample_dir(corpus, row.id));
    fs::create_directories(dir / row.id);
    for (const auto& [m, len] : lengths) {
      save_tensor(dir / row.id / (sigproc::modality_name(m) + ".nft"), prepare_signal(s.signals.at(m), len));
    }
  }
  return dir;
}

void replace_with_noise(std::vector<Record>& records) {
  for (auto& r : records) {
    Rng rng(datasynth::sub_seed(r.seed, 0x6e6f697365ULL));
    for (auto& [m, t] : r.signals)
      for (auto& v : t.data()) v = draw_uniform(rng, -1.0, 1.0);
  }
}

}  // namespace loongx::train
