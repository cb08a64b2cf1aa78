#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "loongx/datasynth/image.h"
#include "loongx/datasynth/signals.h"
#include "loongx/numerics/io.h"

namespace loongx::datasynth {

struct EditSample {
  std::string id;
  std::uint64_t seed = 0;
  IntentCode intent;
  Tensor source, target;
  SignalSet signals;
  std::vector<std::string> text;
  std::vector<int> labels;
};

/// Deterministic sample: image, intent and signals come from independent
/// sub-seeds of `seed`.
EditSample make_sample(const std::string& id, std::uint64_t seed, double snr_db, const IntentConfig& cfg = {});

struct CorpusConfig {
  std::size_t n = 2200;
  std::uint64_t seed = 1;
  /// Leading fraction of samples assigned to the train split.
  double split_ratio = 10.0 / 11.0;
  double snr_db = 0.0;
  IntentConfig intent;

  /// Throws InvalidConfig when n < 10, the ratio is outside (0, 1] or snr_db
  /// is NaN or -inf.
  void validate() const;
  void apply_kv(const KeyValues& kv);
};

struct ManifestRow {
  std::string id;
  std::uint64_t seed = 0;
  std::string split;
  std::vector<int> labels;
  IntentCode intent;
};

/// Writes root/manifest.tsv, root/corpus.cfg and root/samples/<id>/ holding
/// source.nft, target.nft, <modality>.lmsg (+ .optics sidecars for fNIRS and
/// PPG), text.txt and labels.txt. Returns the manifest rows.
std::vector<ManifestRow> build_corpus(const std::filesystem::path& root, const CorpusConfig& cfg);

std::vector<ManifestRow> read_manifest(const std::filesystem::path& root);
void save_sample(const std::filesystem::path& dir, const EditSample& s);
/// Throws DataError when files are missing or malformed.
EditSample load_sample(const std::filesystem::path& dir);
/// The four <modality>.lmsg recordings of a sample directory with their
/// optics sidecars.
SignalSet load_signal_set(const std::filesystem::path& dir);
/// Whitespace-separated tokens of a text.txt file.
std::vector<std::string> load_tokens(const std::filesystem::path& path);
std::filesystem::path sample_dir(const std::filesystem::path& root, const std::string& id);

/// FNV-1a over every regular file under `root` (relative path and content
/// hash), visited in sorted path order.
std::uint64_t corpus_hash(const std::filesystem::path& root);

}  // namespace loongx::datasynth
