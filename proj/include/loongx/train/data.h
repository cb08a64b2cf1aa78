#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "loongx/datasynth/corpus.h"
#include "loongx/train/config.h"

namespace loongx::train {

/// One corpus sample in model-ready form.
struct Record {
  std::string id;
  std::string split;
  std::uint64_t seed = 0;
  Tensor source, target;
  std::map<Modality, Tensor> signals;  // prepared [C x L] per modality
  std::vector<std::string> text;
  std::vector<int> labels;
};

/// condition() followed by prepare() to `length`.
Tensor prepare_signal(const sigproc::RawRecording& raw, std::size_t length);

/// Unified length per modality taken from the encoder configs.
std::map<Modality, std::size_t> unified_lengths(const TrainConfig& cfg);

/// Loads the corpus rows of `split` ("train", "test" or empty for all).
/// Prepared signals come from `cache` when it holds files for the requested
/// lengths, otherwise they are computed from the raw recordings.
std::vector<Record> load_records(const std::filesystem::path& corpus, const std::map<Modality, std::size_t>& lengths,
                                 const std::string& split = "",
                                 const std::optional<std::filesystem::path>& cache = std::nullopt);

/// Writes cache/<length-tag>/<id>/<modality>.nft for every sample; returns the
/// directory used.
std::filesystem::path preprocess_corpus(const std::filesystem::path& corpus,
                                        const std::map<Modality, std::size_t>& lengths,
                                        const std::filesystem::path& cache);

/// Replaces every prepared signal by uniform [-1, 1] noise seeded from the
/// record seed.
void replace_with_noise(std::vector<Record>& records);

}  // namespace loongx::train
