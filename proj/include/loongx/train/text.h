#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loongx/numerics/io.h"
#include "loongx/numerics/tape.h"

namespace loongx::train {

struct TextEmbedderConfig {
  std::size_t dim = 256;
  std::size_t buckets = 1024;
  std::uint64_t seed = 7;

  void validate() const;
  void apply_kv(const KeyValues& kv, const std::string& prefix);
};

/// Frozen bag-of-tokens embedder. Each token hashes to a bucket whose row is a
/// seeded Gaussian vector; the table is a Parameter that never requires grad.
class TextEmbedder {
 public:
  explicit TextEmbedder(const TextEmbedderConfig& cfg = {});

  std::size_t dim() const { return cfg_.dim; }
  std::size_t bucket(const std::string& token) const;
  /// Token rows [n x D]; throws DataError for an empty token list.
  Tensor tokens(const std::vector<std::string>& toks) const;
  /// L2-normalised sum of token rows, [1 x D].
  Tensor embed(const std::vector<std::string>& toks) const;

  Parameter& table() { return table_; }
  std::uint64_t hash() const;

 private:
  TextEmbedderConfig cfg_;
  Parameter table_;
};

}  // namespace loongx::train
