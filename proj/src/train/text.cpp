#include "loongx/train/text.h"

#include <cmath>

#include "loongx/numerics/errors.h"

namespace loongx::train {

void TextEmbedderConfig::validate() const {
  if (dim == 0 || buckets == 0) throw InvalidConfig("text embedder: dim and buckets must be >= 1");
}

void TextEmbedderConfig::apply_kv(const KeyValues& kv, const std::string& prefix) {
  kv_read(kv, prefix + ".dim", dim);
  kv_read(kv, prefix + ".buckets", buckets);
  std::size_t s = seed;
  kv_read(kv, prefix + ".seed", s);
  seed = s;
}

TextEmbedder::TextEmbedder(const TextEmbedderConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  table_ = Parameter("text.table", Tensor::randn({cfg_.buckets, cfg_.dim}, rng, 1.0 / std::sqrt(double(cfg_.dim))));
  table_.requires_grad = false;
}

std::size_t TextEmbedder::bucket(const std::string& token) const { return fnv1a64(token) % cfg_.buckets; }

Tensor TextEmbedder::tokens(const std::vector<std::string>& toks) const {
  if (toks.empty()) throw DataError("text embedder: empty token list");
  const std::size_t D = cfg_.dim;
  Tensor out({toks.size(), D});
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const std::size_t b = bucket(toks[i]);
    for (std::size_t j = 0; j < D; ++j) out[i * D + j] = table_.value[b * D + j];
  }
  return out;
}

Tensor TextEmbedder::embed(const std::vector<std::string>& toks) const {
  const Tensor rows = tokens(toks);
  const std::size_t D = cfg_.dim;
  Tensor out({1, D});
  for (std::size_t i = 0; i < toks.size(); ++i)
    for (std::size_t j = 0; j < D; ++j) out[j] += rows[i * D + j];
  double norm = 0.0;
  for (double v : out.data()) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (auto& v : out.data()) v /= norm;
  return out;
}

std::uint64_t TextEmbedder::hash() const { return hash_tensor(table_.value); }

}  // namespace loongx::train
