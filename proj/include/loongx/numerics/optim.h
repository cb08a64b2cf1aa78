#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "loongx/numerics/io.h"
#include "loongx/numerics/tape.h"

namespace loongx {

struct AdamWConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// AdamW with decoupled weight decay: p -= lr * wd * p, then the Adam step.
/// Moment buffers are keyed by parameter name.
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  void step(const ParamList& params);
  void zero_grad(const ParamList& params) const;

  std::int64_t steps() const { return t_; }
  AdamWConfig& config() { return cfg_; }
  const AdamWConfig& config() const { return cfg_; }

  /// Adds moment buffers under "<prefix>m/<name>" and "<prefix>v/<name>".
  void save(Checkpoint& ck, const std::string& prefix = "adam.") const;
  void load(const Checkpoint& ck, const std::string& prefix = "adam.");

 private:
  AdamWConfig cfg_;
  std::int64_t t_ = 0;
  std::map<std::string, Tensor> m_, v_;
};

void store_params(Checkpoint& ck, const ParamList& params, const std::string& prefix = "");
/// Throws DataError when a parameter is missing or has the wrong shape.
void restore_params(const Checkpoint& ck, const ParamList& params, const std::string& prefix = "");
std::size_t count_params(const ParamList& params);
/// Rejects duplicate names.
void check_unique_names(const ParamList& params);
std::uint64_t hash_params(const ParamList& params);

}  // namespace loongx
