#pragma once

#include <chrono>
#include <filesystem>
#include <string>

#include "loongx/numerics/tensor.h"

namespace loongx::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  std::filesystem::path work;        // scratch space, reused between runs
  std::filesystem::path source_dir;  // for configs/
  std::filesystem::path cli;         // the loongx binary
  std::size_t seeds = 5;             // criterion 7
};

Outcome gradient_integrity(const Context& ctx);
Outcome s3m_oracle(const Context& ctx);
Outcome signal_contracts(const Context& ctx);
Outcome dgf_limits(const Context& ctx);
Outcome contrastive(const Context& ctx);
Outcome sampler_exactness(const Context& ctx);
Outcome end_to_end(const Context& ctx);
Outcome classification(const Context& ctx);
Outcome determinism(const Context& ctx);

inline Tensor uniform_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  return Tensor::uniform(std::move(shape), rng, lo, hi);
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Full 2200-sample corpus (2000/200) under ctx.work, built on first use.
std::filesystem::path desk_corpus(const Context& ctx);

std::string fixed(double v, int digits = 4);
std::string sci(double v);

}  // namespace loongx::acceptance
