#pragma once

#include <cstdint>
#include <functional>

#include "loongx/numerics/tape.h"

namespace loongx {

/// Max over coordinates of |analytic - numeric| / max(1, |numeric|), where the
/// numeric derivative is a central difference of `f` at `x`.
double finite_diff_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x,
                         double step = 1e-5);

struct ParamCheckOptions {
  double step = 1e-5;
  /// Coordinates probed per parameter; 0 probes all of them.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

/// Same measure over parameters. `f` records a scalar loss on a fresh tape.
double finite_diff_check_params(const std::function<Var(Tape&)>& f, const ParamList& params,
                                const ParamCheckOptions& opt = {});

}  // namespace loongx
