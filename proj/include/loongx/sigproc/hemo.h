#pragma once

#include <vector>

#include "loongx/sigproc/recording.h"

namespace loongx::sigproc {

/// Concentration changes in uM; hbt = hbo + hbr exactly.
struct HemodynamicSeries {
  Tensor hbo, hbr, hbt;  // [C x L0]
};

/// log(I0 / I) elementwise, natural log. I0 is either the same shape as I or
/// [C] broadcast along time. Throws DomainError on nonpositive intensity.
Tensor optical_density(const Tensor& intensity, const Tensor& baseline);

/// [dHbO; dHbR] = inv(E) [dA1; dA2] / (dpf * L_path). Throws DomainError when
/// the extinction matrix is singular (condition number >= 1e6).
HemodynamicSeries mbll(const Tensor& dA1, const Tensor& dA2, const Optics& optics);
/// Forward map dA = dpf * L_path * E [dHbO; dHbR], returned as {dA1, dA2}.
std::pair<Tensor, Tensor> forward_extinction(const Tensor& hbo, const Tensor& hbr,
                                             const Optics& optics);

/// One output channel per group: the per-sample mean of its members.
RawRecording hemisphere_average(const RawRecording& x,
                                const std::vector<std::vector<std::size_t>>& groups);

}  // namespace loongx::sigproc
