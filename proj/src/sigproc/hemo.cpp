#include "loongx/sigproc/hemo.h"

#include <cmath>

#include "loongx/numerics/errors.h"

namespace loongx::sigproc {

Tensor optical_density(const Tensor& intensity, const Tensor& baseline) {
  const bool per_channel = baseline.rank() == 1 && intensity.rank() == 2 &&
                           baseline.dim(0) == intensity.dim(0);
  if (!per_channel && baseline.shape() != intensity.shape()) {
    throw ShapeError("optical_density: I " + shape_str(intensity.shape()) + " vs I0 " +
                     shape_str(baseline.shape()));
  }
  Tensor out(intensity.shape());
  const std::size_t inner = per_channel ? intensity.dim(1) : 1;
  for (std::size_t i = 0; i < intensity.numel(); ++i) {
    const double i0 = per_channel ? baseline[i / inner] : baseline[i];
    const double in = intensity[i];
    if (!(in > 0.0) || !(i0 > 0.0)) throw DomainError("optical_density: nonpositive intensity");
    out[i] = std::log(i0 / in);
  }
  return out;
}

namespace {
struct Inverse2 {
  double m[2][2];
};

Inverse2 invert_extinction(const Optics& o) {
  const auto& e = o.extinction;
  const double det = e[0][0] * e[1][1] - e[0][1] * e[1][0];
  // Condition number in the Frobenius norm: |E|_F |E^-1|_F = |E|_F^2 / |det|.
  double fro2 = 0.0;
  for (const auto& r : e)
    for (double v : r) fro2 += v * v;
  if (det == 0.0 || !std::isfinite(det) || fro2 / std::abs(det) >= 1e6) {
    throw DomainError("extinction matrix is singular or ill-conditioned");
  }
  return {{{e[1][1] / det, -e[0][1] / det}, {-e[1][0] / det, e[0][0] / det}}};
}
}  // namespace

HemodynamicSeries mbll(const Tensor& dA1, const Tensor& dA2, const Optics& optics) {
  if (dA1.shape() != dA2.shape()) throw ShapeError("mbll: wavelength tensors differ in shape");
  const double scale = optics.dpf * optics.pathlength_mm;
  if (!(scale > 0.0)) throw DomainError("mbll: dpf * pathlength must be positive");
  const auto inv = invert_extinction(optics);
  HemodynamicSeries h{Tensor(dA1.shape()), Tensor(dA1.shape()), Tensor(dA1.shape())};
  for (std::size_t i = 0; i < dA1.numel(); ++i) {
    h.hbo[i] = (inv.m[0][0] * dA1[i] + inv.m[0][1] * dA2[i]) / scale;
    h.hbr[i] = (inv.m[1][0] * dA1[i] + inv.m[1][1] * dA2[i]) / scale;
    h.hbt[i] = h.hbo[i] + h.hbr[i];
  }
  return h;
}

std::pair<Tensor, Tensor> forward_extinction(const Tensor& hbo, const Tensor& hbr,
                                             const Optics& optics) {
  if (hbo.shape() != hbr.shape()) throw ShapeError("forward_extinction: shape mismatch");
  const double scale = optics.dpf * optics.pathlength_mm;
  const auto& e = optics.extinction;
  Tensor a1(hbo.shape()), a2(hbo.shape());
  for (std::size_t i = 0; i < hbo.numel(); ++i) {
    a1[i] = scale * (e[0][0] * hbo[i] + e[0][1] * hbr[i]);
    a2[i] = scale * (e[1][0] * hbo[i] + e[1][1] * hbr[i]);
  }
  return {a1, a2};
}

RawRecording hemisphere_average(const RawRecording& x,
                                const std::vector<std::vector<std::size_t>>& groups) {
  if (groups.empty()) throw InvalidConfig("hemisphere_average: no groups");
  const std::size_t c = x.channels(), n = x.length();
  std::vector<int> seen(c, 0);
  for (const auto& g : groups) {
    if (g.empty()) throw InvalidConfig("hemisphere_average: empty group");
    for (auto ch : g) {
      if (ch >= c) throw InvalidConfig("hemisphere_average: channel out of range");
      ++seen[ch];
    }
  }
  for (int s : seen) {
    if (s != 1) throw InvalidConfig("hemisphere_average: groups must partition the channels");
  }
  RawRecording out = x;
  out.samples = Tensor({groups.size(), n});
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    for (std::size_t t = 0; t < n; ++t) {
      double s = 0.0;
      for (auto ch : g) s += x.samples[ch * n + t];
      out.samples[gi * n + t] = s / static_cast<double>(g.size());
    }
  }
  return out;
}

}  // namespace loongx::sigproc
