#include "loongx/evalcli/metrics.h"

#include <algorithm>
#include <cmath>

#include "loongx/numerics/errors.h"
#include "loongx/numerics/ops.h"

namespace loongx::evalcli {

namespace {

constexpr std::size_t kSemanticDim = 512;
constexpr std::size_t kPatchDim = 8;

void check_image(const Tensor& img) {
  if (img.rank() != 3 || img.dim(0) != 3 || img.dim(1) % ProxyEmbedders::kPool != 0 ||
      img.dim(2) % ProxyEmbedders::kPool != 0) {
    throw ShapeError("proxy embedders expect [3 x H x W] with H, W multiples of 8, got " + shape_str(img.shape()));
  }
}

std::vector<double> project(const std::vector<double>& x, const Tensor& w) {
  const std::size_t n = w.dim(1);
  std::vector<double> out(n, 0.0);
  kernels::gemm_nn(x.data(), w.data().data(), out.data(), 1, x.size(), n);
  return out;
}

}  // namespace

std::pair<double, double> metric_l1_l2(const Tensor& pred, const Tensor& gt) {
  if (pred.shape() != gt.shape()) {
    throw ShapeError("metric_l1_l2: " + shape_str(pred.shape()) + " vs " + shape_str(gt.shape()));
  }
  if (pred.numel() == 0) throw ShapeError("metric_l1_l2: empty images");
  double l1 = 0.0, l2 = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double d = pred[i] - gt[i];
    l1 += std::abs(d);
    l2 += d * d;
  }
  const double n = double(pred.numel());
  return {l1 / n, l2 / n};
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("cosine: length mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

std::vector<double> pool_image(const Tensor& img, std::size_t side) {
  const std::size_t C = img.dim(0), H = img.dim(1), W = img.dim(2);
  const std::size_t bh = H / side, bw = W / side;
  std::vector<double> out(C * side * side, 0.0);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) out[(c * side + y / bh) * side + x / bw] += img[(c * H + y) * W + x];
  for (auto& v : out) v /= double(bh * bw);
  return out;
}

ProxyEmbedders::ProxyEmbedders() {
  const std::size_t pooled = 3 * kPool * kPool;
  Rng a(kSemanticSeed), b(kStructuralSeed), c(kJointSeed);
  semantic_w_ = Tensor::randn({pooled, kSemanticDim}, a, 1.0 / std::sqrt(double(pooled)));
  patch_w_ = Tensor::randn({3 * kPatch * kPatch, kPatchDim}, b, 1.0 / std::sqrt(double(3 * kPatch * kPatch)));
  joint_w_ = Tensor::randn({pooled, text_.dim()}, c, 1.0 / std::sqrt(double(pooled)));
}

std::vector<double> ProxyEmbedders::semantic(const Tensor& img) const {
  check_image(img);
  return project(pool_image(img, kPool), semantic_w_);
}

std::vector<double> ProxyEmbedders::structural(const Tensor& img) const {
  check_image(img);
  const std::size_t H = img.dim(1), W = img.dim(2), P = kPatch;
  std::vector<double> out;
  out.reserve((H / P) * (W / P) * kPatchDim);
  std::vector<double> patch(3 * P * P);
  for (std::size_t py = 0; py < H; py += P)
    for (std::size_t px = 0; px < W; px += P) {
      for (std::size_t c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (std::size_t y = 0; y < P; ++y)
          for (std::size_t x = 0; x < P; ++x) mean += img[(c * H + py + y) * W + px + x];
        mean /= double(P * P);
        for (std::size_t y = 0; y < P; ++y)
          for (std::size_t x = 0; x < P; ++x) patch[(c * P + y) * P + x] = img[(c * H + py + y) * W + px + x] - mean;
      }
      for (double v : project(patch, patch_w_)) out.push_back(std::tanh(v));
    }
  return out;
}

std::vector<double> ProxyEmbedders::joint_image(const Tensor& img) const {
  check_image(img);
  return project(pool_image(img, kPool), joint_w_);
}

std::vector<double> ProxyEmbedders::joint_text(const std::vector<std::string>& tokens) const {
  const Tensor e = text_.embed(tokens);
  return {e.data().begin(), e.data().end()};
}

ProxyScores ProxyEmbedders::score(const Tensor& pred, const Tensor& gt, const std::vector<std::string>& tokens) const {
  ProxyScores s;
  s.clip_i = cosine(semantic(pred), semantic(gt));
  s.dino = cosine(structural(pred), structural(gt));
  s.clip_t = tokens.empty() ? 0.0 : cosine(joint_image(pred), joint_text(tokens));
  return s;
}

}  // namespace loongx::evalcli
