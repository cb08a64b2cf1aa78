#include "loongx/datasynth/image.h"

#include <algorithm>
#include <cmath>

#include "loongx/numerics/errors.h"

namespace loongx::datasynth {

namespace {

constexpr std::size_t S = kImageSide;
constexpr double kShapeThreshold = 0.05;

double& px(Tensor& t, std::size_t c, std::size_t y, std::size_t x) { return t.data()[(c * S + y) * S + x]; }
double px(const Tensor& t, std::size_t c, std::size_t y, std::size_t x) { return t.data()[(c * S + y) * S + x]; }

double coord(std::size_t i) { return double(i) / double(S - 1) - 0.5; }

void round_to_float(Tensor& t) {
  for (auto& v : t.data()) v = double(float(v));
}

void check_image(const Tensor& img) {
  if (img.shape() != Shape{kImageChannels, S, S}) {
    throw ShapeError("expected a 3 x 32 x 32 image, got " + shape_str(img.shape()));
  }
}

void check_cell(std::size_t cell) {
  if (cell >= kGrid * kGrid) throw InvalidConfig("cell " + std::to_string(cell) + " is outside the grid");
}

std::array<double, 3> edit_color(EditType e, double m) {
  if (e == EditType::Add) return {1.6 * m - 0.8, 0.8 - 1.6 * m, 0.7};
  return {0.7, 1.6 * m - 0.8, -0.7};
}

}  // namespace

Tensor gen_image(std::uint64_t seed) {
  Rng rng(seed);
  Tensor img({kImageChannels, S, S});
  std::array<double, 3> base, gx, gy;
  for (std::size_t c = 0; c < 3; ++c) {
    base[c] = draw_uniform(rng, -0.4, 0.4);
    gx[c] = draw_uniform(rng, -0.5, 0.5);
    gy[c] = draw_uniform(rng, -0.5, 0.5);
  }
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < S; ++y)
      for (std::size_t x = 0; x < S; ++x) px(img, c, y, x) = base[c] + gx[c] * coord(x) + gy[c] * coord(y);

  std::vector<std::size_t> cells(kGrid * kGrid);
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = i;
  std::shuffle(cells.begin(), cells.end(), rng);
  const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
  for (std::size_t s = 0; s < n; ++s) {
    const Box b = cell_interior(cells[s]);
    const double cy = (b.y0 + b.y1 - 1) / 2.0, cx = (b.x0 + b.x1 - 1) / 2.0;
    std::array<double, 3> color;
    double contrast = 0.0;
    do {
      contrast = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        color[c] = draw_uniform(rng, -0.9, 0.9);
        const double bg = base[c] + gx[c] * coord(std::size_t(cx)) + gy[c] * coord(std::size_t(cy));
        contrast = std::max(contrast, std::abs(color[c] - bg));
      }
    } while (contrast < 0.4);
    const bool disc = rng() % 2 == 0;
    const double radius = draw_uniform(rng, 1.5, 3.0);
    const std::size_t side = std::uniform_int_distribution<std::size_t>(3, 6)(rng);
    const std::size_t off_y = std::uniform_int_distribution<std::size_t>(0, 6 - side)(rng);
    const std::size_t off_x = std::uniform_int_distribution<std::size_t>(0, 6 - side)(rng);
    for (std::size_t y = b.y0; y < b.y1; ++y) {
      for (std::size_t x = b.x0; x < b.x1; ++x) {
        const bool inside = disc ? std::hypot(double(y) - cy, double(x) - cx) <= radius
                                 : (y >= b.y0 + off_y && y < b.y0 + off_y + side && x >= b.x0 + off_x &&
                                    x < b.x0 + off_x + side);
        if (inside)
          for (std::size_t c = 0; c < 3; ++c) px(img, c, y, x) = color[c];
      }
    }
  }
  for (auto& v : img.data()) v = std::clamp(v, -1.0, 1.0);
  round_to_float(img);
  return img;
}

Box cell_interior(std::size_t cell) {
  check_cell(cell);
  const std::size_t r = cell / kGrid, c = cell % kGrid;
  return {r * kCell + 1, r * kCell + kCell - 1, c * kCell + 1, c * kCell + kCell - 1};
}

Tensor frame_background(const Tensor& img, std::size_t cell) {
  check_image(img);
  const Box b = cell_interior(cell);
  const std::size_t top = b.y0 - 1, bottom = b.y1, left = b.x0 - 1, right = b.x1;
  const double span = double(kCell - 1);
  Tensor out({3, kCell - 2, kCell - 2});
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = b.y0; y < b.y1; ++y) {
      for (std::size_t x = b.x0; x < b.x1; ++x) {
        const double fy = double(y - top) / span, fx = double(x - left) / span;
        const double horiz = (1 - fx) * px(img, c, y, left) + fx * px(img, c, y, right);
        const double vert = (1 - fy) * px(img, c, top, x) + fy * px(img, c, bottom, x);
        out.data()[(c * (kCell - 2) + (y - b.y0)) * (kCell - 2) + (x - b.x0)] = 0.5 * (horiz + vert);
      }
    }
  }
  return out;
}

std::vector<int> shape_mask(const Tensor& img, std::size_t cell) {
  const Tensor bg = frame_background(img, cell);
  const Box b = cell_interior(cell);
  constexpr std::size_t I = kCell - 2;
  std::vector<int> mask(I * I, 0);
  for (std::size_t y = 0; y < I; ++y) {
    for (std::size_t x = 0; x < I; ++x) {
      double dev = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        dev = std::max(dev, std::abs(px(img, c, b.y0 + y, b.x0 + x) - bg.data()[(c * I + y) * I + x]));
      }
      mask[y * I + x] = dev > kShapeThreshold;
    }
  }
  return mask;
}

std::vector<std::size_t> occupied_cells(const Tensor& img) {
  std::vector<std::size_t> out;
  for (std::size_t cell = 0; cell < kGrid * kGrid; ++cell) {
    const auto m = shape_mask(img, cell);
    if (std::any_of(m.begin(), m.end(), [](int v) { return v != 0; })) out.push_back(cell);
  }
  return out;
}

Tensor apply_single(const Tensor& img, EditType e, std::size_t cell, double m) {
  check_image(img);
  check_cell(cell);
  Tensor out = img;
  const Box b = cell_interior(cell);
  constexpr std::size_t I = kCell - 2;
  auto fill_interior = [&](const Tensor& bg) {
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < I; ++y)
        for (std::size_t x = 0; x < I; ++x) px(out, c, b.y0 + y, b.x0 + x) = bg.data()[(c * I + y) * I + x];
  };
  switch (e) {
    case EditType::Remove:
      fill_interior(frame_background(img, cell));
      break;
    case EditType::Replace: {
      fill_interior(frame_background(img, cell));
      const auto col = edit_color(e, m);
      const double cy = (b.y0 + b.y1 - 1) / 2.0, cx = (b.x0 + b.x1 - 1) / 2.0;
      for (std::size_t y = b.y0; y < b.y1; ++y)
        for (std::size_t x = b.x0; x < b.x1; ++x)
          if (std::hypot(double(y) - cy, double(x) - cx) <= 2.5)
            for (std::size_t c = 0; c < 3; ++c) px(out, c, y, x) = col[c];
      break;
    }
    case EditType::Add: {
      const auto col = edit_color(e, m);
      for (std::size_t y = b.y0 + 1; y < b.y1 - 1; ++y)
        for (std::size_t x = b.x0 + 1; x < b.x1 - 1; ++x)
          for (std::size_t c = 0; c < 3; ++c) px(out, c, y, x) = col[c];
      break;
    }
    case EditType::ColorChange: {
      const auto mask = shape_mask(img, cell);
      for (std::size_t y = 0; y < I; ++y)
        for (std::size_t x = 0; x < I; ++x)
          if (mask[y * I + x])
            for (std::size_t c = 0; c < 3; ++c) px(out, c, b.y0 + y, b.x0 + x) = px(img, (c + 2) % 3, b.y0 + y, b.x0 + x);
      break;
    }
    case EditType::Texture:
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = b.y0; y < b.y1; ++y)
          for (std::size_t x = b.x0; x < b.x1; ++x) {
            const double d = (y + x) % 2 == 0 ? 0.3 * m : -0.3 * m;
            px(out, c, y, x) = std::clamp(px(img, c, y, x) + d, -1.0, 1.0);
          }
      break;
    case EditType::TextOverlay:
      for (std::size_t y : {b.y0 + 1, b.y0 + 3})
        for (std::size_t x = b.x0; x < b.x1; ++x)
          for (std::size_t c = 0; c < 3; ++c) px(out, c, y, x) = 0.5 + 0.45 * m;
      break;
    case EditType::GlobalBrightness:
      for (auto& v : out.data()) v = std::clamp(v + 0.5 * m, -1.0, 1.0);
      break;
    case EditType::BackgroundSwap: {
      // Non-shape interior pixels and every frame pixel take the new gradient.
      std::vector<int> keep(S * S, 0);
      for (std::size_t k = 0; k < kGrid * kGrid; ++k) {
        const Box kb = cell_interior(k);
        const auto mask = shape_mask(img, k);
        for (std::size_t y = 0; y < I; ++y)
          for (std::size_t x = 0; x < I; ++x) keep[(kb.y0 + y) * S + kb.x0 + x] = mask[y * I + x];
      }
      for (std::size_t y = 0; y < S; ++y) {
        for (std::size_t x = 0; x < S; ++x) {
          if (keep[y * S + x]) continue;
          px(out, 0, y, x) = 0.2 + 0.8 * m * coord(x);
          px(out, 1, y, x) = -0.2 + 0.8 * m * coord(y);
          px(out, 2, y, x) = 0.6 * m - 0.3;
        }
      }
      break;
    }
  }
  return out;
}

Tensor apply_edit(const Tensor& img, const IntentCode& intent) {
  intent.validate();
  Tensor out = img;
  for (auto e : intent.edits) out = apply_single(out, e, intent.cell, intent.magnitude);
  round_to_float(out);
  return out;
}

}  // namespace loongx::datasynth
