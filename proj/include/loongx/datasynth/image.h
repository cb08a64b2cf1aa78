#pragma once

#include <cstdint>
#include <vector>

#include "loongx/datasynth/intent.h"

namespace loongx::datasynth {

/// Procedural 3 x 32 x 32 scene: a linear colour gradient with 2-5 square or
/// disc shapes, each inside the 6 x 6 interior of its own grid cell. Values
/// lie in [-1, 1] and are representable in single precision.
Tensor gen_image(std::uint64_t seed);

/// Interior pixels of a cell as [y0, y1) x [x0, x1).
struct Box {
  std::size_t y0, y1, x0, x1;
};
Box cell_interior(std::size_t cell);

/// Background under the interior of a cell, interpolated from the cell's
/// 1-pixel frame (exact for linear backgrounds). Returns [3 x 6 x 6].
Tensor frame_background(const Tensor& img, std::size_t cell);
/// Interior pixels whose largest channel deviation from frame_background
/// exceeds 0.05; [6 x 6] of 0/1 values, row-major.
std::vector<int> shape_mask(const Tensor& img, std::size_t cell);
/// Cells whose interior holds a shape.
std::vector<std::size_t> occupied_cells(const Tensor& img);

/// One edit at the intent's cell and magnitude.
Tensor apply_single(const Tensor& img, EditType e, std::size_t cell, double magnitude);
/// All edits of the intent in canonical order; result rounded to single
/// precision. Throws InvalidConfig for an invalid intent.
Tensor apply_edit(const Tensor& img, const IntentCode& intent);

}  // namespace loongx::datasynth
