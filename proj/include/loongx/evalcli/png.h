#pragma once

#include <filesystem>
#include <vector>

#include "loongx/numerics/tensor.h"

namespace loongx::evalcli {

/// Writes rows of [3 x H x W] images in [-1, 1] side by side as an 8-bit RGB
/// PNG, each pixel scaled up `zoom` times with a 2-pixel gap.
void write_png_grid(const std::filesystem::path& path, const std::vector<std::vector<Tensor>>& rows,
                    std::size_t zoom = 4);

/// Reads back an 8-bit RGB PNG as [3 x H x W] bytes mapped to [0, 255].
Tensor read_png_rgb(const std::filesystem::path& path);

}  // namespace loongx::evalcli
