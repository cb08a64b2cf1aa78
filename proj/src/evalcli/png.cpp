#include "loongx/evalcli/png.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "loongx/numerics/errors.h"

namespace loongx::evalcli {

namespace {

constexpr std::size_t kGap = 2;

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

std::uint8_t to_byte(double v) { return std::uint8_t(std::lround((std::clamp(v, -1.0, 1.0) + 1.0) * 127.5)); }

}  // namespace

void write_png_grid(const std::filesystem::path& path, const std::vector<std::vector<Tensor>>& rows,
                    std::size_t zoom) {
  if (rows.empty() || rows.front().empty()) throw DataError("png grid: no images");
  if (zoom == 0) throw InvalidConfig("png grid: zoom must be >= 1");
  const Shape shape = rows.front().front().shape();
  if (shape.size() != 3 || shape[0] != 3) throw ShapeError("png grid: images must be [3 x H x W]");
  std::size_t cols = 0;
  for (const auto& r : rows) {
    cols = std::max(cols, r.size());
    for (const auto& img : r)
      if (img.shape() != shape) throw ShapeError("png grid: images differ in shape");
  }
  const std::size_t h = shape[1] * zoom, w = shape[2] * zoom;
  const std::size_t H = rows.size() * h + (rows.size() - 1) * kGap, W = cols * w + (cols - 1) * kGap;
  std::vector<std::uint8_t> px(H * W * 3, 255);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const Tensor& img = rows[r][c];
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
          for (std::size_t ch = 0; ch < 3; ++ch) {
            const double v = img[(ch * shape[1] + y / zoom) * shape[2] + x / zoom];
            px[((r * (h + kGap) + y) * W + c * (w + kGap) + x) * 3 + ch] = to_byte(v);
          }
    }

  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.string().c_str(), "wb"));
  if (!f) throw DataError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng failed writing " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, png_uint_32(W), png_uint_32(H), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < H; ++y) png_write_row(png, px.data() + y * W * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor read_png_rgb(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) throw DataError("cannot read " + path.string());
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError("cannot decode " + path.string());
  }
  const std::size_t H = image.height, W = image.width;
  Tensor out({3, H, W});
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      for (std::size_t c = 0; c < 3; ++c) out[(c * H + y) * W + x] = buf[(y * W + x) * 3 + c];
  return out;
}

}  // namespace loongx::evalcli
