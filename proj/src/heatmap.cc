#include "rownav/heatmap.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "rownav/errors.h"

namespace rownav {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint16_t ToSample(double value) {
  return static_cast<std::uint16_t>(
      std::lround(std::clamp(value, 0.0, 1.0) * 65535.0));
}

}  // namespace

Heatmap::Heatmap(int width, int height, double fill)
    : width_(width),
      height_(height),
      values_(static_cast<std::size_t>(std::max(width, 0)) *
                  static_cast<std::size_t>(std::max(height, 0)),
              fill) {
  if (width < 0 || height < 0) throw Error("negative heatmap dimensions");
}

int HalfResolution(int full) { return (full + 1) / 2; }

double QuantizeHeatmapValue(double value) {
  return ToSample(value) / 65535.0;
}

void WriteHeatmapPng(const std::filesystem::path& file, const Heatmap& h) {
  FilePtr fp(std::fopen(file.c_str(), "wb"));
  if (!fp) throw Error("cannot open " + file.string() + " for writing");

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng initialization failed");
  }
  std::vector<png_byte> row_bytes(static_cast<std::size_t>(h.width()) * 2);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("failed to encode " + file.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, h.width(), h.height(), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  // Timestamps and text chunks are never written, so output is byte-stable.
  png_write_info(png, info);
  for (int r = 0; r < h.height(); ++r) {
    const auto row = h.row(r);
    for (int c = 0; c < h.width(); ++c) {
      const std::uint16_t s = ToSample(row[c]);
      row_bytes[2 * c] = static_cast<png_byte>(s >> 8);  // big-endian
      row_bytes[2 * c + 1] = static_cast<png_byte>(s & 0xff);
    }
    png_write_row(png, row_bytes.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Heatmap ReadHeatmapPng(const std::filesystem::path& file) {
  FilePtr fp(std::fopen(file.c_str(), "rb"));
  if (!fp) throw Error("cannot open " + file.string());

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("libpng initialization failed");
  }
  Heatmap h;
  std::vector<png_byte> row_bytes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("failed to decode " + file.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  if (png_get_bit_depth(png, info) != 16 ||
      png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw SchemaError(file.string() + " is not a 16-bit grayscale heatmap");
  }
  h = Heatmap(width, height);
  row_bytes.resize(static_cast<std::size_t>(width) * 2);
  for (int r = 0; r < height; ++r) {
    png_read_row(png, row_bytes.data(), nullptr);
    for (int c = 0; c < width; ++c) {
      const unsigned s = (static_cast<unsigned>(row_bytes[2 * c]) << 8) |
                         row_bytes[2 * c + 1];
      h.at(r, c) = s / 65535.0;
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return h;
}

}  // namespace rownav
