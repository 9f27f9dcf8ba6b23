#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>

#include "aedr/error.hpp"
#include "aedr/image.hpp"

namespace aedr {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void on_png_error(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

}  // namespace

Image load_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error("cannot open '" + path.string() + "'");

  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error("'" + path.string() + "' is not a PNG file");
  }

  std::string message;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, on_png_error, on_png_warning);
  if (!png) throw Error("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("libpng initialisation failed");
  }

  // Everything that can longjmp lives inside this block; no C++ objects with
  // non-trivial destructors are created between setjmp and the longjmp targets.
  std::vector<double> pixels;
  volatile int width = 0, height = 0, channels = 0;
  std::string failure;
  std::vector<png_byte> raw;
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("failed to decode '" + path.string() + "': " + message);
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);

  if (bit_depth != 8) {
    failure = "unsupported bit depth " + std::to_string(bit_depth);
  } else if (color_type == PNG_COLOR_TYPE_GRAY) {
    channels = 1;
  } else if (color_type == PNG_COLOR_TYPE_RGB) {
    channels = 3;
  } else {
    failure = "unsupported color type " + std::to_string(color_type);
  }

  if (failure.empty()) {
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    raw.resize(stride * static_cast<std::size_t>(height));
    rows.resize(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) rows[y] = raw.data() + stride * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);

  if (!failure.empty()) throw Error("'" + path.string() + "': " + failure);

  const std::size_t row_samples = static_cast<std::size_t>(width) * channels;
  pixels.resize(row_samples * height);
  const std::size_t stride = raw.size() / height;
  for (int y = 0; y < height; ++y) {
    for (std::size_t i = 0; i < row_samples; ++i) {
      pixels[y * row_samples + i] = raw[y * stride + i] / 255.0;
    }
  }
  return Image(width, height, static_cast<int>(channels), std::move(pixels));
}

void save_png(const Image& img, const std::filesystem::path& path) {
  if (img.empty()) throw Error("cannot save an empty image");
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error("cannot write '" + path.string() + "'");

  const std::size_t row_samples = static_cast<std::size_t>(img.width()) * img.channels();
  std::vector<png_byte> raw(row_samples * img.height());
  const auto px = img.pixels();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    raw[i] = static_cast<png_byte>(std::lround(px[i] * 255.0));
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
  for (int y = 0; y < img.height(); ++y) rows[y] = raw.data() + row_samples * y;

  std::string message;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, on_png_error, on_png_warning);
  if (!png) throw Error("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("failed to encode '" + path.string() + "': " + message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), 8,
               img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace aedr
