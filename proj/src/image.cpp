#include "aedr/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aedr/error.hpp"

namespace aedr {

namespace {

void check_dims(int width, int height, int channels) {
  if (width <= 0 || height <= 0) {
    throw Error("image dimensions must be positive");
  }
  if (channels != 1 && channels != 3) {
    throw Error("unsupported channel count " + std::to_string(channels));
  }
}

}  // namespace

Image::Image(int width, int height, int channels)
    : dims_{width, height, channels} {
  check_dims(width, height, channels);
  pixels_.assign(dims_.samples(), 0.0);
}

Image::Image(int width, int height, int channels, std::vector<double> pixels)
    : dims_{width, height, channels}, pixels_(std::move(pixels)) {
  check_dims(width, height, channels);
  if (pixels_.size() != dims_.samples()) {
    throw Error("pixel buffer length does not match dimensions");
  }
  for (double v : pixels_) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error("pixel value outside [0,1]");
  }
}

Image Image::clamped(int width, int height, int channels, std::vector<double> pixels) {
  for (double& v : pixels) {
    v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
  }
  return Image(width, height, channels, std::move(pixels));
}

QuantizedImage::QuantizedImage(int width, int height, int levels,
                               std::vector<std::uint16_t> codes)
    : width_(width), height_(height), levels_(levels), codes_(std::move(codes)) {
  if (width <= 0 || height <= 0) throw Error("image dimensions must be positive");
  if (levels < 2 || levels > 65536) throw Error("levels must be in [2, 65536]");
  if (codes_.size() != static_cast<std::size_t>(width) * height) {
    throw Error("code buffer length does not match dimensions");
  }
  for (auto c : codes_) {
    if (c >= levels) throw Error("gray-level code out of range");
  }
}

Image to_grayscale(const Image& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) {
    throw Error("unsupported channel count " + std::to_string(img.channels()));
  }
  const auto px = img.pixels();
  std::vector<double> out(px.size() / 3);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.299 * px[3 * i] + 0.587 * px[3 * i + 1] + 0.114 * px[3 * i + 2];
  }
  return Image::clamped(img.width(), img.height(), 1, std::move(out));
}

QuantizedImage quantize(const Image& gray, int levels) {
  if (gray.channels() != 1) throw Error("quantize expects a single-channel image");
  if (levels < 2) throw Error("levels must be >= 2");
  std::vector<std::uint16_t> codes(gray.size());
  const auto px = gray.pixels();
  const auto top = static_cast<double>(levels - 1);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    codes[i] = static_cast<std::uint16_t>(std::min(std::floor(px[i] * levels), top));
  }
  return QuantizedImage(gray.width(), gray.height(), levels, std::move(codes));
}

}  // namespace aedr
