#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace aedr {

struct Dims {
  int width = 0;
  int height = 0;
  int channels = 0;

  std::size_t samples() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(channels);
  }
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Row-major, channel-interleaved image with samples in [0,1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels);
  /// Takes ownership of `pixels`; throws if the length or range is wrong.
  Image(int width, int height, int channels, std::vector<double> pixels);

  /// Builds an image from arbitrary reals, clamping each sample to [0,1].
  static Image clamped(int width, int height, int channels, std::vector<double> pixels);

  int width() const { return dims_.width; }
  int height() const { return dims_.height; }
  int channels() const { return dims_.channels; }
  const Dims& dims() const { return dims_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  std::span<const double> pixels() const { return pixels_; }

  double at(int x, int y, int c = 0) const {
    return pixels_[(static_cast<std::size_t>(y) * dims_.width + x) * dims_.channels + c];
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  Dims dims_;
  std::vector<double> pixels_;
};

/// Gray-level codes in [0, levels-1], row-major.
class QuantizedImage {
 public:
  QuantizedImage(int width, int height, int levels, std::vector<std::uint16_t> codes);

  int width() const { return width_; }
  int height() const { return height_; }
  int levels() const { return levels_; }
  std::span<const std::uint16_t> codes() const { return codes_; }
  int at(int x, int y) const { return codes_[static_cast<std::size_t>(y) * width_ + x]; }

 private:
  int width_;
  int height_;
  int levels_;
  std::vector<std::uint16_t> codes_;
};

/// BT.601 luma for RGB input; a copy for single-channel input.
Image to_grayscale(const Image& img);

/// Uniform binning: code = min(floor(p * levels), levels - 1).
QuantizedImage quantize(const Image& gray, int levels);

/// Reads an 8-bit gray or RGB PNG, mapping samples by v/255.
Image load_png(const std::filesystem::path& path);

/// Writes an 8-bit PNG (gray or RGB) using round(v*255).
void save_png(const Image& img, const std::filesystem::path& path);

}  // namespace aedr
