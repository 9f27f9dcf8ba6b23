#include "aedr/texture.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "aedr/error.hpp"

namespace aedr {

namespace {

using Complex = std::complex<double>;

// Signed frequency in cycles per pixel for FFT bin `k` of an `n`-point transform.
double bin_frequency(int k, int n) {
  return static_cast<double>(k <= n / 2 ? k : k - n) / static_cast<double>(n);
}

void fft_2d(std::vector<Complex>& data, int width, int height, bool inverse) {
  Eigen::FFT<double> fft;
  std::vector<Complex> line, out;
  for (int y = 0; y < height; ++y) {
    line.assign(data.begin() + y * width, data.begin() + (y + 1) * width);
    if (inverse) {
      fft.inv(out, line);
    } else {
      fft.fwd(out, line);
    }
    std::copy(out.begin(), out.end(), data.begin() + y * width);
  }
  line.resize(static_cast<std::size_t>(height));
  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y) line[y] = data[y * width + x];
    if (inverse) {
      fft.inv(out, line);
    } else {
      fft.fwd(out, line);
    }
    for (int y = 0; y < height; ++y) data[y * width + x] = out[y];
  }
}

}  // namespace

Image generate_texture(const TextureFamily& family, int width, int height, std::uint64_t seed) {
  if (width <= 0 || height <= 0) throw Error("texture: dimensions must be positive");
  if (!(family.correlation_length > 0.0)) throw Error("texture: correlation length must be > 0");
  if (family.wavelength < 0.0) throw Error("texture: wavelength must be >= 0");

  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 engine(seq);
  std::normal_distribution<double> normal;

  std::vector<Complex> field(n);
  for (auto& v : field) v = Complex(normal(engine), 0.0);
  fft_2d(field, width, height, false);

  const double f0 = family.wavelength > 0.0 ? 1.0 / family.wavelength : 0.0;
  const double c = 2.0 * std::numbers::pi * std::numbers::pi * family.correlation_length *
                   family.correlation_length;
  std::vector<double> gain(n);
  double power = 0.0;
  for (int y = 0; y < height; ++y) {
    const double fy = bin_frequency(y, height);
    for (int x = 0; x < width; ++x) {
      const double fx = bin_frequency(x, width);
      const double d = std::hypot(fx, fy) - f0;
      const double s = std::exp(-c * d * d);
      gain[y * width + x] = std::sqrt(s);
      power += s;
    }
  }
  // White noise has a flat unit spectrum; scaling by sqrt(S / mean S) keeps unit variance.
  const double norm = std::sqrt(static_cast<double>(n) / power);
  for (std::size_t i = 0; i < n; ++i) field[i] *= gain[i] * norm;
  fft_2d(field, width, height, true);

  std::vector<double> px(n);
  for (std::size_t i = 0; i < n; ++i) px[i] = family.mean + family.amplitude * field[i].real();
  return Image::clamped(width, height, 1, std::move(px));
}

}  // namespace aedr
