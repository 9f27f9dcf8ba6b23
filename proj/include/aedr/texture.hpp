#pragma once

#include <cstdint>
#include <string>

#include "aedr/image.hpp"

namespace aedr {

/// A family of stationary Gaussian random field textures.
///
/// The power spectrum is a Gaussian ring exp(-2 pi^2 l^2 (|f| - f0)^2) where l
/// is the correlation length in pixels and f0 = 1 / wavelength cycles per
/// pixel (wavelength 0 gives an ordinary low-pass field). Families with
/// separated rings occupy disjoint frequency bands, so their principal
/// subspaces barely overlap.
struct TextureFamily {
  std::string name = "texture";
  double correlation_length = 8.0;
  double wavelength = 0.0;
  double mean = 0.5;
  double amplitude = 0.1;
};

/// One periodic single-channel texture; samples are mean + amplitude * field
/// with a unit-variance field, clamped to [0,1].
Image generate_texture(const TextureFamily& family, int width, int height, std::uint64_t seed);

}  // namespace aedr
