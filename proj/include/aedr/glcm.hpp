#pragma once

#include <vector>

#include "aedr/image.hpp"

namespace aedr {

struct GlcmConfig {
  int levels = 32;
  int dx = 1;
  int dy = 0;
  bool symmetric = true;

  /// Throws unless levels >= 2 and the offset is nonzero.
  void validate() const;

  friend bool operator==(const GlcmConfig&, const GlcmConfig&) = default;
};

/// Normalized gray-level co-occurrence matrix, row-major levels x levels.
class GlcmMatrix {
 public:
  GlcmMatrix(int levels, std::vector<double> probs);

  int levels() const { return levels_; }
  double operator()(int i, int j) const {
    return probs_[static_cast<std::size_t>(i) * levels_ + j];
  }
  const std::vector<double>& probs() const { return probs_; }

 private:
  int levels_;
  std::vector<double> probs_;
};

/// Counts every in-bounds pair (p, p + offset), plus the reversed pair when
/// symmetric, and normalizes to probabilities.
GlcmMatrix compute_glcm(const QuantizedImage& img, const GlcmConfig& cfg);

/// Sum over i,j of P(i,j) / (1 + |i - j|).
double homogeneity(const GlcmMatrix& glcm);

/// Convenience: grayscale, quantize to cfg.levels, GLCM, homogeneity.
double image_homogeneity(const Image& img, const GlcmConfig& cfg);

}  // namespace aedr
