#include "aedr/glcm.hpp"

#include <cmath>
#include <cstdint>
#include <cstdlib>

#include "aedr/error.hpp"

namespace aedr {

void GlcmConfig::validate() const {
  if (levels < 2) throw Error("GLCM levels must be >= 2");
  if (dx == 0 && dy == 0) throw Error("GLCM offset must be nonzero");
}

GlcmMatrix::GlcmMatrix(int levels, std::vector<double> probs)
    : levels_(levels), probs_(std::move(probs)) {
  if (levels < 2) throw Error("GLCM levels must be >= 2");
  if (probs_.size() != static_cast<std::size_t>(levels) * levels) {
    throw Error("GLCM size does not match levels");
  }
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw Error("GLCM entries must be finite and >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error("GLCM is not normalized");
}

GlcmMatrix compute_glcm(const QuantizedImage& img, const GlcmConfig& cfg) {
  cfg.validate();
  if (img.levels() != cfg.levels) {
    throw Error("GLCM level mismatch: image has " + std::to_string(img.levels()) +
                ", config has " + std::to_string(cfg.levels));
  }
  const int l = cfg.levels;
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(l) * l, 0);
  std::uint64_t total = 0;

  const int x0 = std::max(0, -cfg.dx), x1 = std::min(img.width(), img.width() - cfg.dx);
  const int y0 = std::max(0, -cfg.dy), y1 = std::min(img.height(), img.height() - cfg.dy);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const int i = img.at(x, y);
      const int j = img.at(x + cfg.dx, y + cfg.dy);
      ++counts[static_cast<std::size_t>(i) * l + j];
      ++total;
      if (cfg.symmetric) {
        ++counts[static_cast<std::size_t>(j) * l + i];
        ++total;
      }
    }
  }
  if (total == 0) throw Error("GLCM: no valid pixel pairs for the configured offset");

  std::vector<double> probs(counts.size());
  const auto denom = static_cast<double>(total);
  for (std::size_t k = 0; k < counts.size(); ++k) probs[k] = counts[k] / denom;
  return GlcmMatrix(l, std::move(probs));
}

double homogeneity(const GlcmMatrix& glcm) {
  const int l = glcm.levels();
  double h = 0.0;
  for (int i = 0; i < l; ++i) {
    for (int j = 0; j < l; ++j) {
      h += glcm(i, j) / (1.0 + std::abs(i - j));
    }
  }
  return h;
}

double image_homogeneity(const Image& img, const GlcmConfig& cfg) {
  return homogeneity(compute_glcm(quantize(to_grayscale(img), cfg.levels), cfg));
}

}  // namespace aedr
