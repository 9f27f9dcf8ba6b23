#include "aedr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "aedr/error.hpp"

namespace aedr {

std::string_view to_string(LossMetric metric) {
  switch (metric) {
    case LossMetric::Mse: return "mse";
    case LossMetric::Mae: return "mae";
    case LossMetric::SsimLoss: return "ssim";
  }
  return "mse";
}

std::optional<LossMetric> parse_loss_metric(std::string_view name) {
  if (name == "mse") return LossMetric::Mse;
  if (name == "mae") return LossMetric::Mae;
  if (name == "ssim") return LossMetric::SsimLoss;
  return std::nullopt;
}

namespace {

void require_same_dims(const Image& a, const Image& b) {
  if (a.dims() != b.dims()) throw Error("loss: image dimensions differ");
  if (a.empty()) throw Error("loss: empty image");
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const int r = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - r;
    w[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable "valid" filtering of one channel plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int width, int height,
                                 const std::vector<double>& w) {
  const int n = static_cast<int>(w.size());
  const int ow = width - n + 1;
  const int oh = height - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += w[k] * plane[y * width + x + k];
      tmp[y * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += w[k] * tmp[(y + k) * ow + x];
      out[y * ow + x] = s;
    }
  }
  return out;
}

double ssim_plane(const std::vector<double>& a, const std::vector<double>& b, int width,
                  int height) {
  constexpr double kC1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double kC2 = (0.03 * 1.0) * (0.03 * 1.0);
  int size = std::min({11, width, height});
  if (size % 2 == 0) --size;
  const auto w = gaussian_window(size, 1.5);

  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = filter_valid(a, width, height, w);
  const auto mu_b = filter_valid(b, width, height, w);
  const auto e_aa = filter_valid(aa, width, height, w);
  const auto e_bb = filter_valid(bb, width, height, w);
  const auto e_ab = filter_valid(ab, width, height, w);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    total += ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
             ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
  }
  return total / static_cast<double>(mu_a.size());
}

}  // namespace

double mean_ssim(const Image& a, const Image& b) {
  require_same_dims(a, b);
  const int c = a.channels();
  const std::size_t plane_size = static_cast<std::size_t>(a.width()) * a.height();
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  double sum = 0.0;
  std::vector<double> ca(plane_size), cb(plane_size);
  for (int ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < plane_size; ++i) {
      ca[i] = pa[i * c + ch];
      cb[i] = pb[i * c + ch];
    }
    sum += ssim_plane(ca, cb, a.width(), a.height());
  }
  return sum / c;
}

double loss(LossMetric metric, const Image& a, const Image& b) {
  require_same_dims(a, b);
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  switch (metric) {
    case LossMetric::Mse: {
      double s = 0.0;
      for (std::size_t i = 0; i < pa.size(); ++i) {
        const double d = pa[i] - pb[i];
        s += d * d;
      }
      return s / static_cast<double>(pa.size());
    }
    case LossMetric::Mae: {
      double s = 0.0;
      for (std::size_t i = 0; i < pa.size(); ++i) s += std::abs(pa[i] - pb[i]);
      return s / static_cast<double>(pa.size());
    }
    case LossMetric::SsimLoss:
      // Clamp tiny negative rounding residue for identical inputs.
      return std::clamp(1.0 - mean_ssim(a, b), 0.0, 2.0);
  }
  throw Error("unknown loss metric");
}

LossFunction loss_function(LossMetric metric) {
  return [metric](const Image& a, const Image& b) { return loss(metric, a, b); };
}

}  // namespace aedr
