#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "aedr/image.hpp"

namespace aedr {

enum class LossMetric { Mse, Mae, SsimLoss };

inline constexpr LossMetric kDefaultLoss = LossMetric::Mse;

std::string_view to_string(LossMetric metric);
std::optional<LossMetric> parse_loss_metric(std::string_view name);

/// Reconstruction loss between two images of identical dimensions.
///
/// MSE and MAE average over every sample. SSIM_LOSS is 1 - mean SSIM with an
/// 11x11 Gaussian window (sigma 1.5, K1 0.01, K2 0.03, dynamic range 1),
/// computed per channel over the valid window positions and averaged. Images
/// smaller than the window in either direction use the largest odd window
/// that fits.
double loss(LossMetric metric, const Image& a, const Image& b);

/// Mean SSIM over channels.
double mean_ssim(const Image& a, const Image& b);

/// Loss callable used where the metric is injected rather than enumerated.
using LossFunction = std::function<double(const Image&, const Image&)>;

LossFunction loss_function(LossMetric metric);

}  // namespace aedr
