#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aedr/glcm.hpp"

namespace aedr {

enum class Decision { Belonging, NonBelonging };

std::string_view to_string(Decision d);

/// belonging iff t_prime < tau (strict).
Decision decide(double t_prime, double tau);

/// Which attribution signal a threshold was fitted on: t' = t * H or raw t.
enum class SignalKind { Calibrated, Raw };

std::string_view to_string(SignalKind kind);

/// Gaussian kernel density estimate over scalar samples.
class KdeModel {
 public:
  /// Throws unless samples are nonempty and finite and bandwidth > 0.
  KdeModel(std::vector<double> samples, double bandwidth);

  const std::vector<double>& samples() const { return samples_; }
  double bandwidth() const { return bandwidth_; }
  double min() const { return min_; }
  double max() const { return max_; }

 private:
  std::vector<double> samples_;
  double bandwidth_;
  double min_;
  double max_;
};

/// 0.9 * min(sd, IQR/1.34) * n^(-1/5), sd with n-1 denominator and quartiles by
/// linear interpolation. Falls back to sd when the IQR is zero. Returns 0 for
/// zero spread.
double silverman_bandwidth(std::span<const double> samples);

/// Needs >= 2 samples; without an explicit bandwidth the samples must have spread.
KdeModel fit_kde(std::vector<double> samples, std::optional<double> bandwidth = std::nullopt);

/// (1/N) sum_i Phi((u - s_i) / h).
double kde_cdf(const KdeModel& model, double u);

/// Density (1/(N h)) sum_i phi((u - s_i) / h).
double kde_pdf(const KdeModel& model, double u);

/// Smallest u with kde_cdf(u) >= 1 - alpha, located by bisection on
/// [min - 10h, max + 10h] down to adjacent doubles.
double solve_threshold(const KdeModel& model, double alpha);

inline constexpr int kThresholdSchemaVersion = 1;

/// A fitted KDE plus its (1 - alpha) quantile and the context it is valid for.
struct ThresholdModel {
  explicit ThresholdModel(KdeModel fitted) : kde(std::move(fitted)) {}

  KdeModel kde;
  double alpha = 0.05;
  double tau = 0.0;
  SignalKind signal = SignalKind::Calibrated;
  bool explicit_bandwidth = false;
  std::string metric = "mse";
  GlcmConfig glcm;
  std::string backend_id;
  /// Raw t of the calibration images (same order as the calibrated samples
  /// when both are present); lets the uncalibrated threshold be refitted.
  std::vector<double> raw_samples;
  /// Ids of the calibration images; evaluation refuses overlapping corpora.
  std::vector<std::string> calibration_ids;
  int schema_version = kThresholdSchemaVersion;

  /// Same calibration, refitted on the requested signal. Throws if the raw
  /// samples needed for a Calibrated -> Raw switch are missing.
  ThresholdModel for_signal(SignalKind kind) const;
};

/// Fits the KDE and solves tau in one step.
ThresholdModel fit_threshold(std::vector<double> samples, double alpha,
                             std::optional<double> bandwidth = std::nullopt);

nlohmann::json threshold_to_json(const ThresholdModel& model);
ThresholdModel threshold_from_json(const nlohmann::json& doc);

}  // namespace aedr
