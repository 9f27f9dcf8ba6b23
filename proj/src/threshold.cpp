#include "aedr/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aedr/error.hpp"

namespace aedr {

using json = nlohmann::json;

std::string_view to_string(Decision d) {
  return d == Decision::Belonging ? "belonging" : "non_belonging";
}

Decision decide(double t_prime, double tau) {
  return t_prime < tau ? Decision::Belonging : Decision::NonBelonging;
}

std::string_view to_string(SignalKind kind) {
  return kind == SignalKind::Calibrated ? "calibrated" : "raw";
}

KdeModel::KdeModel(std::vector<double> samples, double bandwidth)
    : samples_(std::move(samples)), bandwidth_(bandwidth) {
  if (samples_.empty()) throw Error("KDE: no samples");
  for (double s : samples_) {
    if (!std::isfinite(s)) throw Error("KDE: samples must be finite");
  }
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) {
    throw Error("KDE: bandwidth must be finite and > 0");
  }
  const auto [lo, hi] = std::minmax_element(samples_.begin(), samples_.end());
  min_ = *lo;
  max_ = *hi;
}

namespace {

// Linear interpolation between order statistics (the common "type 7" rule).
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

double silverman_bandwidth(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

KdeModel fit_kde(std::vector<double> samples, std::optional<double> bandwidth) {
  if (samples.size() < 2) throw Error("KDE: need at least 2 samples");
  for (double s : samples) {
    if (!std::isfinite(s)) throw Error("KDE: samples must be finite");
  }
  double h = 0.0;
  if (bandwidth) {
    h = *bandwidth;
  } else {
    h = silverman_bandwidth(samples);
    if (!(h > 0.0)) throw Error("KDE: samples have zero spread; supply an explicit bandwidth");
  }
  return KdeModel(std::move(samples), h);
}

double kde_cdf(const KdeModel& model, double u) {
  const double h = model.bandwidth();
  double sum = 0.0;
  for (double s : model.samples()) sum += normal_cdf((u - s) / h);
  return sum / static_cast<double>(model.samples().size());
}

double kde_pdf(const KdeModel& model, double u) {
  const double h = model.bandwidth();
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  double sum = 0.0;
  for (double s : model.samples()) {
    const double z = (u - s) / h;
    sum += kInvSqrt2Pi * std::exp(-0.5 * z * z);
  }
  return sum / (static_cast<double>(model.samples().size()) * h);
}

double solve_threshold(const KdeModel& model, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0,1)");
  const double target = 1.0 - alpha;
  const double h = model.bandwidth();
  double lo = model.min() - 10.0 * h;
  double hi = model.max() + 10.0 * h;
  // Widen until the bracket holds; 10h already covers alpha >= ~1e-23.
  while (kde_cdf(model, lo) >= target) lo -= 10.0 * h;
  while (kde_cdf(model, hi) < target) hi += 10.0 * h;
  for (int iter = 0; iter < 2000; ++iter) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (kde_cdf(model, mid) >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

ThresholdModel fit_threshold(std::vector<double> samples, double alpha,
                             std::optional<double> bandwidth) {
  KdeModel kde = fit_kde(std::move(samples), bandwidth);
  const double tau = solve_threshold(kde, alpha);
  ThresholdModel model(std::move(kde));
  model.alpha = alpha;
  model.tau = tau;
  model.explicit_bandwidth = bandwidth.has_value();
  return model;
}

ThresholdModel ThresholdModel::for_signal(SignalKind kind) const {
  if (kind == signal) return *this;
  if (kind == SignalKind::Calibrated) {
    throw Error("threshold was fitted on the raw signal; recalibrate to obtain t' samples");
  }
  if (raw_samples.empty()) {
    throw Error("threshold file carries no raw samples; cannot refit without calibration");
  }
  const std::optional<double> h =
      explicit_bandwidth ? std::optional<double>(kde.bandwidth()) : std::nullopt;
  ThresholdModel out = fit_threshold(raw_samples, alpha, h);
  out.signal = SignalKind::Raw;
  out.metric = metric;
  out.glcm = glcm;
  out.backend_id = backend_id;
  out.raw_samples = raw_samples;
  out.calibration_ids = calibration_ids;
  return out;
}

json threshold_to_json(const ThresholdModel& model) {
  return {
      {"schema_version", model.schema_version},
      {"backend_id", model.backend_id},
      {"metric", model.metric},
      {"signal", to_string(model.signal)},
      {"glcm",
       {{"levels", model.glcm.levels},
        {"dx", model.glcm.dx},
        {"dy", model.glcm.dy},
        {"symmetric", model.glcm.symmetric}}},
      {"alpha", model.alpha},
      {"bandwidth", model.kde.bandwidth()},
      {"explicit_bandwidth", model.explicit_bandwidth},
      {"tau", model.tau},
      {"samples", model.kde.samples()},
      {"raw_samples", model.raw_samples},
      {"calibration_ids", model.calibration_ids},
  };
}

ThresholdModel threshold_from_json(const json& doc) {
  try {
    if (!doc.is_object()) throw Error("threshold file: expected a JSON object");
    const int version = doc.at("schema_version").get<int>();
    if (version != kThresholdSchemaVersion) {
      throw Error("threshold file: unsupported schema_version " + std::to_string(version));
    }
    ThresholdModel model(KdeModel(doc.at("samples").get<std::vector<double>>(),
                                  doc.at("bandwidth").get<double>()));
    model.alpha = doc.at("alpha").get<double>();
    model.tau = doc.at("tau").get<double>();
    model.backend_id = doc.at("backend_id").get<std::string>();
    model.metric = doc.at("metric").get<std::string>();
    const auto& g = doc.at("glcm");
    model.glcm = GlcmConfig{g.at("levels").get<int>(), g.at("dx").get<int>(),
                            g.at("dy").get<int>(), g.at("symmetric").get<bool>()};
    model.glcm.validate();
    const std::string signal = doc.value("signal", "calibrated");
    if (signal == "calibrated") {
      model.signal = SignalKind::Calibrated;
    } else if (signal == "raw") {
      model.signal = SignalKind::Raw;
    } else {
      throw Error("threshold file: unknown signal '" + signal + "'");
    }
    model.explicit_bandwidth = doc.value("explicit_bandwidth", false);
    if (doc.contains("raw_samples")) {
      model.raw_samples = doc.at("raw_samples").get<std::vector<double>>();
    }
    if (doc.contains("calibration_ids")) {
      model.calibration_ids = doc.at("calibration_ids").get<std::vector<std::string>>();
    }
    if (!(model.alpha > 0.0 && model.alpha < 1.0)) throw Error("threshold file: alpha outside (0,1)");
    return model;
  } catch (const json::exception& e) {
    throw Error(std::string("threshold file: ") + e.what());
  }
}

}  // namespace aedr
