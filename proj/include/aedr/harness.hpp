#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aedr/linear_backend.hpp"
#include "aedr/signal.hpp"
#include "aedr/texture.hpp"
#include "aedr/threshold.hpp"

namespace aedr {

struct LabeledImage {
  std::string id;
  Image image;
  std::string source;
};

using Corpus = std::vector<LabeledImage>;

struct ScoringOptions {
  LossMetric metric = kDefaultLoss;
  GlcmConfig glcm;
  /// Top-level seed; per-image call seeds are derived from it and the image id.
  std::uint64_t seed = 0;
  /// 0 resolves through AEDR_WORKERS / hardware concurrency.
  int workers = 0;
};

/// Call seed for one image, a pure function of (seed, id) so results do not
/// depend on scheduling or corpus order.
std::uint64_t image_call_seed(std::uint64_t seed, std::string_view image_id);

std::vector<ReconstructionRecord> score_corpus(const Reconstructor& backend, const Corpus& corpus,
                                               const ScoringOptions& options);

/// Single-loss signals L(R(x), x) for every image.
std::vector<double> score_baseline(const Reconstructor& backend, const Corpus& corpus,
                                   const ScoringOptions& options);

/// Decodes n latent draws z ~ N(0, latent_scale^2 * diag(latent variance)).
/// Image i depends only on (seed, i).
Corpus synthesize_corpus(const LinearAEBackend& backend, int n, std::uint64_t seed,
                         std::string_view id_prefix = "synth", double latent_scale = 1.0);

/// n raw textures of `family`; image i depends only on (seed, i).
Corpus texture_corpus(const TextureFamily& family, int n, int width, int height,
                      std::uint64_t seed, std::string_view id_prefix);

std::vector<Image> images_of(const Corpus& corpus);

/// Throws if any id appears in both corpora.
void require_disjoint(const Corpus& a, const Corpus& b, std::string_view what);

/// KDE threshold over the chosen signal of pre-scored calibration records.
ThresholdModel calibrate_records(const std::vector<ReconstructionRecord>& records, double alpha,
                                 SignalKind signal = SignalKind::Calibrated,
                                 std::optional<double> bandwidth = std::nullopt);

/// Scores `corpus` (belonging images of the target) and fits the threshold.
ThresholdModel calibrate(const Reconstructor& backend, const Corpus& corpus, double alpha,
                         const ScoringOptions& options,
                         SignalKind signal = SignalKind::Calibrated,
                         std::optional<double> bandwidth = std::nullopt);

struct ImageVerdict {
  std::string image_id;
  double signal = 0.0;
  Decision decision = Decision::Belonging;
  Decision truth = Decision::Belonging;
};

/// Confusion counts with belonging as the positive class.
struct ConfusionReport {
  std::string signal;
  double tau = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  double accuracy = 0.0;
  std::vector<ImageVerdict> per_image;

  double false_negative_rate() const;
};

ConfusionReport tally(std::string signal, double tau, std::vector<ImageVerdict> verdicts);

/// Classifies pre-scored records against `model` (refitted to the raw signal
/// when use_calibration is false).
ConfusionReport evaluate_records(const ThresholdModel& model,
                                 const std::vector<ReconstructionRecord>& belonging,
                                 const std::vector<ReconstructionRecord>& non_belonging,
                                 bool use_calibration);

/// Scores both corpora with the metric and GLCM settings stored in `model`
/// and tallies the decisions. Refuses corpora overlapping the calibration ids.
ConfusionReport evaluate(const Reconstructor& backend, const ThresholdModel& model,
                         const Corpus& belonging, const Corpus& non_belonging,
                         const ScoringOptions& options, bool use_calibration = true);

/// Single-loss baseline: KDE threshold on L1 of `calibration`, belonging iff L1 < tau.
ConfusionReport evaluate_baseline(const Reconstructor& backend, const Corpus& calibration,
                                  const Corpus& belonging, const Corpus& non_belonging,
                                  double alpha, const ScoringOptions& options);

struct AlphaSweepRow {
  double alpha = 0.0;
  double estimation_accuracy = 0.0;
  double evaluation_accuracy = 0.0;
  double average_accuracy = 0.0;
  double tau = 0.0;
};

struct AlphaSweepReport {
  std::vector<AlphaSweepRow> rows;
  double best_alpha = 0.0;
};

/// For each alpha: threshold from the estimation belonging corpus, accuracy on
/// the estimation split and on the evaluation split. The best alpha maximises
/// the average; ties go to the smaller alpha.
AlphaSweepReport sweep_alpha(const Reconstructor& backend, const Corpus& estimation,
                             const Corpus& evaluation, const Corpus& non_belonging_estimation,
                             const Corpus& non_belonging_evaluation,
                             const std::vector<double>& grid, const ScoringOptions& options,
                             SignalKind signal = SignalKind::Calibrated);

struct BenchReport {
  std::string backend_id;
  std::string metric;
  std::size_t images = 0;
  std::uint64_t reconstruct_calls = 0;
  double total_seconds = 0.0;
  double mean_seconds_per_image = 0.0;
};

/// Times double reconstruction over `corpus`; throws unless exactly two
/// reconstruct calls were made per image.
BenchReport bench(const Reconstructor& backend, const Corpus& corpus,
                  const ScoringOptions& options);

/// Desk-scale attribution experiment: a target and an "other model" linear
/// backend trained on disjoint texture families; the target is calibrated on
/// its own synthesized images and evaluated on fresh ones against the other
/// backend's synthesized images.
struct DeskExperimentConfig {
  int size = 64;
  int latent_dim = 16;
  double relative_noise = kDefaultRelativeNoise;
  int train_count = 400;
  int calibration_count = 500;
  int belonging_count = 500;
  int non_belonging_count = 500;
  double alpha = 0.05;
  TextureFamily target{"target", 8.0, 16.0, 0.5, 0.12};
  TextureFamily other{"other", 8.0, 64.0 / 12.0, 0.5, 0.12};
  /// When set, half of every synthesized corpus is drawn at low_latent_scale
  /// (near-constant images) and half at high_latent_scale (high texture).
  bool mixed_homogeneity = false;
  double low_latent_scale = 0.05;
  double high_latent_scale = 1.5;
  std::uint64_t seed = 0;
  LossMetric metric = kDefaultLoss;
  GlcmConfig glcm;
  int workers = 0;
};

struct DeskExperimentReport {
  std::string target_backend;
  std::string other_backend;
  double target_noise_sigma = 0.0;
  ThresholdModel threshold;
  ConfusionReport calibrated;
  ConfusionReport uncalibrated;
  ConfusionReport baseline;
  std::vector<ReconstructionRecord> calibration_records;
  std::vector<ReconstructionRecord> belonging_records;
  std::vector<ReconstructionRecord> non_belonging_records;
};

DeskExperimentReport run_desk_experiment(const DeskExperimentConfig& config);

nlohmann::json to_json(const ReconstructionRecord& record);
nlohmann::json to_json(const ConfusionReport& report, bool include_per_image = true);
nlohmann::json to_json(const AlphaSweepReport& report);
nlohmann::json to_json(const BenchReport& report);
nlohmann::json to_json(const ChainRecord& chain);
nlohmann::json to_json(const DeskExperimentReport& report, bool include_per_image = true);

/// CSV with columns image_id,l1,l2,ratio,homogeneity,calibrated,degenerate.
std::string records_to_csv(const std::vector<ReconstructionRecord>& records);
/// CSV with columns image_id,signal,decision,truth.
std::string verdicts_to_csv(const std::vector<ImageVerdict>& verdicts);

/// Writes each image as <id>.png plus manifest.csv (id,label,source,file).
void save_corpus_dir(const Corpus& corpus, const std::filesystem::path& dir,
                     std::string_view label);

/// Reads manifest.csv when present, otherwise every *.png in name order with
/// the file stem as id.
Corpus load_corpus_dir(const std::filesystem::path& dir);

}  // namespace aedr
