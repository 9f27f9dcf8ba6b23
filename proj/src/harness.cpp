#include "aedr/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "aedr/error.hpp"
#include "aedr/json_io.hpp"
#include "aedr/parallel.hpp"

namespace aedr {

using json = nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string indexed_id(std::string_view prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", i);
  return std::string(prefix) + "-" + buf;
}

std::mt19937_64 indexed_engine(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

LossMetric metric_of(const ThresholdModel& model) {
  const auto metric = parse_loss_metric(model.metric);
  if (!metric) throw Error("threshold uses unknown loss metric '" + model.metric + "'");
  return *metric;
}

void require_nonempty(const Corpus& corpus, std::string_view what) {
  if (corpus.empty()) throw Error(std::string(what) + " corpus is empty");
}

std::vector<ImageVerdict> verdicts_for(const std::vector<ReconstructionRecord>& records,
                                       double tau, SignalKind kind, Decision truth) {
  std::vector<ImageVerdict> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back({r.image_id, signal_value(r, kind), classify(r, tau, kind), truth});
  }
  return out;
}

double accuracy_of(const ThresholdModel& model, const std::vector<ReconstructionRecord>& bel,
                   const std::vector<ReconstructionRecord>& non) {
  std::size_t correct = 0;
  for (const auto& r : bel) correct += classify(r, model.tau, model.signal) == Decision::Belonging;
  for (const auto& r : non) {
    correct += classify(r, model.tau, model.signal) == Decision::NonBelonging;
  }
  return static_cast<double>(correct) / static_cast<double>(bel.size() + non.size());
}

Corpus concat(Corpus a, Corpus b) {
  a.insert(a.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
  return a;
}

}  // namespace

std::uint64_t image_call_seed(std::uint64_t seed, std::string_view image_id) {
  return splitmix64(seed ^ splitmix64(fnv1a(image_id)));
}

std::vector<ReconstructionRecord> score_corpus(const Reconstructor& backend, const Corpus& corpus,
                                               const ScoringOptions& options) {
  options.glcm.validate();
  std::vector<ReconstructionRecord> records(corpus.size());
  parallel_for(corpus.size(), options.workers, [&](std::size_t i) {
    const auto& item = corpus[i];
    records[i] = double_reconstruct(backend, item.image, options.metric, options.glcm,
                                    image_call_seed(options.seed, item.id), item.id);
  });
  return records;
}

std::vector<double> score_baseline(const Reconstructor& backend, const Corpus& corpus,
                                   const ScoringOptions& options) {
  std::vector<double> out(corpus.size());
  parallel_for(corpus.size(), options.workers, [&](std::size_t i) {
    out[i] = baseline_signal(backend, corpus[i].image, options.metric,
                             image_call_seed(options.seed, corpus[i].id));
  });
  return out;
}

Corpus synthesize_corpus(const LinearAEBackend& backend, int n, std::uint64_t seed,
                         std::string_view id_prefix, double latent_scale) {
  if (n < 1) throw Error("synthesize: count must be >= 1");
  if (!(latent_scale >= 0.0)) throw Error("synthesize: latent scale must be >= 0");
  const Eigen::VectorXd stddev = backend.latent_variance().cwiseMax(0.0).cwiseSqrt();
  Corpus out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto engine = indexed_engine(seed, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(stddev.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = latent_scale * stddev[j] * normal(engine);
    out[i] = {indexed_id(id_prefix, i), backend.decode(z), backend.id()};
  }
  return out;
}

Corpus texture_corpus(const TextureFamily& family, int n, int width, int height,
                      std::uint64_t seed, std::string_view id_prefix) {
  if (n < 1) throw Error("texture corpus: count must be >= 1");
  Corpus out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::uint64_t image_seed = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i)));
    out[i] = {indexed_id(id_prefix, i), generate_texture(family, width, height, image_seed),
              family.name};
  }
  return out;
}

std::vector<Image> images_of(const Corpus& corpus) {
  std::vector<Image> out;
  out.reserve(corpus.size());
  for (const auto& item : corpus) out.push_back(item.image);
  return out;
}

void require_disjoint(const Corpus& a, const Corpus& b, std::string_view what) {
  std::unordered_set<std::string> ids;
  for (const auto& item : a) ids.insert(item.id);
  for (const auto& item : b) {
    if (ids.contains(item.id)) {
      throw Error(std::string(what) + ": image '" + item.id + "' appears in both corpora");
    }
  }
}

ThresholdModel calibrate_records(const std::vector<ReconstructionRecord>& records, double alpha,
                                 SignalKind signal, std::optional<double> bandwidth) {
  if (records.size() < 2) throw Error("calibrate: need at least 2 belonging images");
  std::vector<double> samples, raw;
  std::vector<std::string> ids;
  for (const auto& r : records) {
    samples.push_back(signal_value(r, signal));
    raw.push_back(r.ratio);
    ids.push_back(r.image_id);
  }
  ThresholdModel model = fit_threshold(std::move(samples), alpha, bandwidth);
  model.signal = signal;
  model.metric = records.front().metric;
  model.raw_samples = std::move(raw);
  model.calibration_ids = std::move(ids);
  return model;
}

ThresholdModel calibrate(const Reconstructor& backend, const Corpus& corpus, double alpha,
                         const ScoringOptions& options, SignalKind signal,
                         std::optional<double> bandwidth) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0,1)");
  if (corpus.size() < 2) throw Error("calibrate: need at least 2 belonging images");
  ThresholdModel model =
      calibrate_records(score_corpus(backend, corpus, options), alpha, signal, bandwidth);
  model.backend_id = backend.id();
  model.glcm = options.glcm;
  return model;
}

double ConfusionReport::false_negative_rate() const {
  const std::size_t positives = tp + fn;
  return positives == 0 ? 0.0 : static_cast<double>(fn) / static_cast<double>(positives);
}

ConfusionReport tally(std::string signal, double tau, std::vector<ImageVerdict> verdicts) {
  ConfusionReport report;
  report.signal = std::move(signal);
  report.tau = tau;
  for (const auto& v : verdicts) {
    const bool predicted_belonging = v.decision == Decision::Belonging;
    if (v.truth == Decision::Belonging) {
      (predicted_belonging ? report.tp : report.fn)++;
    } else {
      (predicted_belonging ? report.fp : report.tn)++;
    }
  }
  const std::size_t total = verdicts.size();
  report.accuracy =
      total == 0 ? 0.0 : static_cast<double>(report.tp + report.tn) / static_cast<double>(total);
  report.per_image = std::move(verdicts);
  return report;
}

ConfusionReport evaluate_records(const ThresholdModel& model,
                                 const std::vector<ReconstructionRecord>& belonging,
                                 const std::vector<ReconstructionRecord>& non_belonging,
                                 bool use_calibration) {
  const ThresholdModel active =
      model.for_signal(use_calibration ? SignalKind::Calibrated : SignalKind::Raw);
  auto verdicts = verdicts_for(belonging, active.tau, active.signal, Decision::Belonging);
  auto rest = verdicts_for(non_belonging, active.tau, active.signal, Decision::NonBelonging);
  verdicts.insert(verdicts.end(), rest.begin(), rest.end());
  return tally(std::string(to_string(active.signal)), active.tau, std::move(verdicts));
}

ConfusionReport evaluate(const Reconstructor& backend, const ThresholdModel& model,
                         const Corpus& belonging, const Corpus& non_belonging,
                         const ScoringOptions& options, bool use_calibration) {
  require_nonempty(belonging, "belonging");
  require_nonempty(non_belonging, "non-belonging");
  const std::set<std::string> calibration(model.calibration_ids.begin(),
                                          model.calibration_ids.end());
  for (const Corpus* corpus : {&belonging, &non_belonging}) {
    for (const auto& item : *corpus) {
      if (calibration.contains(item.id)) {
        throw Error("evaluation image '" + item.id + "' was used for calibration");
      }
    }
  }
  ScoringOptions scoring = options;
  scoring.metric = metric_of(model);
  scoring.glcm = model.glcm;
  return evaluate_records(model, score_corpus(backend, belonging, scoring),
                          score_corpus(backend, non_belonging, scoring), use_calibration);
}

ConfusionReport evaluate_baseline(const Reconstructor& backend, const Corpus& calibration,
                                  const Corpus& belonging, const Corpus& non_belonging,
                                  double alpha, const ScoringOptions& options) {
  require_disjoint(calibration, belonging, "baseline");
  require_disjoint(calibration, non_belonging, "baseline");
  const ThresholdModel model = fit_threshold(score_baseline(backend, calibration, options), alpha);
  std::vector<ImageVerdict> verdicts;
  const auto add = [&](const Corpus& corpus, Decision truth) {
    const auto l1 = score_baseline(backend, corpus, options);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      verdicts.push_back({corpus[i].id, l1[i], decide(l1[i], model.tau), truth});
    }
  };
  add(belonging, Decision::Belonging);
  add(non_belonging, Decision::NonBelonging);
  return tally("baseline_l1", model.tau, std::move(verdicts));
}

AlphaSweepReport sweep_alpha(const Reconstructor& backend, const Corpus& estimation,
                             const Corpus& evaluation, const Corpus& non_belonging_estimation,
                             const Corpus& non_belonging_evaluation,
                             const std::vector<double>& grid, const ScoringOptions& options,
                             SignalKind signal) {
  if (grid.empty()) throw Error("sweep: alpha grid is empty");
  for (double a : grid) {
    if (!(a > 0.0 && a < 1.0)) throw Error("sweep: alpha must lie in (0,1)");
  }
  require_nonempty(estimation, "estimation");
  require_nonempty(evaluation, "evaluation");
  require_nonempty(non_belonging_estimation, "non-belonging estimation");
  require_nonempty(non_belonging_evaluation, "non-belonging evaluation");
  const Corpus est_all = concat(estimation, non_belonging_estimation);
  const Corpus eval_all = concat(evaluation, non_belonging_evaluation);
  require_disjoint(est_all, eval_all, "sweep");

  const auto est = score_corpus(backend, estimation, options);
  const auto eval = score_corpus(backend, evaluation, options);
  const auto non_est = score_corpus(backend, non_belonging_estimation, options);
  const auto non_eval = score_corpus(backend, non_belonging_evaluation, options);

  ThresholdModel model = calibrate_records(est, grid.front(), signal);
  AlphaSweepReport report;
  for (double alpha : grid) {
    model.alpha = alpha;
    model.tau = solve_threshold(model.kde, alpha);
    AlphaSweepRow row;
    row.alpha = alpha;
    row.tau = model.tau;
    row.estimation_accuracy = accuracy_of(model, est, non_est);
    row.evaluation_accuracy = accuracy_of(model, eval, non_eval);
    row.average_accuracy = 0.5 * (row.estimation_accuracy + row.evaluation_accuracy);
    report.rows.push_back(row);
  }
  const AlphaSweepRow* best = &report.rows.front();
  for (const auto& row : report.rows) {
    if (row.average_accuracy > best->average_accuracy ||
        (row.average_accuracy == best->average_accuracy && row.alpha < best->alpha)) {
      best = &row;
    }
  }
  report.best_alpha = best->alpha;
  return report;
}

BenchReport bench(const Reconstructor& backend, const Corpus& corpus,
                  const ScoringOptions& options) {
  require_nonempty(corpus, "bench");
  CountingReconstructor counter(backend);
  const auto start = std::chrono::steady_clock::now();
  const auto records = score_corpus(counter, corpus, options);
  const auto stop = std::chrono::steady_clock::now();
  BenchReport report;
  report.backend_id = backend.id();
  report.metric = std::string(to_string(options.metric));
  report.images = records.size();
  report.reconstruct_calls = counter.calls();
  report.total_seconds = std::chrono::duration<double>(stop - start).count();
  report.mean_seconds_per_image = report.total_seconds / static_cast<double>(records.size());
  if (report.reconstruct_calls != 2 * corpus.size()) {
    throw Error("bench: expected " + std::to_string(2 * corpus.size()) +
                " reconstruct calls, observed " + std::to_string(report.reconstruct_calls));
  }
  return report;
}

DeskExperimentReport run_desk_experiment(const DeskExperimentConfig& config) {
  const std::uint64_t s = config.seed;
  const auto sub = [s](std::uint64_t tag) { return splitmix64(s ^ splitmix64(tag)); };

  const auto train = [&](const TextureFamily& family, std::uint64_t tag) {
    const Corpus corpus = texture_corpus(family, config.train_count, config.size, config.size,
                                         sub(tag), family.name + "-train");
    LinearAEBackend b = train_linear_backend(images_of(corpus), config.latent_dim, 0.0, sub(tag + 1));
    b = b.with_noise(config.relative_noise * b.mean_latent_std());
    b.set_name("linear_ae:" + family.name);
    return b;
  };
  const LinearAEBackend target = train(config.target, 1);
  const LinearAEBackend other = train(config.other, 3);

  const auto synth = [&](const LinearAEBackend& b, int n, std::uint64_t tag,
                         const std::string& prefix) {
    if (!config.mixed_homogeneity) return synthesize_corpus(b, n, sub(tag), prefix);
    const int low = n / 2;
    Corpus a = synthesize_corpus(b, low, sub(tag), prefix + "-low", config.low_latent_scale);
    Corpus c = synthesize_corpus(b, n - low, sub(tag + 1), prefix + "-high",
                                 config.high_latent_scale);
    return concat(std::move(a), std::move(c));
  };
  const Corpus calibration = synth(target, config.calibration_count, 10, "calib");
  const Corpus belonging = synth(target, config.belonging_count, 20, "belonging");
  const Corpus non_belonging = synth(other, config.non_belonging_count, 30, "other");
  require_disjoint(calibration, belonging, "experiment");
  require_disjoint(calibration, non_belonging, "experiment");

  ScoringOptions options;
  options.metric = config.metric;
  options.glcm = config.glcm;
  options.seed = sub(40);
  options.workers = config.workers;

  auto calibration_records = score_corpus(target, calibration, options);
  auto belonging_records = score_corpus(target, belonging, options);
  auto non_belonging_records = score_corpus(target, non_belonging, options);

  ThresholdModel threshold = calibrate_records(calibration_records, config.alpha);
  threshold.backend_id = target.id();
  threshold.glcm = config.glcm;
  ConfusionReport calibrated =
      evaluate_records(threshold, belonging_records, non_belonging_records, true);
  ConfusionReport uncalibrated =
      evaluate_records(threshold, belonging_records, non_belonging_records, false);
  ConfusionReport baseline =
      evaluate_baseline(target, calibration, belonging, non_belonging, config.alpha, options);

  DeskExperimentReport report{
      .target_backend = target.id(),
      .other_backend = other.id(),
      .target_noise_sigma = target.noise_sigma(),
      .threshold = std::move(threshold),
      .calibrated = std::move(calibrated),
      .uncalibrated = std::move(uncalibrated),
      .baseline = std::move(baseline),
      .calibration_records = std::move(calibration_records),
      .belonging_records = std::move(belonging_records),
      .non_belonging_records = std::move(non_belonging_records),
  };
  return report;
}

json to_json(const ReconstructionRecord& r) {
  return {{"image_id", r.image_id}, {"metric", r.metric},           {"l1", r.l1},
          {"l2", r.l2},             {"ratio", r.ratio},             {"homogeneity", r.homogeneity},
          {"calibrated", r.calibrated}, {"degenerate", r.degenerate}};
}

json to_json(const ConfusionReport& report, bool include_per_image) {
  json out = {{"signal", report.signal},
              {"positive_class", "belonging"},
              {"tau", report.tau},
              {"tp", report.tp},
              {"fp", report.fp},
              {"tn", report.tn},
              {"fn", report.fn},
              {"accuracy", report.accuracy},
              {"false_negative_rate", report.false_negative_rate()}};
  if (include_per_image) {
    json rows = json::array();
    for (const auto& v : report.per_image) {
      rows.push_back({{"image_id", v.image_id},
                      {"signal", v.signal},
                      {"decision", to_string(v.decision)},
                      {"truth", to_string(v.truth)}});
    }
    out["per_image"] = std::move(rows);
  }
  return out;
}

json to_json(const AlphaSweepReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"alpha", r.alpha},
                    {"estimation_acc", r.estimation_accuracy},
                    {"evaluation_acc", r.evaluation_accuracy},
                    {"avg_acc", r.average_accuracy},
                    {"tau", r.tau}});
  }
  return {{"rows", std::move(rows)}, {"best_alpha", report.best_alpha}};
}

json to_json(const BenchReport& r) {
  return {{"backend_id", r.backend_id},
          {"metric", r.metric},
          {"images", r.images},
          {"reconstruct_calls", r.reconstruct_calls},
          {"total_seconds", r.total_seconds},
          {"mean_seconds_per_image", r.mean_seconds_per_image}};
}

json to_json(const ChainRecord& chain) {
  json rows = json::array();
  for (std::size_t k = 0; k < chain.steps(); ++k) {
    rows.push_back({{"step", k + 1},
                    {"single_loss", chain.single_losses[k]},
                    {"cumulative_loss", chain.cumulative_losses[k]}});
  }
  return {{"steps", chain.steps()}, {"rows", std::move(rows)}};
}

json to_json(const DeskExperimentReport& report, bool include_per_image) {
  const auto records = [](const std::vector<ReconstructionRecord>& rs) {
    json arr = json::array();
    for (const auto& r : rs) arr.push_back(to_json(r));
    return arr;
  };
  json out = {{"target_backend", report.target_backend},
              {"other_backend", report.other_backend},
              {"target_noise_sigma", report.target_noise_sigma},
              {"alpha", report.threshold.alpha},
              {"bandwidth", report.threshold.kde.bandwidth()},
              {"tau", report.threshold.tau},
              {"calibrated", to_json(report.calibrated, include_per_image)},
              {"uncalibrated", to_json(report.uncalibrated, include_per_image)},
              {"baseline", to_json(report.baseline, include_per_image)}};
  if (include_per_image) {
    out["records"] = {{"calibration", records(report.calibration_records)},
                      {"belonging", records(report.belonging_records)},
                      {"non_belonging", records(report.non_belonging_records)}};
  }
  return out;
}

std::string records_to_csv(const std::vector<ReconstructionRecord>& records) {
  std::string out = "image_id,l1,l2,ratio,homogeneity,calibrated,degenerate\n";
  for (const auto& r : records) {
    out += r.image_id + ',' + format_real(r.l1) + ',' + format_real(r.l2) + ',' +
           format_real(r.ratio) + ',' + format_real(r.homogeneity) + ',' +
           format_real(r.calibrated) + ',' + (r.degenerate ? "true" : "false") + '\n';
  }
  return out;
}

std::string verdicts_to_csv(const std::vector<ImageVerdict>& verdicts) {
  std::string out = "image_id,signal,decision,truth\n";
  for (const auto& v : verdicts) {
    out += v.image_id + ',' + format_real(v.signal) + ',' + std::string(to_string(v.decision)) +
           ',' + std::string(to_string(v.truth)) + '\n';
  }
  return out;
}

namespace {

void check_id(const std::string& id) {
  if (id.empty() || id.find_first_of(",\n\r/\\") != std::string::npos) {
    throw Error("image id '" + id + "' is not usable as a file name");
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void save_corpus_dir(const Corpus& corpus, const std::filesystem::path& dir,
                     std::string_view label) {
  std::filesystem::create_directories(dir);
  std::string manifest = "id,label,source,file\n";
  for (const auto& item : corpus) {
    check_id(item.id);
    const std::string file = item.id + ".png";
    save_png(item.image, dir / file);
    manifest += item.id + ',' + std::string(label) + ',' + item.source + ',' + file + '\n';
  }
  write_text_file(dir / "manifest.csv", manifest);
}

Corpus load_corpus_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error("'" + dir.string() + "' is not a directory");
  }
  Corpus corpus;
  const auto manifest = dir / "manifest.csv";
  if (std::filesystem::exists(manifest)) {
    std::istringstream in(read_text_file(manifest));
    std::string line;
    std::getline(in, line);
    if (line.rfind("id,label,source,file", 0) != 0) {
      throw Error("'" + manifest.string() + "' has an unexpected header");
    }
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto fields = split_csv_line(line);
      if (fields.size() != 4) throw Error("malformed manifest row: " + line);
      corpus.push_back({fields[0], load_png(dir / fields[3]), fields[2]});
    }
  } else {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".png") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) corpus.push_back({f.stem().string(), load_png(f), ""});
  }
  if (corpus.empty()) throw Error("no images found in '" + dir.string() + "'");
  return corpus;
}

}  // namespace aedr
