#include "aedr/cli.hpp"

#include <cstdio>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "aedr/backend_io.hpp"
#include "aedr/error.hpp"
#include "aedr/harness.hpp"
#include "aedr/json_io.hpp"
#include "aedr/signal.hpp"

namespace aedr::cli {

using json = nlohmann::json;

namespace {

struct Options {
  CliConfig cfg;
  std::string loss_name = "mse";
  std::string glcm_offset = "1,0";
  bool glcm_asymmetric = false;
  bool no_calibration = false;

  // Command-specific inputs.
  std::string corpus_dir;
  std::string images_dir;
  std::string image_path;
  std::string belonging_dir;
  std::string non_belonging_dir;
  std::string estimation_dir;
  std::string evaluation_dir;
  std::string non_estimation_dir;
  std::string non_evaluation_dir;
  std::string csv_path;
  std::string name;
  std::string prefix = "synth";
  std::vector<double> grid;
  std::optional<double> bandwidth;
  std::optional<double> sigma;
  double latent_scale = 1.0;
  int components = 0;
  int steps = 5;
  int count = 0;
  int size = 64;
  bool mixed = false;
  TextureFamily family;
};

std::string fmt(double v, int prec = 8) {
  std::ostringstream ss;
  ss << std::setprecision(prec) << v;
  return ss.str();
}

void emit(std::ostream& out, const json& doc) { out << dump_json(doc) << '\n'; }

void write_output(const std::string& path, const json& doc) {
  if (!path.empty()) write_text_file(path, dump_json(doc, 2) + "\n");
}

SignalKind signal_kind(const Options& o) {
  return o.cfg.calibration_enabled ? SignalKind::Calibrated : SignalKind::Raw;
}

ScoringOptions scoring(const Options& o) {
  ScoringOptions s;
  s.metric = o.cfg.loss;
  s.glcm = o.cfg.glcm;
  s.seed = o.cfg.seed;
  return s;
}

ScoringOptions scoring_for(const Options& o, const ThresholdModel& model) {
  ScoringOptions s = scoring(o);
  const auto metric = parse_loss_metric(model.metric);
  if (!metric) throw Error("threshold uses unknown loss metric '" + model.metric + "'");
  s.metric = *metric;
  s.glcm = model.glcm;
  return s;
}

void require_matching_backend(const Reconstructor& backend, const ThresholdModel& model) {
  if (!model.backend_id.empty() && model.backend_id != backend.id()) {
    throw Error("threshold was calibrated for backend '" + model.backend_id +
                "', not '" + backend.id() + "'");
  }
}

ThresholdModel load_threshold(const std::string& path) {
  return threshold_from_json(read_json_file(path));
}

// ---- commands -------------------------------------------------------------

int cmd_train(const Options& o, std::ostream& out) {
  const Corpus corpus = load_corpus_dir(o.corpus_dir);
  LinearAEBackend backend =
      train_linear_backend(images_of(corpus), o.components, o.sigma, o.cfg.seed);
  backend.set_name(o.name.empty() ? std::filesystem::path(o.cfg.output_path).stem().string()
                                  : o.name);
  save_backend(backend, o.cfg.output_path);
  const json summary = {{"backend", backend.id()},
                        {"images", corpus.size()},
                        {"latent_dim", backend.latent_dim()},
                        {"noise_sigma", backend.noise_sigma()},
                        {"mean_latent_std", backend.mean_latent_std()},
                        {"out", o.cfg.output_path}};
  if (o.cfg.pretty) {
    out << "backend        " << backend.id() << "\n"
        << "images         " << corpus.size() << "\n"
        << "latent_dim     " << backend.latent_dim() << "\n"
        << "noise_sigma    " << fmt(backend.noise_sigma()) << "\n";
  } else {
    emit(out, summary);
  }
  return kExitOk;
}

int cmd_calibrate(const Options& o, std::ostream& out) {
  const auto backend = load_backend(o.cfg.backend_path);
  const Corpus corpus = load_corpus_dir(o.images_dir);
  const ScoringOptions s = scoring(o);
  const auto records = score_corpus(*backend, corpus, s);
  ThresholdModel model = calibrate_records(records, o.cfg.alpha, signal_kind(o), o.bandwidth);
  model.backend_id = backend->id();
  model.glcm = o.cfg.glcm;
  write_text_file(o.cfg.output_path, dump_json(threshold_to_json(model)) + "\n");
  if (!o.csv_path.empty()) write_text_file(o.csv_path, records_to_csv(records));
  if (o.cfg.pretty) {
    out << "samples    " << model.kde.samples().size() << "\n"
        << "signal     " << to_string(model.signal) << "\n"
        << "alpha      " << fmt(model.alpha) << "\n"
        << "bandwidth  " << fmt(model.kde.bandwidth()) << "\n"
        << "tau        " << fmt(model.tau) << "\n";
  } else {
    emit(out, {{"backend_id", model.backend_id},
               {"samples", model.kde.samples().size()},
               {"signal", to_string(model.signal)},
               {"alpha", model.alpha},
               {"bandwidth", model.kde.bandwidth()},
               {"tau", model.tau},
               {"out", o.cfg.output_path}});
  }
  return kExitOk;
}

int cmd_attribute(const Options& o, std::ostream& out) {
  const auto backend = load_backend(o.cfg.backend_path);
  const ThresholdModel stored = load_threshold(o.cfg.threshold_path);
  require_matching_backend(*backend, stored);
  const ThresholdModel model = stored.for_signal(signal_kind(o));
  const ScoringOptions s = scoring_for(o, model);
  const Image x = load_png(o.image_path);
  const std::string id = std::filesystem::path(o.image_path).stem().string();
  const auto r = double_reconstruct(*backend, x, s.metric, s.glcm, image_call_seed(s.seed, id), id);
  const Decision verdict = classify(r, model.tau, model.signal);
  if (o.cfg.pretty) {
    out << "image        " << o.image_path << "\n"
        << "l1           " << fmt(r.l1) << "\n"
        << "l2           " << fmt(r.l2) << "\n"
        << "ratio        " << fmt(r.ratio) << "\n"
        << "homogeneity  " << fmt(r.homogeneity) << "\n"
        << "calibrated   " << fmt(r.calibrated) << "\n"
        << "tau          " << fmt(model.tau) << "\n"
        << "verdict      " << to_string(verdict) << "\n";
  } else {
    emit(out, {{"image", o.image_path},
               {"l1", r.l1},
               {"l2", r.l2},
               {"ratio", r.ratio},
               {"homogeneity", r.homogeneity},
               {"calibrated", r.calibrated},
               {"tau", model.tau},
               {"verdict", to_string(verdict)}});
  }
  return kExitOk;
}

void print_confusion(std::ostream& out, const ConfusionReport& r) {
  out << "signal " << r.signal << "  tau " << fmt(r.tau) << "\n"
      << "  TP " << r.tp << "  FP " << r.fp << "  TN " << r.tn << "  FN " << r.fn
      << "  Acc " << std::fixed << std::setprecision(2) << 100.0 * r.accuracy << "%\n"
      << std::defaultfloat;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const auto backend = load_backend(o.cfg.backend_path);
  const ThresholdModel model = load_threshold(o.cfg.threshold_path);
  require_matching_backend(*backend, model);
  const Corpus belonging = load_corpus_dir(o.belonging_dir);
  const Corpus non_belonging = load_corpus_dir(o.non_belonging_dir);
  const ConfusionReport report = evaluate(*backend, model, belonging, non_belonging,
                                          scoring_for(o, model), o.cfg.calibration_enabled);
  write_output(o.cfg.output_path, to_json(report, true));
  if (!o.csv_path.empty()) write_text_file(o.csv_path, verdicts_to_csv(report.per_image));
  if (o.cfg.pretty) {
    print_confusion(out, report);
  } else {
    emit(out, to_json(report, false));
  }
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const auto backend = load_backend(o.cfg.backend_path);
  const AlphaSweepReport report = sweep_alpha(
      *backend, load_corpus_dir(o.estimation_dir), load_corpus_dir(o.evaluation_dir),
      load_corpus_dir(o.non_estimation_dir), load_corpus_dir(o.non_evaluation_dir), o.grid,
      scoring(o), signal_kind(o));
  write_output(o.cfg.output_path, to_json(report));
  if (o.cfg.pretty) {
    out << "alpha        estimation  evaluation  avg_acc\n";
    for (const auto& r : report.rows) {
      char line[96];
      std::snprintf(line, sizeof line, "%-12.6g %9.2f%% %10.2f%% %7.2f%%%s\n", r.alpha,
                    100 * r.estimation_accuracy, 100 * r.evaluation_accuracy,
                    100 * r.average_accuracy, r.alpha == report.best_alpha ? "  *" : "");
      out << line;
    }
  } else {
    emit(out, to_json(report));
  }
  return kExitOk;
}

int cmd_chain(const Options& o, std::ostream& out) {
  const auto backend = load_backend(o.cfg.backend_path);
  const Image x = load_png(o.image_path);
  const std::string id = std::filesystem::path(o.image_path).stem().string();
  const ChainRecord chain =
      chain_reconstruct(*backend, x, o.steps, o.cfg.loss, image_call_seed(o.cfg.seed, id));
  write_output(o.cfg.output_path, to_json(chain));
  if (o.cfg.pretty) {
    out << "step  single_loss     cumulative_loss\n";
    for (std::size_t k = 0; k < chain.steps(); ++k) {
      char line[80];
      std::snprintf(line, sizeof line, "%-5zu %-15.8f %-15.8f\n", k + 1, chain.single_losses[k],
                    chain.cumulative_losses[k]);
      out << line;
    }
  } else {
    emit(out, to_json(chain));
  }
  return kExitOk;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const auto backend = load_backend(o.cfg.backend_path);
  const BenchReport report = bench(*backend, load_corpus_dir(o.images_dir), scoring(o));
  if (o.cfg.pretty) {
    out << "backend            " << report.backend_id << "\n"
        << "metric             " << report.metric << "\n"
        << "images             " << report.images << "\n"
        << "reconstruct calls  " << report.reconstruct_calls << "\n"
        << "seconds / image    " << fmt(report.mean_seconds_per_image, 6) << "\n";
  } else {
    emit(out, to_json(report));
  }
  return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
  const LinearAEBackend backend = load_linear_backend(o.cfg.backend_path);
  const Corpus corpus = synthesize_corpus(backend, o.count, o.cfg.seed, o.prefix, o.latent_scale);
  save_corpus_dir(corpus, o.cfg.output_path, "belonging");
  emit(out, {{"backend", backend.id()}, {"images", corpus.size()}, {"out", o.cfg.output_path}});
  return kExitOk;
}

int cmd_textures(const Options& o, std::ostream& out) {
  TextureFamily family = o.family;
  if (!o.name.empty()) family.name = o.name;
  const Corpus corpus =
      texture_corpus(family, o.count, o.size, o.size, o.cfg.seed, o.prefix);
  save_corpus_dir(corpus, o.cfg.output_path, "unknown");
  emit(out, {{"family", family.name}, {"images", corpus.size()}, {"out", o.cfg.output_path}});
  return kExitOk;
}

int cmd_experiment(const Options& o, std::ostream& out) {
  DeskExperimentConfig config;
  config.seed = o.cfg.seed;
  config.alpha = o.cfg.alpha;
  config.metric = o.cfg.loss;
  config.glcm = o.cfg.glcm;
  config.mixed_homogeneity = o.mixed;
  const DeskExperimentReport report = run_desk_experiment(config);
  write_output(o.cfg.output_path, to_json(report, true));
  if (!o.csv_path.empty()) {
    auto all = report.calibration_records;
    all.insert(all.end(), report.belonging_records.begin(), report.belonging_records.end());
    all.insert(all.end(), report.non_belonging_records.begin(),
               report.non_belonging_records.end());
    write_text_file(o.csv_path, records_to_csv(all));
  }
  if (o.cfg.pretty) {
    out << "target " << report.target_backend << " vs " << report.other_backend << "\n";
    print_confusion(out, report.calibrated);
    print_confusion(out, report.uncalibrated);
    print_confusion(out, report.baseline);
  } else {
    emit(out, to_json(report, false));
  }
  return kExitOk;
}

std::pair<int, int> parse_offset(const std::string& text) {
  int dx = 0, dy = 0;
  char comma = 0;
  std::istringstream ss(text);
  if (!(ss >> dx >> comma >> dy) || comma != ',' || !ss.eof()) {
    throw CLI::ValidationError("--glcm-offset", "expected dx,dy");
  }
  return {dx, dy};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Autoencoder double-reconstruction attribution toolkit", "aedr"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.cfg.seed, "Top-level random seed");
    sub->add_flag("--pretty", o.cfg.pretty, "Human-readable tables instead of JSON");
  };
  const auto add_scoring = [&](CLI::App* sub) {
    sub->add_option("--loss", o.loss_name, "Reconstruction loss")
        ->check(CLI::IsMember({"mse", "mae", "ssim"}));
    sub->add_option("--glcm-levels", o.cfg.glcm.levels, "GLCM gray levels")
        ->check(CLI::Range(2, 65536));
    sub->add_option("--glcm-offset", o.glcm_offset, "GLCM pixel offset dx,dy");
    sub->add_flag("--glcm-asymmetric", o.glcm_asymmetric, "Do not symmetrize the GLCM");
  };
  const auto add_no_calibration = [&](CLI::App* sub) {
    sub->add_flag("--no-calibration", o.no_calibration,
                  "Use the raw ratio t instead of t' = t * H");
  };
  const CLI::Validator alpha_check(
      [](std::string& s) -> std::string {
        try {
          const double a = std::stod(s);
          if (a > 0.0 && a < 1.0) return {};
        } catch (const std::exception&) {
        }
        return "alpha must be a number in (0,1), got '" + s + "'";
      },
      "(0,1)");

  auto* train = app.add_subcommand("train-backend", "Fit a stochastic linear autoencoder");
  train->add_option("--corpus", o.corpus_dir, "Training image directory")->required();
  train->add_option("--components", o.components, "Latent dimension k")->required()
      ->check(CLI::PositiveNumber);
  train->add_option("--sigma", o.sigma, "Latent noise sigma (default 0.05 x mean latent std)")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--name", o.name, "Backend id (default: output file stem)");
  train->add_option("--out", o.cfg.output_path, "Backend JSON file")->required();
  add_common(train);

  auto* calib = app.add_subcommand("calibrate", "Fit the KDE threshold on belonging images");
  calib->add_option("--backend", o.cfg.backend_path, "Backend file")->required();
  calib->add_option("--images", o.images_dir, "Belonging image directory")->required();
  calib->add_option("--alpha", o.cfg.alpha, "Quantile parameter")->required()->check(alpha_check);
  calib->add_option("--bandwidth", o.bandwidth, "Explicit KDE bandwidth")
      ->check(CLI::PositiveNumber);
  calib->add_option("--out", o.cfg.output_path, "Threshold JSON file")->required();
  calib->add_option("--records-csv", o.csv_path, "Per-image record CSV");
  add_scoring(calib);
  add_no_calibration(calib);
  add_common(calib);

  auto* attribute = app.add_subcommand("attribute", "Attribute one image");
  attribute->add_option("--backend", o.cfg.backend_path, "Backend file")->required();
  attribute->add_option("--threshold", o.cfg.threshold_path, "Threshold file")->required();
  attribute->add_option("--image", o.image_path, "PNG image")->required();
  add_no_calibration(attribute);
  add_common(attribute);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Confusion report over two corpora");
  evaluate_cmd->add_option("--backend", o.cfg.backend_path, "Backend file")->required();
  evaluate_cmd->add_option("--threshold", o.cfg.threshold_path, "Threshold file")->required();
  evaluate_cmd->add_option("--belonging", o.belonging_dir, "Belonging images")->required();
  evaluate_cmd->add_option("--non-belonging", o.non_belonging_dir, "Non-belonging images")
      ->required();
  evaluate_cmd->add_option("--out", o.cfg.output_path, "Full JSON report with per-image rows");
  evaluate_cmd->add_option("--csv", o.csv_path, "Per-image verdict CSV");
  add_no_calibration(evaluate_cmd);
  add_common(evaluate_cmd);

  auto* sweep = app.add_subcommand("sweep-alpha", "Accuracy over a grid of alpha values");
  sweep->add_option("--backend", o.cfg.backend_path, "Backend file")->required();
  sweep->add_option("--estimation", o.estimation_dir, "Belonging estimation split")->required();
  sweep->add_option("--evaluation", o.evaluation_dir, "Belonging evaluation split")->required();
  sweep->add_option("--non-belonging-estimation", o.non_estimation_dir,
                    "Non-belonging estimation split")->required();
  sweep->add_option("--non-belonging-evaluation", o.non_evaluation_dir,
                    "Non-belonging evaluation split")->required();
  sweep->add_option("--grid", o.grid, "Alpha values")->required()->delimiter(',')
      ->check(alpha_check);
  sweep->add_option("--out", o.cfg.output_path, "JSON report file");
  add_scoring(sweep);
  add_no_calibration(sweep);
  add_common(sweep);

  auto* chain = app.add_subcommand("chain", "Consecutive reconstruction losses");
  chain->add_option("--backend", o.cfg.backend_path, "Backend file")->required();
  chain->add_option("--image", o.image_path, "PNG image")->required();
  chain->add_option("--steps", o.steps, "Number of reconstructions")->required()
      ->check(CLI::PositiveNumber);
  chain->add_option("--out", o.cfg.output_path, "JSON report file");
  add_scoring(chain);
  add_common(chain);

  auto* bench_cmd = app.add_subcommand("bench", "Time double reconstruction");
  bench_cmd->add_option("--backend", o.cfg.backend_path, "Backend file")->required();
  bench_cmd->add_option("--images", o.images_dir, "Image directory")->required();
  add_scoring(bench_cmd);
  add_common(bench_cmd);

  auto* synth = app.add_subcommand("synth", "Decode random latents of a linear backend");
  synth->add_option("--backend", o.cfg.backend_path, "Linear backend file")->required();
  synth->add_option("--count", o.count, "Number of images")->required()
      ->check(CLI::PositiveNumber);
  synth->add_option("--out", o.cfg.output_path, "Output directory")->required();
  synth->add_option("--prefix", o.prefix, "Image id prefix");
  synth->add_option("--latent-scale", o.latent_scale, "Scale on latent standard deviations")
      ->check(CLI::NonNegativeNumber);
  add_common(synth);

  auto* textures = app.add_subcommand("textures", "Generate a Gaussian random field corpus");
  textures->add_option("--count", o.count, "Number of images")->required()
      ->check(CLI::PositiveNumber);
  textures->add_option("--size", o.size, "Square image size")->check(CLI::PositiveNumber);
  textures->add_option("--correlation-length", o.family.correlation_length, "Pixels")
      ->check(CLI::PositiveNumber);
  textures->add_option("--wavelength", o.family.wavelength, "Dominant wavelength (0 = low-pass)")
      ->check(CLI::NonNegativeNumber);
  textures->add_option("--mean", o.family.mean, "Mean gray value")->check(CLI::Range(0.0, 1.0));
  textures->add_option("--amplitude", o.family.amplitude, "Standard deviation")
      ->check(CLI::NonNegativeNumber);
  textures->add_option("--name", o.name, "Family name");
  textures->add_option("--prefix", o.prefix, "Image id prefix");
  textures->add_option("--out", o.cfg.output_path, "Output directory")->required();
  add_common(textures);

  auto* experiment = app.add_subcommand("experiment", "Desk-scale two-backend experiment");
  experiment->add_option("--alpha", o.cfg.alpha, "Quantile parameter")->check(alpha_check);
  experiment->add_flag("--mixed-homogeneity", o.mixed,
                       "Half near-constant, half high-texture corpora");
  experiment->add_option("--out", o.cfg.output_path, "Full JSON report file");
  experiment->add_option("--records-csv", o.csv_path, "Per-image record CSV");
  add_scoring(experiment);
  add_common(experiment);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
    o.cfg.loss = *parse_loss_metric(o.loss_name);
    const auto [dx, dy] = parse_offset(o.glcm_offset);
    o.cfg.glcm.dx = dx;
    o.cfg.glcm.dy = dy;
    o.cfg.glcm.symmetric = !o.glcm_asymmetric;
    if (dx == 0 && dy == 0) throw CLI::ValidationError("--glcm-offset", "offset must be nonzero");
    o.cfg.calibration_enabled = !o.no_calibration;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  const std::map<std::string, int (*)(const Options&, std::ostream&)> commands = {
      {"train-backend", cmd_train}, {"calibrate", cmd_calibrate}, {"attribute", cmd_attribute},
      {"evaluate", cmd_evaluate},   {"sweep-alpha", cmd_sweep},   {"chain", cmd_chain},
      {"bench", cmd_bench},         {"synth", cmd_synth},         {"textures", cmd_textures},
      {"experiment", cmd_experiment}};
  const std::string name = app.get_subcommands().front()->get_name();
  o.cfg.command = name;
  try {
    return commands.at(name)(o, out);
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << "\n";
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::filesystem::filesystem_error& e) {
    err << "file error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
  }
  return kExitData;
}

}  // namespace aedr::cli
