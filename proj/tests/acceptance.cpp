// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and budgets are fixed here, not configurable.
//
//   acceptance [--only P4]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "aedr/glcm.hpp"
#include "aedr/harness.hpp"
#include "aedr/json_io.hpp"
#include "aedr/signal.hpp"
#include "aedr/threshold.hpp"
#include "oracles.hpp"

using namespace aedr;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [NO]");
    pass = pass && ok;
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// The P4 configuration: everything at its defaults, seed 0.
DeskExperimentConfig desk_config() { return DeskExperimentConfig{}; }

Outcome p1_glcm() {
  Outcome o;
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> code(0, 31);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint16_t> codes(32 * 32);
    for (auto& c : codes) c = static_cast<std::uint16_t>(code(rng));
    QuantizedImage q(32, 32, 32, codes);
    GlcmConfig cfg;
    GlcmMatrix m = compute_glcm(q, cfg);
    auto ref = oracle::brute_glcm(q, cfg);
    for (std::size_t k = 0; k < ref.size(); ++k) worst = std::max(worst, std::abs(m.probs()[k] - ref[k]));
    worst = std::max(worst, std::abs(homogeneity(m) - oracle::brute_homogeneity(ref, 32)));
  }
  o.require(worst <= 1e-12, fmt("max deviation from brute force %.3g <= 1e-12", worst));

  double flat = homogeneity(compute_glcm(QuantizedImage(32, 32, 32, std::vector<std::uint16_t>(1024, 9)), {}));
  o.require(flat == 1.0, fmt("constant H = %.17g", flat));

  std::vector<std::uint16_t> board(32 * 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) board[y * 32 + x] = (x + y) % 2 ? 31 : 0;
  double h = homogeneity(compute_glcm(QuantizedImage(32, 32, 32, board), {}));
  o.require(h == 0.03125, fmt("checkerboard H = %.17g", h));
  return o;
}

Outcome p2_kde() {
  Outcome o;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> count(2, 12);
  std::uniform_real_distribution<double> loc(0.0, 5.0), bw(0.05, 1.0), unit(0.0, 1.0);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(count(rng));
    for (auto& v : s) v = loc(rng);
    double h = bw(rng);
    double u = -1.0 + 7.0 * unit(rng);
    worst = std::max(worst, std::abs(kde_cdf(KdeModel(s, h), u) - oracle::trapezoid_cdf(s, h, u)));
  }
  o.require(worst <= 1e-6, fmt("100 cases, max |cdf - trapezoid| %.3g <= 1e-6", worst));

  std::gamma_distribution<double> g(2.0, 0.7);
  std::vector<double> s(500);
  for (auto& v : s) v = g(rng);
  KdeModel m = fit_kde(s);
  const double scale = m.max() - m.min();
  bool infimum = true, monotone = true;
  double prev = INFINITY;
  for (int i = 1; i <= 20; ++i) {
    const double alpha = i / 21.0;
    const double tau = solve_threshold(m, alpha);
    infimum = infimum && kde_cdf(m, tau) >= 1.0 - alpha &&
              kde_cdf(m, tau - 1e-9 * scale) < 1.0 - alpha;
    monotone = monotone && tau <= prev;
    prev = tau;
  }
  o.require(infimum, "infimum property on 20 alphas");
  o.require(monotone, "tau nonincreasing in alpha");
  return o;
}

Outcome p3_ratio_and_chain() {
  Outcome o;
  auto b = make_record("b", "mse", 0.00030581, 0.00021323, 1.0);
  auto n = make_record("n", "mse", 0.00164355, 0.00046879, 1.0);
  o.require(std::abs(b.ratio - 1.4342) <= 1e-3, fmt("belonging t = %.6f", b.ratio));
  o.require(std::abs(n.ratio - 3.5060) <= 1e-3, fmt("non-belonging t = %.6f", n.ratio));

  // Target backend of the desk experiment; non-belonging images from the other backend.
  const DeskExperimentConfig cfg = desk_config();
  Corpus ta = texture_corpus(cfg.target, cfg.train_count, cfg.size, cfg.size, 31, "ta");
  Corpus ob = texture_corpus(cfg.other, cfg.train_count, cfg.size, cfg.size, 32, "ob");
  LinearAEBackend target = train_linear_backend(images_of(ta), cfg.latent_dim, std::nullopt, 33);
  LinearAEBackend other = train_linear_backend(images_of(ob), cfg.latent_dim, std::nullopt, 34);
  Corpus foreign = synthesize_corpus(other, 200, 35, "nb");
  std::vector<double> mean(5, 0.0);
  for (const auto& item : foreign) {
    auto chain = chain_reconstruct(target, item.image, 5, LossMetric::Mse, image_call_seed(36, item.id));
    for (int k = 0; k < 5; ++k) mean[k] += chain.single_losses[k] / foreign.size();
  }
  const double tail = (mean[1] + mean[2] + mean[3] + mean[4]) / 4;
  double spread = 0;
  for (int k = 1; k < 5; ++k) spread = std::max(spread, std::abs(mean[k] - tail) / tail);
  o.require(mean[0] > mean[1], fmt("mean L1 %.3g > L2 %.3g", mean[0], mean[1]));
  o.require(spread <= 0.2, fmt("L2..L5 within %.1f%% of their mean", 100 * spread));
  return o;
}

Outcome p4_desk(std::string* report_json = nullptr, int workers = 0) {
  Outcome o;
  DeskExperimentConfig cfg = desk_config();
  cfg.workers = workers;
  const DeskExperimentReport r = run_desk_experiment(cfg);
  if (report_json) *report_json = dump_json(to_json(r, true));
  const double fnr = r.calibrated.false_negative_rate();
  o.require(r.calibrated.accuracy >= 0.90, fmt("accuracy %.3f >= 0.90", r.calibrated.accuracy));
  o.require(std::abs(fnr - cfg.alpha) <= 0.02,
            fmt("belonging FNR %.3f within %.2f +/- 0.02", fnr, cfg.alpha));
  o.require(r.calibrated.accuracy >= r.baseline.accuracy,
            fmt("ratio accuracy %.3f >= single-loss baseline %.3f", r.calibrated.accuracy,
                r.baseline.accuracy));
  return o;
}

Outcome p5_efficiency() {
  Outcome o;
  const DeskExperimentConfig cfg = desk_config();
  Corpus ta = texture_corpus(cfg.target, cfg.train_count, cfg.size, cfg.size, 51, "ta");
  Corpus ob = texture_corpus(cfg.other, cfg.train_count, cfg.size, cfg.size, 52, "ob");
  LinearAEBackend target = train_linear_backend(images_of(ta), cfg.latent_dim, std::nullopt, 53);
  LinearAEBackend other = train_linear_backend(images_of(ob), cfg.latent_dim, std::nullopt, 54);
  ThresholdModel model = calibrate(target, synthesize_corpus(target, 500, 55, "cal"), cfg.alpha, {});
  Corpus bel = synthesize_corpus(target, 500, 56, "bel");
  Corpus non = synthesize_corpus(other, 500, 57, "non");

  CountingReconstructor counter(target);
  double_reconstruct(counter, bel[0].image, LossMetric::Mse, GlcmConfig{}, 0);
  o.require(counter.calls() == 2, fmt("single attribution: %.0f reconstruct calls", counter.calls()));

  counter.reset();
  const auto t0 = Clock::now();
  evaluate(counter, model, bel, non, {});
  const double secs = seconds_since(t0);
  o.require(counter.calls() == 2000,
            fmt("1000-image evaluation: %.0f calls (2 per image)", counter.calls()));
  o.require(secs < 60.0, fmt("evaluation took %.2f s < 60 s", secs));
  return o;
}

Outcome p6_degenerate() {
  Outcome o;
  const DeskExperimentConfig cfg = desk_config();
  Corpus ta = texture_corpus(cfg.target, cfg.train_count, cfg.size, cfg.size, 61, "ta");
  Corpus ob = texture_corpus(cfg.other, cfg.train_count, cfg.size, cfg.size, 62, "ob");
  LinearAEBackend target = train_linear_backend(images_of(ta), cfg.latent_dim, 0.0, 63);
  LinearAEBackend other = train_linear_backend(images_of(ob), cfg.latent_dim, std::nullopt, 64);
  Corpus bel = synthesize_corpus(target, 200, 65, "bel");
  Corpus non = synthesize_corpus(other, 200, 66, "non");

  std::size_t records = 0, degenerate = 0, max_l2_ok = 0, policy_ok = 0;
  double max_l2 = 0;
  for (const Corpus* corpus : {&bel, &non}) {
    for (const auto& rec : score_corpus(target, *corpus, {})) {
      ++records;
      degenerate += rec.degenerate;
      max_l2 = std::max(max_l2, rec.l2);
      max_l2_ok += rec.l2 < kDivisionFloor;
      const Decision expected = rec.l1 < kDivisionFloor ? Decision::Belonging : Decision::NonBelonging;
      // Policy must hold whatever the threshold is.
      policy_ok += classify(rec, 0.0, SignalKind::Calibrated) == expected &&
                   classify(rec, 1e300, SignalKind::Raw) == expected;
    }
  }
  o.require(max_l2_ok == records, fmt("L2 < 1e-12 on %.0f/%.0f images (max %.3g)", max_l2_ok, records, max_l2));
  o.require(degenerate == records, fmt("%.0f/%.0f records flagged degenerate", degenerate, records));
  o.require(policy_ok == records, fmt("degenerate policy applied to %.0f/%.0f", policy_ok, records));
  return o;
}

Outcome p7_calibration_ablation() {
  Outcome o;
  DeskExperimentConfig cfg = desk_config();
  cfg.mixed_homogeneity = true;
  const DeskExperimentReport r = run_desk_experiment(cfg);
  const auto correct = [](const ConfusionReport& c) { return static_cast<long>(c.tp + c.tn); };
  const long n = static_cast<long>(r.calibrated.per_image.size());
  // calibrated >= uncalibrated - 0.005, compared on integer counts.
  const bool ok = 1000 * correct(r.calibrated) >= 1000 * correct(r.uncalibrated) - 5 * n;
  o.require(ok, fmt("calibrated %.3f >= uncalibrated %.3f - 0.005", r.calibrated.accuracy,
                    r.uncalibrated.accuracy));
  return o;
}

Outcome p8_determinism() {
  Outcome o;
  std::string first, second;
  p4_desk(&first, 0);
  p4_desk(&second, 1);
  o.require(!first.empty() && first == second,
            fmt("two P4 runs (parallel and single worker): %.0f-byte reports", first.size()) +
                (first == second ? " identical" : " differ"));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::string only = argc >= 3 && std::string(argv[1]) == "--only" ? argv[2] : "";
  struct Criterion {
    const char* id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"P1", "GLCM oracle equivalence", 5.0, p1_glcm},
      {"P2", "KDE correctness", 30.0, p2_kde},
      {"P3", "published ratios and chain trend", 0.0, p3_ratio_and_chain},
      {"P4", "desk-scale attribution", 120.0, [] { return p4_desk(); }},
      {"P5", "two reconstructions per attribution", 0.0, p5_efficiency},
      {"P6", "degenerate handling", 0.0, p6_degenerate},
      {"P7", "calibration ablation", 0.0, p7_calibration_ablation},
      {"P8", "determinism", 0.0, p8_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && only != c.id) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = seconds_since(t0);
    if (c.budget_seconds > 0) o.require(secs < c.budget_seconds, fmt("runtime budget %.0f s", c.budget_seconds));
    std::printf("%s %s  %s: %s (%.2f s)\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
