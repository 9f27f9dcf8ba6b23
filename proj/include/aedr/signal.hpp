#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aedr/glcm.hpp"
#include "aedr/losses.hpp"
#include "aedr/reconstructor.hpp"
#include "aedr/threshold.hpp"

namespace aedr {

/// Division floor for the second reconstruction loss.
inline constexpr double kDivisionFloor = 1e-12;

/// Losses and signals of one double reconstruction x -> x* -> x**.
struct ReconstructionRecord {
  std::string image_id;
  std::string metric = "mse";
  double l1 = 0.0;           // L(x*, x)
  double l2 = 0.0;           // L(x**, x*)
  double ratio = 0.0;        // t = l1 / max(l2, floor)
  double homogeneity = 1.0;  // H of the original x
  double calibrated = 0.0;   // t' = t * H
  bool degenerate = false;   // l2 < floor
};

/// Assembles a record from already-computed losses and homogeneity.
ReconstructionRecord make_record(std::string image_id, std::string metric, double l1, double l2,
                                 double homogeneity);

/// x* = R(x) with call_seed, x** = R(x*) with call_seed + 1. H comes from the
/// original x. Exactly two reconstruct() calls are made.
ReconstructionRecord double_reconstruct(const Reconstructor& backend, const Image& x,
                                        LossMetric metric, const GlcmConfig& cfg,
                                        std::uint64_t call_seed, std::string image_id = {});

/// Same, with an injected loss callable labelled `metric_label`.
ReconstructionRecord double_reconstruct(const Reconstructor& backend, const Image& x,
                                        const LossFunction& loss_fn, std::string metric_label,
                                        const GlcmConfig& cfg, std::uint64_t call_seed,
                                        std::string image_id = {});

/// Single-loss signal L(R(x), x): one reconstruct() call.
double baseline_signal(const Reconstructor& backend, const Image& x, LossMetric metric,
                       std::uint64_t call_seed);

/// The record's t' or t.
double signal_value(const ReconstructionRecord& record, SignalKind kind);

/// Applies decide() with the degenerate policy: a degenerate record is
/// belonging when l1 is also below the floor (perfect self-consistency) and
/// non-belonging otherwise.
Decision classify(const ReconstructionRecord& record, double tau, SignalKind kind);

struct ChainRecord {
  std::vector<double> single_losses;
  std::vector<double> cumulative_losses;

  std::size_t steps() const { return single_losses.size(); }
};

/// x_k = R(x_{k-1}) with call_seed + k - 1, L_k = L(x_k, x_{k-1}), k = 1..steps.
ChainRecord chain_reconstruct(const Reconstructor& backend, const Image& x, int steps,
                              LossMetric metric, std::uint64_t call_seed);

}  // namespace aedr
