#include "aedr/signal.hpp"

#include "aedr/error.hpp"

namespace aedr {

namespace {

void require_accepts(const Reconstructor& backend, const Image& x) {
  if (!backend.accepts(x.dims())) {
    throw Error("image dimensions " + std::to_string(x.width()) + "x" +
                std::to_string(x.height()) + "x" + std::to_string(x.channels()) +
                " are not accepted by backend '" + backend.id() + "'");
  }
}

}  // namespace

ReconstructionRecord make_record(std::string image_id, std::string metric, double l1, double l2,
                                 double homogeneity) {
  if (!(l1 >= 0.0) || !(l2 >= 0.0)) throw Error("reconstruction losses must be >= 0");
  if (!(homogeneity > 0.0 && homogeneity <= 1.0)) throw Error("homogeneity outside (0,1]");
  ReconstructionRecord r;
  r.image_id = std::move(image_id);
  r.metric = std::move(metric);
  r.l1 = l1;
  r.l2 = l2;
  r.degenerate = l2 < kDivisionFloor;
  r.ratio = l1 / (r.degenerate ? kDivisionFloor : l2);
  r.homogeneity = homogeneity;
  r.calibrated = r.ratio * homogeneity;
  return r;
}

ReconstructionRecord double_reconstruct(const Reconstructor& backend, const Image& x,
                                        const LossFunction& loss_fn, std::string metric_label,
                                        const GlcmConfig& cfg, std::uint64_t call_seed,
                                        std::string image_id) {
  require_accepts(backend, x);
  const double h = image_homogeneity(x, cfg);
  const Image first = backend.reconstruct(x, call_seed);
  const Image second = backend.reconstruct(first, call_seed + 1);
  return make_record(std::move(image_id), std::move(metric_label), loss_fn(first, x),
                     loss_fn(second, first), h);
}

ReconstructionRecord double_reconstruct(const Reconstructor& backend, const Image& x,
                                        LossMetric metric, const GlcmConfig& cfg,
                                        std::uint64_t call_seed, std::string image_id) {
  return double_reconstruct(backend, x, loss_function(metric), std::string(to_string(metric)),
                            cfg, call_seed, std::move(image_id));
}

double baseline_signal(const Reconstructor& backend, const Image& x, LossMetric metric,
                       std::uint64_t call_seed) {
  require_accepts(backend, x);
  return loss(metric, backend.reconstruct(x, call_seed), x);
}

double signal_value(const ReconstructionRecord& record, SignalKind kind) {
  return kind == SignalKind::Calibrated ? record.calibrated : record.ratio;
}

Decision classify(const ReconstructionRecord& record, double tau, SignalKind kind) {
  if (record.degenerate) {
    return record.l1 < kDivisionFloor ? Decision::Belonging : Decision::NonBelonging;
  }
  return decide(signal_value(record, kind), tau);
}

ChainRecord chain_reconstruct(const Reconstructor& backend, const Image& x, int steps,
                              LossMetric metric, std::uint64_t call_seed) {
  if (steps < 1) throw Error("chain: steps must be >= 1");
  require_accepts(backend, x);
  ChainRecord chain;
  Image prev = x;
  double total = 0.0;
  for (int k = 0; k < steps; ++k) {
    Image next = backend.reconstruct(prev, call_seed + static_cast<std::uint64_t>(k));
    const double l = loss(metric, next, prev);
    total += l;
    chain.single_losses.push_back(l);
    chain.cumulative_losses.push_back(total);
    prev = std::move(next);
  }
  return chain;
}

}  // namespace aedr
