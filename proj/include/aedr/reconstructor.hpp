#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "aedr/image.hpp"

namespace aedr {

/// An autoencoder R = D(E(x)) behind a uniform interface.
///
/// Implementations are immutable once constructed and reconstruct() is safe to
/// call concurrently. Every call performs one encode and one decode.
class Reconstructor {
 public:
  virtual ~Reconstructor() = default;

  virtual std::string id() const = 0;
  virtual bool deterministic() const = 0;
  virtual bool accepts(const Dims& dims) const = 0;

  /// Output has the dimensions of `x` and samples in [0,1]. `call_seed`
  /// keys any sampling randomness; stochastic backends are reproducible per
  /// (backend, call_seed, x).
  virtual Image reconstruct(const Image& x, std::uint64_t call_seed) const = 0;
};

class IdentityBackend final : public Reconstructor {
 public:
  std::string id() const override { return "identity"; }
  bool deterministic() const override { return true; }
  bool accepts(const Dims&) const override { return true; }
  Image reconstruct(const Image& x, std::uint64_t) const override { return x; }
};

/// Decorator counting reconstruct() calls on a wrapped backend.
class CountingReconstructor final : public Reconstructor {
 public:
  explicit CountingReconstructor(const Reconstructor& inner) : inner_(inner) {}

  std::string id() const override { return inner_.id(); }
  bool deterministic() const override { return inner_.deterministic(); }
  bool accepts(const Dims& dims) const override { return inner_.accepts(dims); }
  Image reconstruct(const Image& x, std::uint64_t call_seed) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.reconstruct(x, call_seed);
  }

  std::uint64_t calls() const { return calls_.load(); }
  void reset() { calls_ = 0; }

 private:
  const Reconstructor& inner_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

}  // namespace aedr
