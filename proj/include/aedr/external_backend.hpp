#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "aedr/reconstructor.hpp"

namespace aedr {

struct ExternalBackendOptions {
  /// argv of the adapter process; argv[0] is resolved through PATH.
  std::vector<std::string> command;
  int pool_size = 1;
  std::chrono::milliseconds timeout{60000};
};

/// What an adapter reports in reply to "hello".
struct AdapterInfo {
  std::string name;
  std::string version;
  bool deterministic = false;
  int native_width = 0;
  int native_height = 0;
};

/// Encodes samples as row-major little-endian float32, base64.
std::string encode_wire_pixels(const Image& img);
/// Inverse of encode_wire_pixels; values are clamped to [0,1].
Image decode_wire_pixels(const std::string& b64, int width, int height, int channels);

/// Client for an out-of-process autoencoder speaking newline-delimited JSON on
/// its standard streams.
///
/// Each child process serves one request at a time; concurrency comes from a
/// pool of `pool_size` children. A child that times out, crashes or violates
/// the protocol is killed and respawned on next use. The call seed is not sent:
/// external models sample with their own randomness.
class ExternalBackend final : public Reconstructor {
 public:
  explicit ExternalBackend(ExternalBackendOptions options);
  ~ExternalBackend() override;

  ExternalBackend(const ExternalBackend&) = delete;
  ExternalBackend& operator=(const ExternalBackend&) = delete;

  std::string id() const override;
  bool deterministic() const override { return info_.deterministic; }
  bool accepts(const Dims& dims) const override;
  Image reconstruct(const Image& x, std::uint64_t call_seed) const override;

  const AdapterInfo& info() const { return info_; }

  /// Sends "shutdown" to every live child and reaps it.
  void shutdown();

  struct Worker;

 private:
  Worker& acquire() const;
  void release(Worker& w) const;

  ExternalBackendOptions options_;
  AdapterInfo info_;
  std::vector<std::unique_ptr<Worker>> workers_;
  mutable std::mutex mutex_;
  mutable std::condition_variable available_;
};

}  // namespace aedr
