#include "aedr/external_backend.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstring>

#include <json.hpp>

#include "aedr/base64.hpp"
#include "aedr/error.hpp"

namespace aedr {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

// {"ok": false} replies: the child is still in a consistent state.
class AdapterReportedError : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace

std::string encode_wire_pixels(const Image& img) {
  const auto px = img.pixels();
  std::vector<std::uint8_t> bytes(px.size() * 4);
  for (std::size_t i = 0; i < px.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(px[i]));
    bytes[4 * i] = static_cast<std::uint8_t>(bits);
    bytes[4 * i + 1] = static_cast<std::uint8_t>(bits >> 8);
    bytes[4 * i + 2] = static_cast<std::uint8_t>(bits >> 16);
    bytes[4 * i + 3] = static_cast<std::uint8_t>(bits >> 24);
  }
  return base64_encode(bytes);
}

Image decode_wire_pixels(const std::string& b64, int width, int height, int channels) {
  const auto bytes = base64_decode(b64);
  const Dims dims{width, height, channels};
  if (width <= 0 || height <= 0 || bytes.size() != dims.samples() * 4) {
    throw BackendError("wire payload length does not match dimensions");
  }
  std::vector<double> px(dims.samples());
  for (std::size_t i = 0; i < px.size(); ++i) {
    const std::uint32_t bits = bytes[4 * i] | (bytes[4 * i + 1] << 8) |
                               (bytes[4 * i + 2] << 16) |
                               (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
    px[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return Image::clamped(width, height, channels, std::move(px));
}

struct ExternalBackend::Worker {
  pid_t pid = -1;
  int fd = -1;
  std::string buffer;
  std::uint64_t next_id = 0;
  bool busy = false;

  bool alive() const { return pid > 0; }

  void spawn(const std::vector<std::string>& command) {
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
      throw BackendError(std::string("socketpair failed: ") + std::strerror(errno));
    }
    std::vector<char*> argv;
    for (const auto& a : command) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);

    const pid_t child = ::fork();
    if (child < 0) {
      ::close(sv[0]);
      ::close(sv[1]);
      throw BackendError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (child == 0) {
      ::dup2(sv[1], STDIN_FILENO);
      ::dup2(sv[1], STDOUT_FILENO);
      ::execvp(argv[0], argv.data());
      ::_exit(127);
    }
    ::close(sv[1]);
    pid = child;
    fd = sv[0];
    buffer.clear();
  }

  void kill_now() {
    if (fd >= 0) ::close(fd);
    fd = -1;
    if (pid > 0) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, nullptr, 0);
    }
    pid = -1;
  }

  void send_line(const std::string& line) {
    std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("adapter write failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) {
    const auto deadline = Clock::now() + timeout;
    for (;;) {
      if (auto pos = buffer.find('\n'); pos != std::string::npos) {
        std::string line = buffer.substr(0, pos);
        buffer.erase(0, pos + 1);
        return line;
      }
      const auto left =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (left.count() <= 0) throw BackendError("adapter response timed out");
      pollfd pfd{fd, POLLIN, 0};
      const int r = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (r < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("poll failed: ") + std::strerror(errno));
      }
      if (r == 0) throw BackendError("adapter response timed out");
      char chunk[65536];
      const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("adapter read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw BackendError("adapter closed its output");
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
  }

  json request(json message, std::chrono::milliseconds timeout) {
    const std::uint64_t id = next_id++;
    message["id"] = id;
    send_line(message.dump());
    const std::string line = read_line(timeout);
    json reply;
    try {
      reply = json::parse(line);
    } catch (const json::parse_error&) {
      throw BackendError("adapter sent malformed JSON");
    }
    if (!reply.is_object() || !reply.contains("id") || reply["id"] != id) {
      throw BackendError("adapter response id does not echo the request");
    }
    if (!reply.value("ok", false)) {
      const auto err = reply.contains("error") && reply["error"].is_string()
                           ? reply["error"].get<std::string>()
                           : std::string("unknown");
      throw AdapterReportedError("adapter error: " + err);
    }
    return reply;
  }

  AdapterInfo hello(std::chrono::milliseconds timeout) {
    const json reply = request({{"op", "hello"}}, timeout);
    AdapterInfo info;
    try {
      info.name = reply.at("name").get<std::string>();
      info.version = reply.at("version").get<std::string>();
      info.deterministic = reply.at("deterministic").get<bool>();
      info.native_width = reply.at("native_width").get<int>();
      info.native_height = reply.at("native_height").get<int>();
    } catch (const json::exception& e) {
      throw BackendError(std::string("malformed adapter handshake: ") + e.what());
    }
    return info;
  }

  void shutdown(std::chrono::milliseconds timeout) {
    if (!alive()) return;
    try {
      request({{"op", "shutdown"}}, std::min(timeout, std::chrono::milliseconds(2000)));
    } catch (const Error&) {
      // The child may exit without replying; it is reaped below either way.
    }
    ::shutdown(fd, SHUT_WR);
    const auto deadline = Clock::now() + std::chrono::milliseconds(2000);
    while (Clock::now() < deadline) {
      if (::waitpid(pid, nullptr, WNOHANG) == pid) {
        pid = -1;
        break;
      }
      ::usleep(1000);
    }
    kill_now();
  }
};

ExternalBackend::ExternalBackend(ExternalBackendOptions options) : options_(std::move(options)) {
  if (options_.command.empty()) throw Error("external backend: empty command");
  if (options_.pool_size < 1) throw Error("external backend: pool size must be >= 1");
  for (int i = 0; i < options_.pool_size; ++i) {
    workers_.push_back(std::make_unique<Worker>());
  }
  auto& first = *workers_.front();
  first.spawn(options_.command);
  try {
    info_ = first.hello(options_.timeout);
  } catch (...) {
    first.kill_now();
    throw;
  }
}

ExternalBackend::~ExternalBackend() { shutdown(); }

void ExternalBackend::shutdown() {
  std::lock_guard lock(mutex_);
  for (auto& w : workers_) w->shutdown(options_.timeout);
}

std::string ExternalBackend::id() const { return "external:" + info_.name + "@" + info_.version; }

bool ExternalBackend::accepts(const Dims& dims) const {
  return dims.width == info_.native_width && dims.height == info_.native_height &&
         (dims.channels == 1 || dims.channels == 3);
}

ExternalBackend::Worker& ExternalBackend::acquire() const {
  std::unique_lock lock(mutex_);
  for (;;) {
    for (auto& w : workers_) {
      if (!w->busy) {
        w->busy = true;
        return *w;
      }
    }
    available_.wait(lock);
  }
}

void ExternalBackend::release(Worker& w) const {
  {
    std::lock_guard lock(mutex_);
    w.busy = false;
  }
  available_.notify_one();
}

Image ExternalBackend::reconstruct(const Image& x, std::uint64_t) const {
  if (!accepts(x.dims())) {
    throw Error("external backend: image is " + std::to_string(x.width()) + "x" +
                std::to_string(x.height()) + ", adapter expects " +
                std::to_string(info_.native_width) + "x" + std::to_string(info_.native_height));
  }
  Worker& w = acquire();
  struct Releaser {
    const ExternalBackend* self;
    Worker* w;
    ~Releaser() { self->release(*w); }
  } releaser{this, &w};

  try {
    if (!w.alive()) {
      w.spawn(options_.command);
      w.hello(options_.timeout);
    }
    const json reply = w.request({{"op", "reconstruct"},
                                  {"width", x.width()},
                                  {"height", x.height()},
                                  {"channels", x.channels()},
                                  {"pixels_b64", encode_wire_pixels(x)}},
                                 options_.timeout);
    const int width = reply.at("width").get<int>();
    const int height = reply.at("height").get<int>();
    const int channels = reply.at("channels").get<int>();
    if (Dims{width, height, channels} != x.dims()) {
      throw BackendError("adapter changed the image dimensions");
    }
    return decode_wire_pixels(reply.at("pixels_b64").get<std::string>(), width, height,
                              channels);
  } catch (const json::exception& e) {
    w.kill_now();
    throw BackendError(std::string("malformed adapter reply: ") + e.what());
  } catch (const AdapterReportedError&) {
    throw;
  } catch (const BackendError&) {
    w.kill_now();
    throw;
  }
}

}  // namespace aedr
