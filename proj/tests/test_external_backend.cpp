#include <doctest.h>

#include <cstring>
#include <random>
#include <thread>

#include "aedr/backend_io.hpp"
#include "aedr/base64.hpp"
#include "aedr/error.hpp"
#include "aedr/external_backend.hpp"
#include "aedr/json_io.hpp"
#include "aedr/signal.hpp"
#include "support.hpp"

using namespace aedr;

namespace {

ExternalBackendOptions fake(std::vector<std::string> extra = {}, int pool = 1,
                            std::chrono::milliseconds timeout = std::chrono::milliseconds(5000)) {
  std::vector<std::string> cmd{AEDR_FAKE_ADAPTER};
  cmd.insert(cmd.end(), extra.begin(), extra.end());
  return {cmd, pool, timeout};
}

Image f32_image(int w, int h, int c, std::mt19937_64& rng) {
  // Values representable in float32 survive the wire bit-exactly.
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<double> px(static_cast<std::size_t>(w) * h * c);
  for (auto& v : px) v = u(rng);
  return Image(w, h, c, px);
}

}  // namespace

TEST_CASE("base64 known vectors") {
  auto enc = [](std::string s) {
    return base64_encode({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  };
  CHECK(enc("") == "");
  CHECK(enc("f") == "Zg==");
  CHECK(enc("fo") == "Zm8=");
  CHECK(enc("foo") == "Zm9v");
  CHECK(enc("foobar") == "Zm9vYmFy");
  auto dec = base64_decode("Zm9vYg==");
  CHECK(std::string(dec.begin(), dec.end()) == "foob");
  CHECK_THROWS_AS(base64_decode("Zm9"), Error);
  CHECK_THROWS_AS(base64_decode("Zm=v"), Error);
  CHECK_THROWS_AS(base64_decode("Zm9v!A=="), Error);
}

TEST_CASE("wire pixels are little-endian float32") {
  Image img(2, 1, 1, {1.0, 0.5});
  auto bytes = base64_decode(encode_wire_pixels(img));
  REQUIRE(bytes.size() == 8);
  // 1.0f = 0x3f800000, 0.5f = 0x3f000000
  CHECK(bytes == std::vector<std::uint8_t>{0, 0, 0x80, 0x3f, 0, 0, 0, 0x3f});
  Image back = decode_wire_pixels(encode_wire_pixels(img), 2, 1, 1);
  CHECK(back == img);
  CHECK_THROWS_AS(decode_wire_pixels(encode_wire_pixels(img), 3, 1, 1), Error);

  float over = 1.5f;
  std::vector<std::uint8_t> raw(4);
  std::memcpy(raw.data(), &over, 4);
  CHECK(decode_wire_pixels(base64_encode(raw), 1, 1, 1).at(0, 0) == 1.0);
}

TEST_CASE("handshake and identity round trip") {
  ExternalBackend b(fake({"--native", "12", "9"}));
  CHECK(b.id() == "external:fake@1.0");
  CHECK(b.info().native_width == 12);
  CHECK(b.info().native_height == 9);
  CHECK(b.deterministic());
  CHECK(b.accepts(Dims{12, 9, 3}));
  CHECK_FALSE(b.accepts(Dims{9, 12, 1}));
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    Image x = f32_image(12, 9, i % 2 ? 3 : 1, rng);
    CHECK(b.reconstruct(x, i) == x);
  }
  CHECK_THROWS_AS(b.reconstruct(Image(4, 4, 1), 0), Error);
  auto rec = double_reconstruct(b, f32_image(12, 9, 1, rng), LossMetric::Mse, GlcmConfig{}, 0);
  CHECK(rec.degenerate);
  b.shutdown();
}

TEST_CASE("adapter output is used") {
  ExternalBackend b(fake({"--mode", "halve"}));
  Image x = test::constant_image(16, 16, 1, 0.5);
  Image r = b.reconstruct(x, 0);
  CHECK(r.at(3, 3) == 0.25);
  CHECK_FALSE(b.deterministic());
}

TEST_CASE("pool serves concurrent requests") {
  ExternalBackend b(fake({}, 3));
  std::vector<std::jthread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 6; ++t) {
    threads.emplace_back([&, t] {
      std::mt19937_64 rng(t);
      for (int i = 0; i < 10; ++i) {
        Image x = f32_image(16, 16, 1, rng);
        if (b.reconstruct(x, i) == x) ++ok;
      }
    });
  }
  threads.clear();
  CHECK(ok == 60);
}

TEST_CASE("adapter-reported errors keep the process") {
  ExternalBackend b(fake({"--mode", "dims", "--after", "1"}));
  Image x = test::constant_image(16, 16, 1, 0.25);
  CHECK(b.reconstruct(x, 0) == x);
  CHECK_THROWS_WITH_AS(b.reconstruct(x, 0), doctest::Contains("backend"), BackendError);
  CHECK_THROWS_AS(b.reconstruct(x, 0), BackendError);
}

TEST_CASE("protocol violations raise backend errors") {
  Image x = test::constant_image(16, 16, 1, 0.25);
  for (const char* mode : {"wrong-id", "garbage", "resize"}) {
    CAPTURE(mode);
    ExternalBackend b(fake({"--mode", mode}));
    CHECK_THROWS_AS(b.reconstruct(x, 0), BackendError);
  }
}

TEST_CASE("timeouts kill the child and the next call respawns it") {
  ExternalBackend b(fake({"--mode", "hang", "--after", "1"}, 1, std::chrono::milliseconds(300)));
  Image x = test::constant_image(16, 16, 1, 0.75);
  CHECK(b.reconstruct(x, 0) == x);
  auto start = std::chrono::steady_clock::now();
  CHECK_THROWS_WITH_AS(b.reconstruct(x, 0), doctest::Contains("timed out"), BackendError);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(5));
  // Fresh child: its first reconstruct is served normally.
  CHECK(b.reconstruct(x, 0) == x);
}

TEST_CASE("crashed children are respawned") {
  ExternalBackend b(fake({"--mode", "crash", "--after", "1"}));
  Image x = test::constant_image(16, 16, 1, 0.375);
  CHECK(b.reconstruct(x, 0) == x);
  CHECK_THROWS_AS(b.reconstruct(x, 0), BackendError);
  CHECK(b.reconstruct(x, 0) == x);
}

TEST_CASE("startup failures") {
  CHECK_THROWS_AS(ExternalBackend(ExternalBackendOptions{{"/nonexistent/adapter"}, 1,
                                                         std::chrono::milliseconds(2000)}),
                  BackendError);
  CHECK_THROWS_AS(ExternalBackend(ExternalBackendOptions{{}, 1, std::chrono::milliseconds(10)}),
                  Error);
}

TEST_CASE("external backend from a description file") {
  test::TempDir dir("ext");
  write_text_file(dir / "ext.json",
                  dump_json({{"schema_version", 1},
                             {"kind", "external"},
                             {"command", {AEDR_FAKE_ADAPTER, "--native", "8", "8"}},
                             {"pool_size", 2},
                             {"timeout_ms", 5000}}));
  auto b = load_backend(dir / "ext.json");
  CHECK(b->id() == "external:fake@1.0");
  Image x = test::constant_image(8, 8, 3, 0.25);
  CHECK(b->reconstruct(x, 0) == x);
}
