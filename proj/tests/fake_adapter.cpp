// Test double for an external reconstructor. Speaks the newline-delimited JSON
// protocol on stdin/stdout and misbehaves on request.
//
//   fake_adapter [--mode M] [--native W H] [--after N]
//
// Modes: identity (default), halve, dims, wrong-id, garbage, hang, crash,
// resize. Faulty modes behave like identity for the first N reconstructs.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

#include "aedr/external_backend.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
  std::string mode = "identity";
  int native_w = 16, native_h = 16, after = 0;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--mode" && i + 1 < argc) mode = argv[++i];
    else if (a == "--native" && i + 2 < argc) {
      native_w = std::atoi(argv[++i]);
      native_h = std::atoi(argv[++i]);
    } else if (a == "--after" && i + 1 < argc) after = std::atoi(argv[++i]);
  }

  std::string line;
  int served = 0;
  while (std::getline(std::cin, line)) {
    json req, rep;
    try {
      req = json::parse(line);
    } catch (const json::exception&) {
      std::cout << json{{"id", nullptr}, {"ok", false}, {"error", "parse"}}.dump() << std::endl;
      continue;
    }
    rep["id"] = req["id"];
    const std::string op = req.value("op", "");
    if (op == "hello") {
      rep.update({{"ok", true}, {"name", "fake"}, {"version", "1.0"}, {"deterministic", mode == "identity"},
                  {"native_width", native_w}, {"native_height", native_h}});
    } else if (op == "shutdown") {
      rep["ok"] = true;
      std::cout << rep.dump() << std::endl;
      return 0;
    } else if (op == "reconstruct") {
      const bool faulty = served++ >= after;
      const int w = req["width"], h = req["height"], c = req["channels"];
      if (w != native_w || h != native_h) {
        rep.update({{"ok", false}, {"error", "dims"}});
      } else if (faulty && mode == "dims") {
        rep.update({{"ok", false}, {"error", "backend"}});
      } else if (faulty && mode == "crash") {
        return 3;
      } else if (faulty && mode == "hang") {
        std::this_thread::sleep_for(std::chrono::seconds(30));
        return 0;
      } else if (faulty && mode == "garbage") {
        std::cout << "{not json" << std::endl;
        continue;
      } else {
        std::string px = req["pixels_b64"];
        if (mode == "halve") {
          aedr::Image img = aedr::decode_wire_pixels(px, w, h, c);
          std::vector<double> half(img.pixels().begin(), img.pixels().end());
          for (auto& v : half) v *= 0.5;
          px = aedr::encode_wire_pixels(aedr::Image(w, h, c, half));
        }
        rep.update({{"ok", true}, {"width", w}, {"height", h}, {"channels", c}, {"pixels_b64", px}});
        if (faulty && mode == "wrong-id") rep["id"] = req["id"].get<long long>() + 1000;
        if (faulty && mode == "resize") rep["width"] = w - 1;
      }
    } else {
      rep.update({{"ok", false}, {"error", "op"}});
    }
    std::cout << rep.dump() << std::endl;
  }
  return 0;
}
