#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "aedr/image.hpp"

namespace aedr::test {

inline Image random_image(int w, int h, int c, std::mt19937_64& rng, double lo = 0.0,
                          double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> px(static_cast<std::size_t>(w) * h * c);
  for (auto& v : px) v = u(rng);
  return Image(w, h, c, std::move(px));
}

inline Image constant_image(int w, int h, int c, double value) {
  return Image(w, h, c, std::vector<double>(static_cast<std::size_t>(w) * h * c, value));
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("aedr-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace aedr::test
