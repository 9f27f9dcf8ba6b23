#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "aedr/glcm.hpp"
#include "aedr/losses.hpp"

namespace aedr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Parsed command line shared by every subcommand.
struct CliConfig {
  std::string command;
  std::string backend_path;
  std::string threshold_path;
  LossMetric loss = kDefaultLoss;
  GlcmConfig glcm;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  bool calibration_enabled = true;
  std::string output_path;
  bool pretty = false;
};

/// Runs one command. `args` excludes the program name. JSON goes to `out`,
/// diagnostics to `err`. Returns 0 on success, 1 on usage errors and 2 on
/// data or computation errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aedr::cli
